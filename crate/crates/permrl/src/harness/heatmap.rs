//! Per-permutation error trajectories as a CSV heatmap.
//!
//! Rows are permutations sorted by their mean error over the run (ascending,
//! ties toward the smaller id); columns are validation events in
//! chronological order. The result shows which permutations stayed hard.

use crate::curriculum::{CurriculumError, ValidationRecord};

/// A |Ψ| × events matrix of per-permutation error rates, plus the ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorHeatmap {
    /// Permutation ids, sorted by ascending mean error.
    pub perm_ids: Vec<usize>,
    /// `mean_error[i]` is the run-mean error of `perm_ids[i]`; non-decreasing.
    pub mean_error: Vec<f64>,
    /// `errors[i][e]` is the error of `perm_ids[i]` at validation event `e`.
    pub errors: Vec<Vec<f64>>,
}

impl ErrorHeatmap {
    pub fn n_events(&self) -> usize {
        self.errors.first().map_or(0, Vec::len)
    }

    /// `perm,mean,v0,v1,...` — one row per permutation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("perm,mean");
        for e in 0..self.n_events() {
            out.push_str(&format!(",v{e}"));
        }
        out.push('\n');
        for (i, &perm) in self.perm_ids.iter().enumerate() {
            out.push_str(&format!("{perm},{}", self.mean_error[i]));
            for v in &self.errors[i] {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the heatmap from one task's validation records, in stream order.
pub fn error_heatmap(records: &[ValidationRecord]) -> Result<ErrorHeatmap, CurriculumError> {
    if records.is_empty() {
        return Err(CurriculumError::NoRecords(
            "error heatmap needs at least one validation record".into(),
        ));
    }
    let n_perms = records[0].perm_errors.len();
    for r in records {
        if r.perm_errors.len() != n_perms {
            return Err(CurriculumError::NoRecords(format!(
                "validation event at episode {} carries {} per-permutation errors, expected {}",
                r.episode,
                r.perm_errors.len(),
                n_perms
            )));
        }
    }

    let mut order: Vec<(f64, usize)> = (0..n_perms)
        .map(|p| {
            let mean =
                records.iter().map(|r| r.perm_errors[p]).sum::<f64>() / records.len() as f64;
            (mean, p)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    Ok(ErrorHeatmap {
        perm_ids: order.iter().map(|&(_, p)| p).collect(),
        mean_error: order.iter().map(|&(m, _)| m).collect(),
        errors: order
            .iter()
            .map(|&(_, p)| records.iter().map(|r| r.perm_errors[p]).collect())
            .collect(),
    })
}
