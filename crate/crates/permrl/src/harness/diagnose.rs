//! Group-count diagnostic: are the difficulty groups statistically distinct?
//!
//! Runs one validation sweep with a checkpoint, clusters the state matrix,
//! and tests every pair of groups for distributional identity. A pair whose
//! two-sample p-value reaches the significance level is evidence the group
//! count is too high — two clusters are modelling one distribution.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curriculum::{
    group_count_diagnostic, group_permutations, validate, CurriculumError, ModelProbe, RunConfig,
};
use crate::nncore::{ParamStore, RngState};
use crate::orderingnet::OrderingModel;
use crate::permset::PermutationSet;
use crate::toydata::{generate, TaskKind};

/// The pairwise p-value matrix and verdict for one (checkpoint, group count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub task: String,
    pub n_groups: usize,
    pub alpha: f64,
    pub group_sizes: Vec<usize>,
    /// `p_values[i][j]` for groups i, j; diagonal fixed at 1.
    pub p_values: Vec<Vec<f64>>,
    /// Off-diagonal pairs with p ≥ alpha, i.e. statistically indistinct.
    pub indistinct_pairs: Vec<(usize, usize)>,
    pub too_many_groups: bool,
}

impl DiagnoseReport {
    /// Square CSV of p-values with group ids on both axes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group");
        for j in 0..self.n_groups {
            out.push_str(&format!(",g{j}"));
        }
        out.push('\n');
        for (i, row) in self.p_values.iter().enumerate() {
            out.push_str(&format!("g{i}"));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn verdict(&self) -> String {
        if self.too_many_groups {
            let pairs: Vec<String> = self
                .indistinct_pairs
                .iter()
                .map(|(a, b)| format!("({a},{b})"))
                .collect();
            format!(
                "too many groups: {} pair(s) indistinct at alpha={}: {}",
                pairs.len(),
                self.alpha,
                pairs.join(" ")
            )
        } else {
            format!("group count supported at alpha={}", self.alpha)
        }
    }
}

/// Validates with the checkpoint, clusters into `n_groups`, and applies the
/// pairwise distribution test at level `alpha`.
pub fn cmd_diagnose_groups(
    config: &RunConfig,
    checkpoint: &Path,
    task: TaskKind,
    n_groups: usize,
    alpha: f64,
) -> Result<DiagnoseReport, CurriculumError> {
    config.validate()?;
    let model = OrderingModel::new(config.model_config())?;
    let mut store = ParamStore::new();
    let mut rng = RngState::new(config.subsystem_seed("model-init"));
    model.register(&mut store, &mut rng)?;
    store.load_into(checkpoint)?;

    let (perm_label, n_parts, pool) = match task {
        TaskKind::Spatial => ("perms-spatial", config.grid * config.grid, config.spatial_perms),
        TaskKind::Temporal => ("perms-temporal", config.frames, config.temporal_perms),
    };
    let set = PermutationSet::generate(n_parts, pool, config.subsystem_seed(perm_label))?;
    let dataset = generate(&config.data_spec(task))?;

    let mut probe = ModelProbe::new(&model, &store, task);
    let state = validate(&mut probe, &dataset.val, &set, task)?;
    let grouping = group_permutations(
        &state,
        n_groups,
        config.subsystem_seed("kmeans-diagnose"),
    )?;
    let diagnostic = group_count_diagnostic(&state, &grouping, alpha)?;

    Ok(DiagnoseReport {
        task: task.label().to_string(),
        n_groups,
        alpha,
        group_sizes: grouping.sizes(),
        p_values: diagnostic.p_values,
        indistinct_pairs: diagnostic.indistinct_pairs,
        too_many_groups: diagnostic.too_many_groups,
    })
}
