//! Validation of an ordering model against every permutation in play.
//!
//! The result is a confidence-ratio matrix with one row per permutation and
//! one column per validation sample, plus the aggregate ordering error. The
//! ratio for entry `(l, v)` compares the softmax mass the model puts on the
//! true permutation `l` against its strongest competitor:
//!
//! ```text
//! ratio = (p[l] + 1) / (p[competitor] + 1),
//! competitor = argmax over classes i != l (smallest index on ties)
//! ```
//!
//! Because softmax outputs live in \[0, 1\], every ratio lies in
//! \[0.5, 2.0\]; a ratio above 1 holds exactly when the model strictly
//! prefers the true permutation over every alternative.

use crate::nncore::{softmax, Matrix, ParamStore};
use crate::orderingnet::OrderingModel;
use crate::permset::PermutationSet;
use crate::toydata::{make_permuted_batch, Sample, TaskKind};

use super::CurriculumError;

/// Snapshot of model competence: confidence ratios per (permutation, sample),
/// per-permutation error rates, the overall ordering error, and the number of
/// forward passes the validation consumed.
#[derive(Debug, Clone)]
pub struct NetworkStateMatrix {
    pub task: TaskKind,
    /// `ratios.get(l, v)` is the confidence ratio for permutation `l` applied
    /// to validation sample `v`.
    pub ratios: Matrix,
    /// `1 - (fraction of validation samples argmax-classified as l)` per row.
    pub per_perm_error: Vec<f64>,
    /// Mean of `per_perm_error`: the overall ordering error in \[0, 1\].
    pub error: f64,
    /// Forward passes consumed: number of permutations × validation size.
    pub forwards: u64,
}

impl NetworkStateMatrix {
    pub fn n_perms(&self) -> usize {
        self.ratios.rows()
    }

    pub fn n_samples(&self) -> usize {
        self.ratios.cols()
    }
}

/// Anything that can map a permuted parts batch to class probabilities.
///
/// `perm_id` identifies which permutation produced the batch; a real model
/// ignores it (it must infer the permutation from the parts), while test
/// oracles use it to synthesize perfectly confident or uninformative output.
pub trait ValidationProbe {
    fn n_classes(&self) -> usize;

    /// Returns a batch × n_classes matrix of probabilities (rows sum to 1).
    fn probs(&mut self, perm_id: usize, parts: &[Matrix]) -> Matrix;
}

/// Probe backed by the real ordering network (one head per task).
pub struct ModelProbe<'a> {
    model: &'a OrderingModel,
    store: &'a ParamStore,
    task: TaskKind,
}

impl<'a> ModelProbe<'a> {
    pub fn new(model: &'a OrderingModel, store: &'a ParamStore, task: TaskKind) -> Self {
        Self { model, store, task }
    }
}

impl ValidationProbe for ModelProbe<'_> {
    fn n_classes(&self) -> usize {
        match self.task {
            TaskKind::Spatial => self.model.config().n_spatial_classes,
            TaskKind::Temporal => self.model.config().n_temporal_classes,
        }
    }

    fn probs(&mut self, _perm_id: usize, parts: &[Matrix]) -> Matrix {
        let logits = match self.task {
            TaskKind::Spatial => self.model.forward_spatial(self.store, parts).1,
            TaskKind::Temporal => self.model.forward_temporal(self.store, parts).1,
        };
        softmax(&logits)
    }
}

/// Probe that answers with full confidence on the true permutation. Useful as
/// a fixed point: it yields zero error and every ratio exactly 2.0.
pub struct OracleProbe {
    n_classes: usize,
}

impl OracleProbe {
    pub fn new(n_classes: usize) -> Self {
        Self { n_classes }
    }
}

impl ValidationProbe for OracleProbe {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn probs(&mut self, perm_id: usize, parts: &[Matrix]) -> Matrix {
        let batch = parts.first().map(Matrix::rows).unwrap_or(0);
        let mut out = Matrix::zeros(batch, self.n_classes);
        for r in 0..batch {
            out.set(r, perm_id, 1.0);
        }
        out
    }
}

/// Probe that spreads probability uniformly: every ratio is 1.0 and the
/// error equals `1 - 1/n_classes` (argmax ties resolve to class 0).
pub struct UniformProbe {
    n_classes: usize,
}

impl UniformProbe {
    pub fn new(n_classes: usize) -> Self {
        Self { n_classes }
    }
}

impl ValidationProbe for UniformProbe {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn probs(&mut self, _perm_id: usize, parts: &[Matrix]) -> Matrix {
        let batch = parts.first().map(Matrix::rows).unwrap_or(0);
        let mut out = Matrix::zeros(batch, self.n_classes);
        out.fill(1.0 / self.n_classes as f64);
        out
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn competitor_index(row: &[f64], label: usize) -> usize {
    let mut best = None;
    for (i, &v) in row.iter().enumerate() {
        if i == label {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) => {
                if v > row[b] {
                    best = Some(i);
                }
            }
        }
    }
    best.expect("probe must emit at least two classes")
}

/// Runs the probe over every (permutation, validation sample) pair without
/// jitter and assembles the state matrix for `task`.
pub fn validate(
    probe: &mut dyn ValidationProbe,
    samples: &[Sample],
    set: &PermutationSet,
    task: TaskKind,
) -> Result<NetworkStateMatrix, CurriculumError> {
    if samples.is_empty() {
        return Err(CurriculumError::EmptyValidation);
    }
    if probe.n_classes() != set.len() {
        return Err(CurriculumError::ClassCount {
            probe: probe.n_classes(),
            set: set.len(),
        });
    }
    let n_perms = set.len();
    let n_samples = samples.len();

    let mut ratios = Matrix::zeros(n_perms, n_samples);
    let mut per_perm_error = Vec::with_capacity(n_perms);

    for l in 0..n_perms {
        let assignments: Vec<(usize, usize)> = (0..n_samples).map(|v| (v, l)).collect();
        let batch = make_permuted_batch(samples, set, &assignments, None)?;
        let probs = probe.probs(l, &batch.parts);
        assert_eq!(probs.rows(), n_samples, "probe batch size mismatch");
        assert_eq!(probs.cols(), n_perms, "probe class count mismatch");

        let mut correct = 0usize;
        for v in 0..n_samples {
            let row = probs.row(v);
            let competitor = competitor_index(row, l);
            ratios.set(l, v, (row[l] + 1.0) / (row[competitor] + 1.0));
            if argmax(row) == l {
                correct += 1;
            }
        }
        per_perm_error.push(1.0 - correct as f64 / n_samples as f64);
    }

    let error = per_perm_error.iter().sum::<f64>() / n_perms as f64;
    Ok(NetworkStateMatrix {
        task,
        ratios,
        per_perm_error,
        error,
        forwards: (n_perms * n_samples) as u64,
    })
}
