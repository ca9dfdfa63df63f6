//! Compute-cost accounting: what the validation sweeps cost relative to the
//! training itself, measured from a run's counters and predicted in closed
//! form.
//!
//! All costs are expressed in batch-equivalents: one unit is one forward
//! pass of a full training batch. A validation sweep evaluates every
//! (permutation, validation sample) pair once, so it costs
//! |Ψ|·|X_val|/B batch-equivalents.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curriculum::{read_jsonl, CurriculumError, RunConfig, ValidationRecord};

/// Batch-equivalents of a single validation sweep: |Ψ|·|X_val|/B.
pub fn validation_sweep_batches(n_val: usize, n_perms: usize, batch_size: usize) -> f64 {
    (n_val as f64 * n_perms as f64) / batch_size as f64
}

/// Overhead of interleaving validations with training:
/// episodes · sweeps-per-episode · sweep-cost / training batches.
pub fn overhead_ratio(
    episodes: usize,
    sweeps_per_episode: usize,
    sweep_batches: f64,
    training_batches: f64,
) -> f64 {
    if training_batches == 0.0 {
        return 0.0;
    }
    episodes as f64 * sweeps_per_episode as f64 * sweep_batches / training_batches
}

/// Cost summary of a completed run, with the closed-form prediction beside
/// the measured counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub episodes: usize,
    pub validation_events: usize,
    /// Per-sample forward passes, measured.
    pub validation_forwards: u64,
    pub training_forwards: u64,
    pub batch_size: usize,
    /// Measured counters in batch-equivalents.
    pub validation_batches: f64,
    pub training_batches: f64,
    /// validation_batches / training_batches, measured.
    pub measured_overhead: f64,
    /// The same ratio predicted from the config alone.
    pub predicted_overhead: f64,
}

impl CostReport {
    pub fn to_text(&self) -> String {
        format!(
            "episodes: {}\nvalidation events: {}\nvalidation forwards: {} ({} batch-equivalents)\n\
             training forwards: {} ({} batches)\nmeasured overhead: {:.4}%\npredicted overhead: {:.4}%\n",
            self.episodes,
            self.validation_events,
            self.validation_forwards,
            self.validation_batches,
            self.training_forwards,
            self.training_batches,
            self.measured_overhead * 100.0,
            self.predicted_overhead * 100.0,
        )
    }
}

/// Closed-form batch-equivalent costs of a configured run: (validation
/// batches, training batches), iterating the episode/task activity exactly
/// as the driver does.
pub fn predicted_batches(config: &RunConfig) -> (f64, f64) {
    let mut validation = 0.0;
    let mut training = 0.0;
    let steps = (config.free_steps_per_episode + config.policy_batches_per_episode) as f64;
    for t in 0..config.episodes {
        for (active, n_perms) in [
            (
                config.mode.spatial_active(t, config.episodes),
                config.spatial_perms,
            ),
            (
                config.mode.temporal_active(t, config.episodes),
                config.temporal_perms,
            ),
        ] {
            if active {
                validation +=
                    2.0 * validation_sweep_batches(config.n_val, n_perms, config.batch_size);
                training += steps;
            }
        }
    }
    (validation, training)
}

/// Reads `config.json` and `metrics.jsonl` from a run directory and compares
/// measured counters with the closed-form prediction.
pub fn cmd_cost_report(run_dir: &Path) -> Result<CostReport, CurriculumError> {
    let config: RunConfig = serde_json::from_str(&std::fs::read_to_string(
        run_dir.join("config.json"),
    )?)?;
    let metrics: Vec<ValidationRecord> = read_jsonl(&run_dir.join("metrics.jsonl"))?;
    if metrics.is_empty() {
        return Err(CurriculumError::NoRecords(
            "metrics.jsonl holds no validation events".into(),
        ));
    }

    // Each event swept |Ψ|·|X_val| pairs; everything else in the cumulative
    // counter is training.
    let validation_forwards: u64 = metrics
        .iter()
        .map(|r| (r.perm_errors.len() * config.n_val) as u64)
        .sum();
    let total = metrics.last().expect("nonempty").forward_pass_total;
    let training_forwards = total.checked_sub(validation_forwards).ok_or_else(|| {
        CurriculumError::NoRecords(format!(
            "cumulative counter {total} is smaller than the validation total {validation_forwards}"
        ))
    })?;

    let b = config.batch_size as f64;
    let validation_batches = validation_forwards as f64 / b;
    let training_batches = training_forwards as f64 / b;
    let (predicted_validation, predicted_training) = predicted_batches(&config);
    Ok(CostReport {
        episodes: config.episodes,
        validation_events: metrics.len(),
        validation_forwards,
        training_forwards,
        batch_size: config.batch_size,
        validation_batches,
        training_batches,
        measured_overhead: if training_batches == 0.0 {
            0.0
        } else {
            validation_batches / training_batches
        },
        predicted_overhead: if predicted_training == 0.0 {
            0.0
        } else {
            predicted_validation / predicted_training
        },
    })
}
