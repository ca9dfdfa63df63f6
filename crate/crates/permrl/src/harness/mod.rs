//! Command layer: everything the CLI can do, as pure library functions.
//!
//! Each command is a deterministic function of its configuration, seed, and
//! input files — rerunning one produces byte-identical outputs. Submodules:
//!
//! - [`retrieval`] — nearest-neighbor evaluation of encoder features.
//! - [`selection`] — quartile and Hamming-distance selection reports.
//! - [`heatmap`] — per-permutation error trajectories.
//! - [`cost`] — validation-vs-training compute accounting.
//! - [`sweep`] — validation-set-size stability sweep.
//! - [`diagnose`] — statistical check of the group count.
//! - [`compare`] — policy vs uniform vs inverse selection from a shared
//!   checkpoint.

mod compare;
mod cost;
mod diagnose;
mod heatmap;
mod retrieval;
mod selection;
mod sweep;

pub use compare::{cmd_compare, epoch_episodes, CompareReport, ModeOutcome};
pub use cost::{
    cmd_cost_report, overhead_ratio, predicted_batches, validation_sweep_batches, CostReport,
};
pub use diagnose::{cmd_diagnose_groups, DiagnoseReport};
pub use heatmap::{error_heatmap, ErrorHeatmap};
pub use retrieval::{cmd_eval_nn, retrieval_report, split_features, RetrievalReport, DEFAULT_KS};
pub use selection::{hamming_csv, hamming_rows, quartile_csv, quartile_rows, HammingRow, QuartileRow};
pub use sweep::{cmd_valsize_sweep, sweep_csv, SweepRow};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curriculum::{
    read_jsonl, run_training, CurriculumError, EpisodeRecord, RunConfig, RunSummary,
    ValidationRecord,
};
use crate::permset::PermutationSet;
use crate::toydata::{generate, TaskKind};

/// Summary printed after `gen-perms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermSetSummary {
    pub n: usize,
    pub size: usize,
    pub seed: u64,
    pub min_pairwise_hamming: usize,
}

/// Generates a maximally-diverse permutation pool and optionally saves it.
pub fn cmd_gen_perms(
    n: usize,
    size: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<PermSetSummary, CurriculumError> {
    let set = PermutationSet::generate(n, size, seed)?;
    if let Some(path) = out {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        set.save(path)?;
    }
    Ok(PermSetSummary {
        n,
        size: set.len(),
        seed,
        min_pairwise_hamming: set.min_pairwise_hamming(),
    })
}

/// Summary printed after `make-data`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub task: String,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub parts_per_sample: usize,
    pub part_dim: usize,
}

/// Generates one task's dataset from the config and optionally saves it.
pub fn cmd_make_data(
    config: &RunConfig,
    task: TaskKind,
    out: Option<&Path>,
) -> Result<DataSummary, CurriculumError> {
    config.validate()?;
    let spec = config.data_spec(task);
    let dataset = generate(&spec)?;
    if let Some(path) = out {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        dataset.save(path)?;
    }
    Ok(DataSummary {
        task: task.label().to_string(),
        n_train: dataset.train.len(),
        n_val: dataset.val.len(),
        n_test: dataset.test.len(),
        parts_per_sample: spec.parts_per_sample(),
        part_dim: spec.part_dim(),
    })
}

/// Runs training, writing all artifacts into `out_dir`.
pub fn cmd_train(config: &RunConfig, out_dir: &Path) -> Result<RunSummary, CurriculumError> {
    run_training(config, Some(out_dir))
}

/// Loads a run's validation records, filtered to one task.
pub fn load_task_metrics(
    run_dir: &Path,
    task: &str,
) -> Result<Vec<ValidationRecord>, CurriculumError> {
    let all: Vec<ValidationRecord> = read_jsonl(&run_dir.join("metrics.jsonl"))?;
    let records: Vec<ValidationRecord> =
        all.into_iter().filter(|r| r.task == task).collect();
    if records.is_empty() {
        return Err(CurriculumError::NoRecords(format!(
            "no validation records for task {task} in {}",
            run_dir.display()
        )));
    }
    Ok(records)
}

/// Loads a run's episode records, filtered to one task.
pub fn load_task_episodes(
    run_dir: &Path,
    task: &str,
) -> Result<Vec<EpisodeRecord>, CurriculumError> {
    let all: Vec<EpisodeRecord> = read_jsonl(&run_dir.join("episodes.jsonl"))?;
    let records: Vec<EpisodeRecord> =
        all.into_iter().filter(|r| r.task == task).collect();
    if records.is_empty() {
        return Err(CurriculumError::NoRecords(format!(
            "no episode records for task {task} in {}",
            run_dir.display()
        )));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gen_perms_reports_and_saves_the_pool() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.txt");
        let summary = cmd_gen_perms(4, 12, 3, Some(&path)).unwrap();
        assert_eq!(summary.size, 12);
        assert!(summary.min_pairwise_hamming >= 2);
        let reloaded = PermutationSet::load(&path).unwrap();
        assert_eq!(reloaded.len(), 12);
        assert_eq!(reloaded.min_pairwise_hamming(), summary.min_pairwise_hamming);
    }

    #[test]
    fn make_data_round_trips_through_disk() {
        let config = RunConfig {
            grid: 2,
            frames: 3,
            part_extent: 2,
            n_pattern_classes: 3,
            n_train: 10,
            n_val: 4,
            n_test: 2,
            spatial_perms: 8,
            temporal_perms: 6,
            ..RunConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.bin");
        let summary = cmd_make_data(&config, TaskKind::Temporal, Some(&path)).unwrap();
        assert_eq!(summary.task, "temporal");
        assert_eq!(summary.n_train, 10);
        assert_eq!(summary.parts_per_sample, 3);
        let loaded = crate::toydata::Dataset::load(&path).unwrap();
        assert_eq!(loaded.train.len(), 10);
        assert_eq!(loaded.spec, config.data_spec(TaskKind::Temporal));
    }

    #[test]
    fn missing_task_records_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("metrics.jsonl"), "").unwrap();
        let err = load_task_metrics(dir.path(), "spatial").unwrap_err();
        assert!(matches!(err, CurriculumError::NoRecords(_)));
    }
}
