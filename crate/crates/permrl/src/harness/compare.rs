//! Head-to-head value of the learned selection: policy vs uniform vs
//! inverted selection, continued from a shared warmup checkpoint.
//!
//! Per seed, one warmup run trains the network and its per-task policies.
//! Three continuation runs then start from that same checkpoint and train
//! for one epoch-equivalent (one pass over the training split, all of it
//! policy-chosen batches), differing only in how groups are selected:
//! learned, uniform, or inverse of the learned distribution (frozen). Final
//! validation accuracies are reported relative to the uniform run of the
//! same seed, averaged over seeds.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curriculum::{run_training, CurriculumError, RunConfig, TrainMode};

/// Accuracies of one selection mode across the compared seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeOutcome {
    pub mode: String,
    /// Final validation ordering accuracy (1 − error) per seed.
    pub accuracy: Vec<f64>,
    /// Percent accuracy relative to the uniform run of the same seed.
    pub relative: Vec<f64>,
    pub mean_relative: f64,
    /// Population standard deviation over seeds.
    pub std_relative: f64,
}

/// The full comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub seeds: Vec<u64>,
    pub warmup_episodes: usize,
    /// Episodes per continuation (one epoch-equivalent of batches).
    pub epoch_episodes: usize,
    /// Outcomes in the order policy, random, inverse.
    pub outcomes: Vec<ModeOutcome>,
}

impl CompareReport {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("mode,mean_relative,std_relative\n");
        for o in &self.outcomes {
            out.push_str(&format!(
                "{},{},{}\n",
                o.mode, o.mean_relative, o.std_relative
            ));
        }
        out
    }

    pub fn detail_csv(&self) -> String {
        let mut out = String::from("mode,seed,accuracy,relative\n");
        for o in &self.outcomes {
            for ((&seed, &acc), &rel) in
                self.seeds.iter().zip(&o.accuracy).zip(&o.relative)
            {
                out.push_str(&format!("{},{seed},{acc},{rel}\n", o.mode));
            }
        }
        out
    }

    pub fn outcome(&self, mode: &str) -> Option<&ModeOutcome> {
        self.outcomes.iter().find(|o| o.mode == mode)
    }
}

/// Episodes that amount to one pass over the training split when every batch
/// is policy-chosen: ⌈n_train / (K·B)⌉.
pub fn epoch_episodes(config: &RunConfig) -> usize {
    let per_episode = config.policy_batches_per_episode * config.batch_size;
    config.n_train.div_ceil(per_episode.max(1)).max(1)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / values.len() as f64;
    (mean, var.sqrt())
}

/// Runs the warmup + three continuations per seed, writing each run under
/// `work_dir/seed{N}/{warmup,policy,random,inverse}`.
pub fn cmd_compare(
    config: &RunConfig,
    seeds: &[u64],
    warmup_episodes: usize,
    work_dir: &Path,
) -> Result<CompareReport, CurriculumError> {
    if seeds.len() < 2 {
        return Err(CurriculumError::NoRecords(format!(
            "mode comparison needs at least 2 seeds, got {}",
            seeds.len()
        )));
    }
    if warmup_episodes == 0 || config.policy_batches_per_episode == 0 {
        return Err(CurriculumError::NoRecords(
            "mode comparison needs warmup episodes and policy batches >= 1".into(),
        ));
    }

    let modes = [TrainMode::Policy, TrainMode::Random, TrainMode::Inverse];
    let epoch = epoch_episodes(config);
    let mut accuracy: Vec<Vec<f64>> = vec![Vec::new(); modes.len()];

    for &seed in seeds {
        let seed_dir = work_dir.join(format!("seed{seed}"));
        let warmup_config = RunConfig {
            seed,
            mode: TrainMode::Policy,
            episodes: warmup_episodes,
            ..config.clone()
        };
        warmup_config.validate()?;
        let warmup_dir = seed_dir.join("warmup");
        run_training(&warmup_config, Some(&warmup_dir))?;

        let path_str = |name: &str| warmup_dir.join(name).display().to_string();
        for (i, &mode) in modes.iter().enumerate() {
            let continuation = RunConfig {
                mode,
                episodes: epoch,
                free_steps_per_episode: 0,
                init_model: Some(path_str("model.ckpt")),
                init_policy_spatial: Some(path_str("policy_spatial.ckpt")),
                init_policy_temporal: Some(path_str("policy_temporal.ckpt")),
                ..warmup_config.clone()
            };
            let summary =
                run_training(&continuation, Some(&seed_dir.join(mode.label())))?;
            let error = summary
                .final_error()
                .expect("a continuation run always validates");
            accuracy[i].push(1.0 - error);
        }
    }

    let random_accuracy = accuracy[1].clone();
    let outcomes = modes
        .iter()
        .zip(accuracy)
        .map(|(mode, acc)| {
            let relative: Vec<f64> = acc
                .iter()
                .zip(&random_accuracy)
                .map(|(a, r)| 100.0 * a / r)
                .collect();
            let (mean_relative, std_relative) = mean_std(&relative);
            ModeOutcome {
                mode: mode.label().to_string(),
                accuracy: acc,
                relative,
                mean_relative,
                std_relative,
            }
        })
        .collect();

    Ok(CompareReport {
        seeds: seeds.to_vec(),
        warmup_episodes,
        epoch_episodes: epoch,
        outcomes,
    })
}
