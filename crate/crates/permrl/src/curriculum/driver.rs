//! The training driver: the full alternation of free dual-task steps,
//! validations, policy-chosen episode batches, rewards, and policy updates.
//!
//! Episode batches are group-targeted only in the modes that exercise a
//! selection distribution (policy, inverse, and the single-task variants).
//! Random and serial modes bypass the policy entirely — their episode
//! batches draw permutations uniformly from the whole pool, exactly like
//! the free phase — so they are plain self-supervised baselines with the
//! same step count and validation cadence.
//!
//! One run is a pure function of its [`RunConfig`]: every random draw comes
//! from a counter-based generator seeded by `derive_seed(master, label)`, so
//! two runs with the same config produce byte-identical records and
//! checkpoints. Data, permutation pools, and weight initialization use
//! mode-independent labels, which makes runs that differ only in `mode`
//! controlled A/B experiments: identical inputs, identical starting weights,
//! different permutation selection.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::nncore::{ParamStore, RngState};
use crate::orderingnet::OrderingModel;
use crate::permset::PermutationSet;
use crate::policy::PolicyNet;
use crate::toydata::{generate, make_permuted_batch, Dataset, PartsBatch, TaskKind};

use super::config::RunConfig;
use super::grouping::{aggregate_state, group_permutations, slot_medians, Grouping, GroupedState};
use super::records::{write_jsonl, EpisodeRecord, ValidationRecord};
use super::reward::{compute_reward, extrapolated_error};
use super::state::{validate, ModelProbe, NetworkStateMatrix};
use super::CurriculumError;

/// Everything a completed run produced, in memory. The same records are
/// written to `metrics.jsonl` / `episodes.jsonl` when an output directory is
/// given.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    /// One record per validation event, in the order they happened.
    pub validations: Vec<ValidationRecord>,
    /// One record per (episode, active task).
    pub episodes: Vec<EpisodeRecord>,
    /// Per-sample forward passes spent on training batches.
    pub training_forwards: u64,
    /// Per-sample forward passes spent on validation sweeps.
    pub validation_forwards: u64,
    /// Optimizer steps taken (each may train one or both heads).
    pub train_steps: u64,
    /// Final post-episode validation error per task, where the task ran.
    pub final_spatial_error: Option<f64>,
    pub final_temporal_error: Option<f64>,
}

impl RunSummary {
    pub fn forward_pass_total(&self) -> u64 {
        self.training_forwards + self.validation_forwards
    }

    /// Mean of the final errors of whichever tasks ran.
    pub fn final_error(&self) -> Option<f64> {
        let errors: Vec<f64> = self
            .final_spatial_error
            .iter()
            .chain(self.final_temporal_error.iter())
            .copied()
            .collect();
        if errors.is_empty() {
            None
        } else {
            Some(errors.iter().sum::<f64>() / errors.len() as f64)
        }
    }
}

/// Per-task mutable context: its data, permutation pool, policy, and the
/// running error history feeding the extrapolated baseline.
struct TaskRuntime {
    kind: TaskKind,
    dataset: Dataset,
    set: PermutationSet,
    policy: PolicyNet,
    /// Every validation error of this task, pre and post alike, in order.
    errors: Vec<f64>,
    actions_rng: RngState,
    final_error: Option<f64>,
}

impl TaskRuntime {
    fn build(config: &RunConfig, kind: TaskKind) -> Result<Self, CurriculumError> {
        let dataset = generate(&config.data_spec(kind))?;
        let (n_parts, pool, perm_label, policy_label, actions_label, init) = match kind {
            TaskKind::Spatial => (
                config.grid * config.grid,
                config.spatial_perms,
                "perms-spatial",
                "policy-spatial",
                "actions-spatial",
                &config.init_policy_spatial,
            ),
            TaskKind::Temporal => (
                config.frames,
                config.temporal_perms,
                "perms-temporal",
                "policy-temporal",
                "actions-temporal",
                &config.init_policy_temporal,
            ),
        };
        let set = PermutationSet::generate(n_parts, pool, config.subsystem_seed(perm_label))?;
        let mut policy =
            PolicyNet::new(config.policy_config(), config.subsystem_seed(policy_label))?;
        if let Some(path) = init {
            policy.load_into(Path::new(path))?;
        }
        Ok(Self {
            kind,
            dataset,
            set,
            policy,
            errors: Vec::new(),
            actions_rng: RngState::new(config.subsystem_seed(actions_label)),
            final_error: None,
        })
    }

    fn label(&self) -> &'static str {
        self.kind.label()
    }
}

/// What the pre-episode validation of one task leaves behind for the episode.
struct PreValidation {
    state: NetworkStateMatrix,
    grouping: Grouping,
    grouped: GroupedState,
    baseline: f64,
}

/// A batch of (sample id, permutation id) assignments drawn uniformly over
/// the whole pool.
fn draw_free_assignments(
    rng: &mut RngState,
    n_samples: usize,
    n_perms: usize,
    batch: usize,
) -> Vec<(usize, usize)> {
    (0..batch)
        .map(|_| {
            let sample = rng.below(n_samples);
            let perm = rng.below(n_perms);
            (sample, perm)
        })
        .collect()
}

/// A batch with permutations drawn uniformly from one group's members.
fn draw_group_assignments(
    rng: &mut RngState,
    n_samples: usize,
    members: &[usize],
    batch: usize,
) -> Vec<(usize, usize)> {
    (0..batch)
        .map(|_| {
            let sample = rng.below(n_samples);
            let perm = members[rng.below(members.len())];
            (sample, perm)
        })
        .collect()
}

fn jitter_arg<'a>(
    enabled: bool,
    rng: &'a mut RngState,
) -> Option<&'a mut RngState> {
    enabled.then_some(rng)
}

/// Runs the full training alternation for `config.episodes` episodes and
/// returns every record. With `out_dir` set, also writes `config.json`,
/// `metrics.jsonl`, `episodes.jsonl`, the permutation pools, the final model
/// checkpoint, and one policy checkpoint per task that ran.
pub fn run_training(
    config: &RunConfig,
    out_dir: Option<&Path>,
) -> Result<RunSummary, CurriculumError> {
    config.validate()?;

    let model = OrderingModel::new(config.model_config())?;
    let mut store = ParamStore::new();
    let mut init_rng = RngState::new(config.subsystem_seed("model-init"));
    model.register(&mut store, &mut init_rng)?;
    if let Some(path) = &config.init_model {
        store.load_into(Path::new(path))?;
    }
    let mut adam = AdamState::new(&store);

    let mut spatial =
        if (0..config.episodes).any(|t| config.mode.spatial_active(t, config.episodes)) {
            Some(TaskRuntime::build(config, TaskKind::Spatial)?)
        } else {
            None
        };
    let mut temporal =
        if (0..config.episodes).any(|t| config.mode.temporal_active(t, config.episodes)) {
            Some(TaskRuntime::build(config, TaskKind::Temporal)?)
        } else {
            None
        };

    let mut batches_rng = RngState::new(config.subsystem_seed("batches"));
    let mut jitter_rng = RngState::new(config.subsystem_seed("jitter"));

    let mut validations: Vec<ValidationRecord> = Vec::new();
    let mut episodes: Vec<EpisodeRecord> = Vec::new();
    let mut training_forwards: u64 = 0;
    let mut validation_forwards: u64 = 0;
    let mut train_steps: u64 = 0;

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }

    for t in 0..config.episodes {
        let spatial_on = config.mode.spatial_active(t, config.episodes) && spatial.is_some();
        let temporal_on = config.mode.temporal_active(t, config.episodes) && temporal.is_some();

        // --- Free phase: uniform permutations, policy untouched. ---
        for _ in 0..config.free_steps_per_episode {
            let spatial_batch = if spatial_on {
                let rt = spatial.as_ref().unwrap();
                Some(uniform_batch(rt, config, &mut batches_rng, &mut jitter_rng)?)
            } else {
                None
            };
            let temporal_batch = if temporal_on {
                let rt = temporal.as_ref().unwrap();
                Some(uniform_batch(rt, config, &mut batches_rng, &mut jitter_rng)?)
            } else {
                None
            };
            if spatial_batch.is_none() && temporal_batch.is_none() {
                continue;
            }
            model.train_step_dual(
                &mut store,
                &mut adam,
                spatial_batch.as_ref(),
                temporal_batch.as_ref(),
                config.learning_rate,
            )?;
            train_steps += 1;
            training_forwards += (spatial_batch.is_some() as u64
                + temporal_batch.is_some() as u64)
                * config.batch_size as u64;
        }

        // --- Pre-episode validation per active task. ---
        let mut pre: Vec<(TaskKind, PreValidation)> = Vec::new();
        for rt in active_tasks(&mut spatial, &mut temporal, spatial_on, temporal_on) {
            let mut probe = ModelProbe::new(&model, &store, rt.kind);
            let state = validate(&mut probe, &rt.dataset.val, &rt.set, rt.kind)?;
            validation_forwards += state.forwards;
            let grouping = group_permutations(
                &state,
                config.n_groups,
                config.subsystem_seed(&format!("kmeans-{}-{t}", rt.label())),
            )?;
            let grouped = aggregate_state(&state, &grouping);
            rt.errors.push(state.error);
            let baseline = extrapolated_error(&rt.errors);
            validations.push(ValidationRecord {
                episode: t,
                task: rt.label().to_string(),
                phase: "pre".to_string(),
                error: state.error,
                reward: None,
                baseline: Some(baseline),
                group_medians: grouped.medians.clone(),
                group_sizes: grouped.sizes.clone(),
                selection_counts: vec![0; config.n_groups],
                forward_pass_total: training_forwards + validation_forwards,
                perm_errors: state.per_perm_error.clone(),
            });
            pre.push((
                rt.kind,
                PreValidation {
                    state,
                    grouping,
                    grouped,
                    baseline,
                },
            ));
        }

        // --- Sample the episode's K group choices per task. Modes without
        // group sampling bypass the policy: their episode batches fall back
        // to uniform whole-pool draws below. ---
        let sampling = config.mode.group_sampling();
        let mut samples = Vec::new();
        for (kind, pv) in &pre {
            let rt = match kind {
                TaskKind::Spatial => spatial.as_mut().unwrap(),
                TaskKind::Temporal => temporal.as_mut().unwrap(),
            };
            let sample = match sampling {
                Some(mode) => Some(rt.policy.sample_actions(
                    &pv.grouped.features(),
                    config.policy_batches_per_episode,
                    mode,
                    &mut rt.actions_rng,
                )?),
                None => None,
            };
            samples.push(sample);
        }

        // --- Episode phase: K dual steps on policy-chosen groups. ---
        let mut perm_draws: Vec<Vec<u64>> = pre
            .iter()
            .map(|(kind, _)| {
                let rt = match kind {
                    TaskKind::Spatial => spatial.as_ref().unwrap(),
                    TaskKind::Temporal => temporal.as_ref().unwrap(),
                };
                vec![0u64; rt.set.len()]
            })
            .collect();
        for k in 0..config.policy_batches_per_episode {
            let mut spatial_batch = None;
            let mut temporal_batch = None;
            for (i, (kind, pv)) in pre.iter().enumerate() {
                let rt = match kind {
                    TaskKind::Spatial => spatial.as_ref().unwrap(),
                    TaskKind::Temporal => temporal.as_ref().unwrap(),
                };
                let assignments = match &samples[i] {
                    Some(sample) => {
                        let slot = sample.actions[k];
                        let group = pv.grouped.group_ids[slot];
                        let members = &pv.grouping.members[group];
                        draw_group_assignments(
                            &mut batches_rng,
                            rt.dataset.train.len(),
                            members,
                            config.batch_size,
                        )
                    }
                    None => draw_free_assignments(
                        &mut batches_rng,
                        rt.dataset.train.len(),
                        rt.set.len(),
                        config.batch_size,
                    ),
                };
                for &(_, perm) in &assignments {
                    perm_draws[i][perm] += 1;
                }
                let batch = make_permuted_batch(
                    &rt.dataset.train,
                    &rt.set,
                    &assignments,
                    jitter_arg(config.jitter, &mut jitter_rng),
                )?;
                match kind {
                    TaskKind::Spatial => spatial_batch = Some(batch),
                    TaskKind::Temporal => temporal_batch = Some(batch),
                }
            }
            if spatial_batch.is_none() && temporal_batch.is_none() {
                continue;
            }
            model.train_step_dual(
                &mut store,
                &mut adam,
                spatial_batch.as_ref(),
                temporal_batch.as_ref(),
                config.learning_rate,
            )?;
            train_steps += 1;
            training_forwards += (spatial_batch.is_some() as u64
                + temporal_batch.is_some() as u64)
                * config.batch_size as u64;
        }

        // --- Post-episode validation, reward, and the policy update. ---
        for (i, (kind, pv)) in pre.iter().enumerate() {
            let rt = match kind {
                TaskKind::Spatial => spatial.as_mut().unwrap(),
                TaskKind::Temporal => temporal.as_mut().unwrap(),
            };
            let mut probe = ModelProbe::new(&model, &store, rt.kind);
            let state = validate(&mut probe, &rt.dataset.val, &rt.set, rt.kind)?;
            validation_forwards += state.forwards;
            let reward = compute_reward(pv.baseline, state.error);
            rt.errors.push(state.error);
            rt.final_error = Some(state.error);

            let sample = samples[i].as_ref();
            let mut selection_counts = vec![0u64; config.n_groups];
            if let Some(s) = sample {
                for &a in &s.actions {
                    selection_counts[a] += 1;
                }
            }
            let policy_entropy = sample
                .map(|s| crate::nncore::entropy(&s.policy_probs))
                .unwrap_or(0.0);

            let (policy_updated, policy_baseline_after) = match sample {
                Some(s) if config.mode.updates_policy() => {
                    let update = rt.policy.update(s, reward)?;
                    (true, Some(update.baseline_after))
                }
                _ => (false, None),
            };

            let post_medians = slot_medians(&state, &pv.grouping, &pv.grouped.group_ids);
            validations.push(ValidationRecord {
                episode: t,
                task: rt.label().to_string(),
                phase: "post".to_string(),
                error: state.error,
                reward: Some(reward),
                baseline: Some(pv.baseline),
                group_medians: post_medians,
                group_sizes: pv.grouped.sizes.clone(),
                selection_counts: selection_counts.clone(),
                forward_pass_total: training_forwards + validation_forwards,
                perm_errors: state.per_perm_error.clone(),
            });
            episodes.push(EpisodeRecord {
                episode: t,
                task: rt.label().to_string(),
                mode: config.mode.label().to_string(),
                group_ids: pv.grouped.group_ids.clone(),
                group_sizes: pv.grouped.sizes.clone(),
                group_medians: pv.grouped.medians.clone(),
                group_members: pv
                    .grouped
                    .group_ids
                    .iter()
                    .map(|&g| pv.grouping.members[g].clone())
                    .collect(),
                actions: sample.map(|s| s.actions.clone()).unwrap_or_default(),
                action_log_probs: sample.map(|s| s.log_probs.clone()).unwrap_or_default(),
                selection_counts,
                policy_probs: sample.map(|s| s.policy_probs.clone()).unwrap_or_default(),
                policy_entropy,
                perm_draw_counts: perm_draws[i].clone(),
                error_before: pv.state.error,
                baseline: pv.baseline,
                error_after: state.error,
                reward,
                policy_updated,
                policy_baseline_after,
            });
        }

        if let Some(dir) = out_dir {
            if config.checkpoint_stride > 0 && (t + 1) % config.checkpoint_stride == 0 {
                store.save(&dir.join(format!("model_ep{:04}.ckpt", t + 1)))?;
            }
        }
    }

    let summary = RunSummary {
        config: config.clone(),
        validations,
        episodes,
        training_forwards,
        validation_forwards,
        train_steps,
        final_spatial_error: spatial.as_ref().and_then(|rt| rt.final_error),
        final_temporal_error: temporal.as_ref().and_then(|rt| rt.final_error),
    };

    if let Some(dir) = out_dir {
        fs::write(
            dir.join("config.json"),
            serde_json::to_string_pretty(config)? + "\n",
        )?;
        write_jsonl(&dir.join("metrics.jsonl"), &summary.validations)?;
        write_jsonl(&dir.join("episodes.jsonl"), &summary.episodes)?;
        store.save(&dir.join("model.ckpt"))?;
        for rt in spatial.iter().chain(temporal.iter()) {
            rt.policy
                .save(&dir.join(format!("policy_{}.ckpt", rt.label())))?;
            rt.set.save(&dir.join(format!("perms_{}.txt", rt.label())))?;
        }
    }

    Ok(summary)
}

/// One uniformly drawn training batch for a task.
fn uniform_batch(
    rt: &TaskRuntime,
    config: &RunConfig,
    batches_rng: &mut RngState,
    jitter_rng: &mut RngState,
) -> Result<PartsBatch, CurriculumError> {
    let assignments = draw_free_assignments(
        batches_rng,
        rt.dataset.train.len(),
        rt.set.len(),
        config.batch_size,
    );
    Ok(make_permuted_batch(
        &rt.dataset.train,
        &rt.set,
        &assignments,
        jitter_arg(config.jitter, jitter_rng),
    )?)
}

/// The active tasks for one episode, spatial first, as mutable references.
fn active_tasks<'a>(
    spatial: &'a mut Option<TaskRuntime>,
    temporal: &'a mut Option<TaskRuntime>,
    spatial_on: bool,
    temporal_on: bool,
) -> impl Iterator<Item = &'a mut TaskRuntime> {
    spatial
        .iter_mut()
        .filter(move |_| spatial_on)
        .chain(temporal.iter_mut().filter(move |_| temporal_on))
}
