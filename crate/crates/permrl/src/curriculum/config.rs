//! Run configuration: one flat, serializable struct that fully determines a
//! training run, plus the training-mode enum with its task/sampling
//! semantics. Validation collects every violation instead of stopping at the
//! first, so a bad config file is diagnosed in one pass.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orderingnet::ModelConfig;
use crate::policy::{PolicyConfig, SamplingMode};
use crate::toydata::{DatasetSpec, TaskKind};

use crate::nncore::derive_seed;

/// Which tasks run and how permutations are chosen for episode batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Both tasks; episode permutations chosen by the learned policy, which
    /// is updated every episode.
    Policy,
    /// Both tasks; episode groups drawn uniformly, policy never updated.
    Random,
    /// Both tasks; episode groups drawn from the inverse of the (frozen)
    /// policy distribution, policy never updated.
    Inverse,
    /// Spatial task only, with the learned policy.
    SpatialOnly,
    /// Temporal task only, with the learned policy.
    TemporalOnly,
    /// Spatial task for the first half of the episodes, then temporal for
    /// the rest; uniform draws, no policy updates.
    Serial,
}

impl TrainMode {
    pub fn label(self) -> &'static str {
        match self {
            TrainMode::Policy => "policy",
            TrainMode::Random => "random",
            TrainMode::Inverse => "inverse",
            TrainMode::SpatialOnly => "spatial_only",
            TrainMode::TemporalOnly => "temporal_only",
            TrainMode::Serial => "serial",
        }
    }

    /// How episode batches pick their permutation group, if they do at all.
    /// `None` bypasses the policy entirely: episode batches draw permutations
    /// uniformly from the whole pool, exactly like the free phase, so the run
    /// reduces to plain self-supervised training.
    pub fn group_sampling(self) -> Option<SamplingMode> {
        match self {
            TrainMode::Policy | TrainMode::SpatialOnly | TrainMode::TemporalOnly => {
                Some(SamplingMode::Learned)
            }
            TrainMode::Inverse => Some(SamplingMode::Inverse),
            TrainMode::Random | TrainMode::Serial => None,
        }
    }

    /// Whether REINFORCE updates are applied after each episode.
    pub fn updates_policy(self) -> bool {
        matches!(
            self,
            TrainMode::Policy | TrainMode::SpatialOnly | TrainMode::TemporalOnly
        )
    }

    /// Is the spatial task trained during episode `t` of `total`?
    pub fn spatial_active(self, episode: usize, total: usize) -> bool {
        match self {
            TrainMode::TemporalOnly => false,
            TrainMode::Serial => episode < total.div_ceil(2),
            _ => true,
        }
    }

    /// Is the temporal task trained during episode `t` of `total`?
    pub fn temporal_active(self, episode: usize, total: usize) -> bool {
        match self {
            TrainMode::SpatialOnly => false,
            TrainMode::Serial => episode >= total.div_ceil(2),
            _ => true,
        }
    }
}

/// Every violation found in a [`RunConfig`], one line each.
#[derive(Debug, Error)]
#[error("{}", issues.join("\n"))]
pub struct ConfigError {
    pub issues: Vec<String>,
}

/// Complete description of a training run. All fields have defaults, so a
/// config file only needs the overrides; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every subsystem seed is derived from it by label.
    pub seed: u64,
    pub mode: TrainMode,
    /// Episodes T: one policy-driven segment plus its two validations.
    pub episodes: usize,
    /// Uniform-permutation training steps between episodes.
    pub free_steps_per_episode: usize,
    /// Action batches K per episode.
    pub policy_batches_per_episode: usize,
    /// Samples B per training batch.
    pub batch_size: usize,
    /// Number of difficulty groups |C| (the policy's action count).
    pub n_groups: usize,
    /// Adam step size for the ordering network.
    pub learning_rate: f64,
    /// Add per-element uniform noise to training parts.
    pub jitter: bool,

    /// Tiles per image side for the spatial task (grid² tiles).
    pub grid: usize,
    /// Sequence length for the temporal task.
    pub frames: usize,
    /// Part side length; each part is part_extent² values.
    pub part_extent: usize,
    /// Latent pattern classes in the generated data.
    pub n_pattern_classes: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    /// Permutation pool size per task.
    pub spatial_perms: usize,
    pub temporal_perms: usize,

    pub encoder_dim: usize,
    pub head_dim: usize,
    pub spatial_hidden_dim: usize,
    pub lstm_dim: usize,

    pub policy_hidden_dim: usize,
    pub policy_lr: f64,
    pub entropy_weight: f64,
    pub baseline_decay: f64,
    pub gamma: f64,

    /// Save an extra model checkpoint every this many episodes (0 = final
    /// checkpoint only).
    pub checkpoint_stride: usize,
    /// Optional warm starts: checkpoint paths produced by an earlier run.
    pub init_model: Option<String>,
    pub init_policy_spatial: Option<String>,
    pub init_policy_temporal: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 17,
            mode: TrainMode::Policy,
            episodes: 90,
            free_steps_per_episode: 200,
            policy_batches_per_episode: 20,
            batch_size: 32,
            n_groups: 6,
            learning_rate: 0.01,
            jitter: true,
            grid: 2,
            frames: 4,
            part_extent: 8,
            n_pattern_classes: 8,
            n_train: 2048,
            n_val: 100,
            n_test: 512,
            spatial_perms: 24,
            temporal_perms: 24,
            encoder_dim: 64,
            head_dim: 64,
            spatial_hidden_dim: 128,
            lstm_dim: 32,
            policy_hidden_dim: 16,
            policy_lr: 0.01,
            entropy_weight: 0.01,
            baseline_decay: 0.9,
            gamma: 1.0,
            checkpoint_stride: 0,
            init_model: None,
            init_policy_spatial: None,
            init_policy_temporal: None,
        }
    }
}

/// n! capped so comparisons against pool sizes never overflow.
fn capped_factorial(n: usize) -> usize {
    let mut acc: usize = 1;
    for i in 2..=n {
        match acc.checked_mul(i) {
            Some(v) => acc = v,
            None => return usize::MAX,
        }
    }
    acc
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        let mut need =
            |ok: bool, msg: String| {
                if !ok {
                    issues.push(msg);
                }
            };

        need(self.episodes >= 1, format!("episodes must be >= 1, got {}", self.episodes));
        need(
            self.batch_size >= 1,
            format!("batch_size must be >= 1, got {}", self.batch_size),
        );
        need(self.grid >= 2, format!("grid must be >= 2, got {}", self.grid));
        need(self.frames >= 2, format!("frames must be >= 2, got {}", self.frames));
        need(
            self.part_extent >= 2,
            format!("part_extent must be >= 2, got {}", self.part_extent),
        );
        need(
            self.n_pattern_classes >= 1,
            format!("n_pattern_classes must be >= 1, got {}", self.n_pattern_classes),
        );
        need(self.n_train >= 1, format!("n_train must be >= 1, got {}", self.n_train));
        need(self.n_val >= 1, format!("n_val must be >= 1, got {}", self.n_val));

        let spatial_used = self.mode != TrainMode::TemporalOnly;
        let temporal_used = self.mode != TrainMode::SpatialOnly;
        let n_tiles = self.grid * self.grid;
        if spatial_used {
            need(
                self.spatial_perms >= 2,
                format!("spatial_perms must be >= 2, got {}", self.spatial_perms),
            );
            let max = capped_factorial(n_tiles);
            need(
                self.spatial_perms <= max,
                format!(
                    "spatial_perms {} exceeds the {}! = {} orderings of {} tiles",
                    self.spatial_perms, n_tiles, max, n_tiles
                ),
            );
            need(
                self.n_groups <= self.spatial_perms,
                format!(
                    "n_groups {} exceeds spatial_perms {}",
                    self.n_groups, self.spatial_perms
                ),
            );
        }
        if temporal_used {
            need(
                self.temporal_perms >= 2,
                format!("temporal_perms must be >= 2, got {}", self.temporal_perms),
            );
            let max = capped_factorial(self.frames);
            need(
                self.temporal_perms <= max,
                format!(
                    "temporal_perms {} exceeds the {}! = {} orderings of {} frames",
                    self.temporal_perms, self.frames, max, self.frames
                ),
            );
            need(
                self.n_groups <= self.temporal_perms,
                format!(
                    "n_groups {} exceeds temporal_perms {}",
                    self.n_groups, self.temporal_perms
                ),
            );
        }
        need(self.n_groups >= 2, format!("n_groups must be >= 2, got {}", self.n_groups));

        for (name, v) in [
            ("encoder_dim", self.encoder_dim),
            ("head_dim", self.head_dim),
            ("spatial_hidden_dim", self.spatial_hidden_dim),
            ("lstm_dim", self.lstm_dim),
            ("policy_hidden_dim", self.policy_hidden_dim),
        ] {
            need(v >= 1, format!("{name} must be >= 1, got {v}"));
        }
        need(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            format!("learning_rate must be positive, got {}", self.learning_rate),
        );
        need(
            self.policy_lr > 0.0 && self.policy_lr.is_finite(),
            format!("policy_lr must be positive, got {}", self.policy_lr),
        );
        need(
            self.entropy_weight >= 0.0 && self.entropy_weight.is_finite(),
            format!("entropy_weight must be >= 0, got {}", self.entropy_weight),
        );
        need(
            (0.0..1.0).contains(&self.baseline_decay),
            format!("baseline_decay must be in [0, 1), got {}", self.baseline_decay),
        );
        need(
            self.gamma > 0.0 && self.gamma <= 1.0,
            format!("gamma must be in (0, 1], got {}", self.gamma),
        );

        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { issues })
        }
    }

    /// Seed for a derived subsystem; mode-independent, so ablations that
    /// share a master seed see identical data and initialization.
    pub fn subsystem_seed(&self, label: &str) -> u64 {
        derive_seed(self.seed, label)
    }

    pub fn data_spec(&self, kind: TaskKind) -> DatasetSpec {
        let label = match kind {
            TaskKind::Spatial => "data-spatial",
            TaskKind::Temporal => "data-temporal",
        };
        DatasetSpec {
            kind,
            grid: self.grid,
            frames: self.frames,
            part_extent: self.part_extent,
            n_classes: self.n_pattern_classes,
            n_train: self.n_train,
            n_val: self.n_val,
            n_test: self.n_test,
            seed: self.subsystem_seed(label),
        }
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            n_tiles: self.grid * self.grid,
            n_frames: self.frames,
            tile_input_dim: self.part_extent * self.part_extent,
            frame_input_dim: self.part_extent * self.part_extent,
            encoder_dim: self.encoder_dim,
            head_dim: self.head_dim,
            spatial_hidden_dim: self.spatial_hidden_dim,
            lstm_dim: self.lstm_dim,
            n_spatial_classes: self.spatial_perms,
            n_temporal_classes: self.temporal_perms,
        }
    }

    pub fn policy_config(&self) -> PolicyConfig {
        PolicyConfig {
            n_groups: self.n_groups,
            hidden_dim: self.policy_hidden_dim,
            lr: self.policy_lr,
            entropy_weight: self.entropy_weight,
            baseline_decay: self.baseline_decay,
            gamma: self.gamma,
        }
    }
}
