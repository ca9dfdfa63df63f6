//! Curriculum machinery around the ordering network.
//!
//! Validation produces a per-permutation confidence matrix ([`state`]), which
//! k-means condenses into a handful of difficulty groups ([`grouping`]).
//! Episode rewards compare observed validation error against a linear
//! extrapolation of its recent trend ([`reward`]). The training driver
//! ([`driver`]) interleaves free self-supervised steps with policy-chosen
//! episodes and records everything as JSON Lines ([`records`]). A
//! Kolmogorov–Smirnov diagnostic ([`ks`]) checks whether the group count is
//! finer than the data supports, and a fast synthetic learner
//! ([`synthetic`]) exercises the whole selection loop without a network.

mod config;
mod driver;
mod grouping;
mod ks;
mod records;
mod reward;
mod state;
mod synthetic;

pub use config::{ConfigError, RunConfig, TrainMode};
pub use driver::{run_training, RunSummary};
pub use grouping::{
    aggregate_state, group_permutations, kmeans, slot_medians, wcss, GroupedState, Grouping,
};
pub use ks::{
    group_count_diagnostic, ks_p_value, ks_statistic, ks_two_sample, permutation_p_value,
    GroupDiagnostic, KsResult,
};
pub use records::{read_jsonl, write_jsonl, EpisodeRecord, ValidationRecord};
pub use reward::{compute_reward, extrapolated_error, ErrorHistory};
pub use state::{
    validate, ModelProbe, NetworkStateMatrix, OracleProbe, UniformProbe, ValidationProbe,
};
pub use synthetic::{run_synthetic, SyntheticConfig, SyntheticEpisode, SyntheticLearner};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurriculumError {
    #[error("invalid run config:\n{0}")]
    Config(#[from] ConfigError),

    #[error("validation requires a nonempty validation set")]
    EmptyValidation,

    #[error("probe emits {probe} classes but the permutation set has {set}")]
    ClassCount { probe: usize, set: usize },

    #[error("cannot form {requested} groups from {available} permutations")]
    GroupCount { requested: usize, available: usize },

    #[error("k-means needs at least one cluster")]
    NoClusters,

    #[error("two-sample test requires nonempty samples ({0} is empty)")]
    EmptySample(&'static str),

    #[error("record stream is empty: {0}")]
    NoRecords(String),

    #[error(transparent)]
    Data(#[from] crate::toydata::ToyDataError),

    #[error(transparent)]
    Perm(#[from] crate::permset::PermSetError),

    #[error(transparent)]
    Model(#[from] crate::orderingnet::ModelError),

    #[error(transparent)]
    Policy(#[from] crate::policy::PolicyError),

    #[error(transparent)]
    Nncore(#[from] crate::nncore::NncoreError),

    #[error("malformed record: {0}")]
    Record(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
