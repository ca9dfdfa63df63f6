//! Minimal deterministic neural-network kernels.
//!
//! Everything is computed in `f64` with fixed evaluation order so that a run
//! is reproducible bit-for-bit from its seed. The module provides:
//!
//! - [`Matrix`] — dense row-major matrix with the handful of products the
//!   layers need,
//! - [`RngState`] — counter-based seeded random number generator,
//! - [`ParamStore`] — named parameter tensors with paired gradient buffers
//!   and binary checkpoint save/load,
//! - [`DenseLayer`] / [`LstmLayer`] — forward and hand-derived backward,
//! - softmax / cross-entropy losses,
//! - plain SGD and Adam steps,
//! - [`grad_check`] — central finite-difference verification of backward
//!   passes.

mod dense;
mod gradcheck;
mod loss;
mod lstm;
mod matrix;
mod optim;
mod rng;
mod store;

pub use dense::{Activation, DenseCache, DenseLayer};
pub use gradcheck::{grad_check, GradCheckReport, TensorCheck};
pub use loss::{
    cross_entropy, cross_entropy_batch, entropy, softmax, softmax_row, PROB_FLOOR,
};
pub use lstm::{LstmCache, LstmLayer};
pub use matrix::Matrix;
pub use optim::{adam_step, sgd_step, AdamState};
pub use rng::{derive_seed, RngState};
pub use store::ParamStore;

use thiserror::Error;

/// Errors raised by the numeric core.
#[derive(Debug, Error)]
pub enum NncoreError {
    /// A gradient or parameter value stopped being finite. The tensor name and
    /// the optimizer step counter identify where training diverged.
    #[error("non-finite value in tensor '{tensor}' at optimizer step {step}")]
    NonFinite { tensor: String, step: u64 },

    /// Two tensors were registered under the same name.
    #[error("duplicate tensor name '{0}'")]
    DuplicateTensor(String),

    /// A checkpoint did not match the shapes the model expects.
    #[error("checkpoint mismatch for tensor '{tensor}': expected {expected:?}, found {found:?}")]
    CheckpointShape {
        tensor: String,
        expected: (usize, usize),
        found: (usize, usize),
    },

    /// A checkpoint named a tensor the model does not have, or vice versa.
    #[error("checkpoint tensor set mismatch: {0}")]
    CheckpointTensors(String),

    /// The binary payload of a checkpoint was shorter or longer than the
    /// header promised.
    #[error("checkpoint payload mismatch: expected {expected} bytes, found {found}")]
    CheckpointPayload { expected: usize, found: usize },

    /// The checkpoint header line could not be parsed.
    #[error("checkpoint header: {0}")]
    CheckpointHeader(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
