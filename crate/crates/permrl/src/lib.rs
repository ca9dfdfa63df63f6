//! Self-supervised ordering tasks with a reinforcement-learned permutation
//! curriculum.
//!
//! The crate trains a small dual-head network to recognise which permutation
//! was applied to the parts of a toy sample — tiles of an image (spatial task)
//! or frames of a short sequence (temporal task). A REINFORCE-trained policy
//! watches per-permutation validation statistics and proposes which group of
//! permutations the network should train on next, focusing effort on the
//! permutations the network still confuses.
//!
//! Module map:
//!
//! - [`nncore`] — deterministic f64 tensor/layer/optimizer kernels with
//!   finite-difference gradient checking and binary checkpoints.
//! - [`permset`] — permutation algebra and greedy maximally-diverse
//!   permutation set generation.
//! - [`toydata`] — synthetic tiled-image / frame-sequence datasets and
//!   permuted batch assembly.
//! - [`orderingnet`] — the dual-head ordering network (shared encoder,
//!   per-tile spatial head, LSTM temporal head).
//! - [`policy`] — the group-selection policy network and its REINFORCE update.
//! - [`curriculum`] — validation state matrices, permutation grouping,
//!   rewards, episodes and the full training driver.
//! - [`harness`] — run configuration, CLI commands and report generation.

pub mod curriculum;
pub mod harness;
pub mod nncore;
pub mod orderingnet;
pub mod permset;
pub mod policy;
pub mod toydata;
