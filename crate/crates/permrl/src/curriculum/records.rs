//! JSONL record schemas for a training run.
//!
//! Two streams are written per run. `metrics.jsonl` holds one
//! [`ValidationRecord`] per validation event (two per episode per active
//! task: one before the policy-driven batches, one after). `episodes.jsonl`
//! holds one [`EpisodeRecord`] per (episode, task) with the sampled actions
//! and policy state. All floats are emitted by `serde_json`, which
//! round-trips `f64` exactly, so replaying identities from the files is an
//! exact-equality affair.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::CurriculumError;

/// One validation event. `phase` is `"pre"` (before the episode's policy
/// batches) or `"post"` (after them; carries the reward).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub episode: usize,
    /// `"spatial"` or `"temporal"`.
    pub task: String,
    /// `"pre"` or `"post"`.
    pub phase: String,
    /// Overall ordering error E of this validation.
    pub error: f64,
    /// Post phase: reward of the episode that just ended. Pre phase: null.
    pub reward: Option<f64>,
    /// Extrapolated-error baseline for the episode this validation belongs
    /// to (computed at the pre phase, echoed at the post phase).
    pub baseline: Option<f64>,
    /// Median confidence ratio per group slot (ascending at the pre phase;
    /// the post phase re-measures the same slots without re-sorting).
    pub group_medians: Vec<f64>,
    /// Normalized group sizes by slot.
    pub group_sizes: Vec<f64>,
    /// Actions taken in the episode, tallied by slot. Zero at the pre phase.
    pub selection_counts: Vec<u64>,
    /// Cumulative forward passes (training + validation) after this event.
    pub forward_pass_total: u64,
    /// Per-permutation error rates of this validation.
    pub perm_errors: Vec<f64>,
}

/// One (episode, task) policy interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub task: String,
    /// Run mode label (`"policy"`, `"random"`, ...).
    pub mode: String,
    /// Slot → k-means group id, in the canonical (ascending-median) order.
    pub group_ids: Vec<usize>,
    pub group_sizes: Vec<f64>,
    pub group_medians: Vec<f64>,
    /// Slot → permutation ids in the group.
    pub group_members: Vec<Vec<usize>>,
    /// The K sampled group slots, in order.
    pub actions: Vec<usize>,
    /// Log-probability of each action under the sampling distribution.
    pub action_log_probs: Vec<f64>,
    /// Actions tallied by slot; sums to K.
    pub selection_counts: Vec<u64>,
    /// Learned policy distribution at sampling time (even in uniform or
    /// inverse modes, for comparison).
    pub policy_probs: Vec<f64>,
    pub policy_entropy: f64,
    /// How often each permutation id appeared in the episode's batches.
    pub perm_draw_counts: Vec<u64>,
    /// Validation error before the episode's batches (E_t).
    pub error_before: f64,
    /// Extrapolated baseline E^BL for this episode.
    pub baseline: f64,
    /// Validation error after the batches (E_{t+1}).
    pub error_after: f64,
    /// baseline − error_after, exactly.
    pub reward: f64,
    /// Whether a REINFORCE update was applied.
    pub policy_updated: bool,
    /// Reward-EMA baseline of the policy after the update, when applied.
    pub policy_baseline_after: Option<f64>,
}

/// Serializes records one per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CurriculumError> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a JSONL file written by [`write_jsonl`]; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CurriculumError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
