//! Selection-behavior reports from episode records.
//!
//! Two plot-ready views of what the policy chose: how often each
//! error-quartile of groups was sampled per episode, and how the drawn
//! permutations distribute over Hamming distance to the identity ordering.

use crate::curriculum::{CurriculumError, EpisodeRecord};
use crate::permset::{Permutation, PermutationSet};

/// Per-episode selection frequency of one difficulty quartile.
#[derive(Debug, Clone, PartialEq)]
pub struct QuartileRow {
    pub episode: usize,
    /// 0 = hardest quarter of the group ranking, 3 = easiest.
    pub quartile: usize,
    pub frequency: f64,
}

/// Group slots are already ranked hardest-first, so slot `i` of `C` covers
/// the rank span `[i/C, (i+1)/C)`; its selections are attributed to each
/// quartile in proportion to the overlap of that span with the quartile's
/// `[q/4, (q+1)/4)`. Uniform selection therefore lands each quartile at
/// exactly 0.25, independent of the group count.
///
/// With zero draws in an episode the frequencies are reported as 0.
pub fn quartile_rows(records: &[EpisodeRecord]) -> Result<Vec<QuartileRow>, CurriculumError> {
    if records.is_empty() {
        return Err(CurriculumError::NoRecords(
            "selection report needs at least one episode record".into(),
        ));
    }
    let mut rows = Vec::with_capacity(records.len() * 4);
    for record in records {
        let n_groups = record.selection_counts.len();
        let total: u64 = record.selection_counts.iter().sum();
        for quartile in 0..4 {
            let q_lo = quartile as f64 / 4.0;
            let q_hi = (quartile + 1) as f64 / 4.0;
            let mut mass = 0.0;
            for (slot, &count) in record.selection_counts.iter().enumerate() {
                let s_lo = slot as f64 / n_groups as f64;
                let s_hi = (slot + 1) as f64 / n_groups as f64;
                let overlap = (s_hi.min(q_hi) - s_lo.max(q_lo)).max(0.0);
                mass += overlap / (s_hi - s_lo) * count as f64;
            }
            let frequency = if total == 0 { 0.0 } else { mass / total as f64 };
            rows.push(QuartileRow {
                episode: record.episode,
                quartile,
                frequency,
            });
        }
    }
    Ok(rows)
}

/// Per-episode draw counts at one Hamming distance from identity.
#[derive(Debug, Clone, PartialEq)]
pub struct HammingRow {
    pub episode: usize,
    pub distance: usize,
    pub draws: u64,
    /// Share of this episode's permutation draws (0 when nothing was drawn).
    pub frequency: f64,
}

/// Tallies each episode's permutation draws by the permutation's Hamming
/// distance to identity. Every distance present in the pool appears in every
/// episode (with zero draws where applicable), so the row count is
/// `episodes × distinct distances`.
pub fn hamming_rows(
    records: &[EpisodeRecord],
    set: &PermutationSet,
) -> Result<Vec<HammingRow>, CurriculumError> {
    if records.is_empty() {
        return Err(CurriculumError::NoRecords(
            "selection report needs at least one episode record".into(),
        ));
    }
    let identity = Permutation::identity(set.n());
    let distance: Vec<usize> = (0..set.len())
        .map(|i| {
            set.get(i)
                .hamming(&identity)
                .expect("pool members share the identity's length")
        })
        .collect();
    let mut levels: Vec<usize> = distance.clone();
    levels.sort_unstable();
    levels.dedup();

    let mut rows = Vec::with_capacity(records.len() * levels.len());
    for record in records {
        if record.perm_draw_counts.len() != set.len() {
            return Err(CurriculumError::NoRecords(format!(
                "episode {} counts {} permutations but the pool has {}",
                record.episode,
                record.perm_draw_counts.len(),
                set.len()
            )));
        }
        let total: u64 = record.perm_draw_counts.iter().sum();
        for &level in &levels {
            let draws: u64 = record
                .perm_draw_counts
                .iter()
                .zip(&distance)
                .filter(|&(_, &d)| d == level)
                .map(|(&c, _)| c)
                .sum();
            let frequency = if total == 0 {
                0.0
            } else {
                draws as f64 / total as f64
            };
            rows.push(HammingRow {
                episode: record.episode,
                distance: level,
                draws,
                frequency,
            });
        }
    }
    Ok(rows)
}

pub fn quartile_csv(rows: &[QuartileRow]) -> String {
    let mut out = String::from("episode,quartile,frequency\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.episode, r.quartile, r.frequency));
    }
    out
}

pub fn hamming_csv(rows: &[HammingRow]) -> String {
    let mut out = String::from("episode,distance,draws,frequency\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.episode, r.distance, r.draws, r.frequency
        ));
    }
    out
}
