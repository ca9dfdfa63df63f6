//! Permutation algebra and diverse permutation-set generation.
//!
//! A [`PermutationSet`] is grown greedily from a candidate pool so that each
//! added permutation maximizes its minimum Hamming distance to the ones
//! already chosen (ties broken by maximal distance sum, then by lexicographic
//! order). For `n <= 9` the pool is all of S_n; for larger `n` it is 100,000
//! distinct seeded-uniform permutations.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nncore::RngState;

/// Candidate pool size when exhaustive enumeration is infeasible.
const SAMPLED_POOL_SIZE: usize = 100_000;
/// Largest `n` whose S_n is enumerated exhaustively (9! = 362,880).
const MAX_EXHAUSTIVE_N: usize = 9;

#[derive(Debug, Error)]
pub enum PermSetError {
    #[error("permutation of length {0} is too short (need >= 2)")]
    TooShort(usize),

    #[error("indices are not a bijection on 0..{n}: {reason}")]
    NotABijection { n: usize, reason: String },

    #[error("requested {requested} permutations but only {available} candidates exist")]
    Infeasible { requested: usize, available: usize },

    #[error("cannot apply length-{perm} permutation to {parts} parts")]
    LengthMismatch { perm: usize, parts: usize },

    #[error("row {row} of permutation file is invalid: {reason}")]
    InvalidRow { row: usize, reason: String },

    #[error("row {row} duplicates an earlier permutation")]
    DuplicateRow { row: usize },

    #[error("parse error in permutation file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A bijection on `0..n`, stored as the source index for each output slot:
/// applying the permutation puts `parts[indices[j]]` at position `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    indices: Vec<usize>,
}

impl Permutation {
    pub fn new(indices: Vec<usize>) -> Result<Self, PermSetError> {
        let n = indices.len();
        if n < 2 {
            return Err(PermSetError::TooShort(n));
        }
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n {
                return Err(PermSetError::NotABijection {
                    n,
                    reason: format!("index {i} out of range"),
                });
            }
            if seen[i] {
                return Err(PermSetError::NotABijection {
                    n,
                    reason: format!("index {i} repeated"),
                });
            }
            seen[i] = true;
        }
        Ok(Self { indices })
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 2);
        Self {
            indices: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false // permutations always have length >= 2
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_identity(&self) -> bool {
        self.indices.iter().enumerate().all(|(j, &i)| i == j)
    }

    /// Reorders `parts`: output slot `j` receives `parts[indices[j]]`.
    pub fn apply<T: Clone>(&self, parts: &[T]) -> Result<Vec<T>, PermSetError> {
        if parts.len() != self.len() {
            return Err(PermSetError::LengthMismatch {
                perm: self.len(),
                parts: parts.len(),
            });
        }
        Ok(self.indices.iter().map(|&i| parts[i].clone()).collect())
    }

    /// The inverse permutation: `invert().apply(self.apply(x)) == x`.
    pub fn invert(&self) -> Permutation {
        let mut inv = vec![0usize; self.len()];
        for (j, &i) in self.indices.iter().enumerate() {
            inv[i] = j;
        }
        Permutation { indices: inv }
    }

    /// Number of positions where the two permutations disagree. A value of 1
    /// is impossible for distinct permutations.
    pub fn hamming(&self, other: &Permutation) -> Result<usize, PermSetError> {
        if self.len() != other.len() {
            return Err(PermSetError::LengthMismatch {
                perm: self.len(),
                parts: other.len(),
            });
        }
        Ok(self
            .indices
            .iter()
            .zip(&other.indices)
            .filter(|(a, b)| a != b)
            .count())
    }
}

/// On-disk representation: plain JSON with 0-based index rows.
#[derive(Serialize, Deserialize)]
struct PermSetFile {
    n: usize,
    seed: u64,
    permutations: Vec<Vec<usize>>,
}

/// A set of distinct permutations of common length, greedily selected for
/// pairwise Hamming diversity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSet {
    n: usize,
    seed: u64,
    permutations: Vec<Permutation>,
    min_pairwise_hamming: usize,
}

impl PermutationSet {
    /// Greedy diverse selection of `size` permutations of length `n`.
    ///
    /// The candidate pool is all of S_n for `n <= 9`, otherwise 100,000
    /// distinct seeded-uniform samples. The first element is drawn uniformly;
    /// every later element maximizes the minimum Hamming distance to the
    /// chosen set, with ties broken by maximal distance sum and then by
    /// lexicographic order. The result is deterministic in `(n, size, seed)`.
    pub fn generate(n: usize, size: usize, seed: u64) -> Result<Self, PermSetError> {
        if n < 2 {
            return Err(PermSetError::TooShort(n));
        }
        if size < 1 {
            return Err(PermSetError::Infeasible {
                requested: size,
                available: 0,
            });
        }

        let mut rng = RngState::new(seed);
        let pool: Vec<Vec<usize>> = if n <= MAX_EXHAUSTIVE_N {
            enumerate_lexicographic(n)
        } else {
            sample_distinct_pool(n, SAMPLED_POOL_SIZE, &mut rng)
        };
        if size > pool.len() {
            return Err(PermSetError::Infeasible {
                requested: size,
                available: pool.len(),
            });
        }

        let mut chosen_idx = Vec::with_capacity(size);
        let mut taken = vec![false; pool.len()];
        // Distance bookkeeping to the chosen set, updated incrementally.
        let mut min_dist = vec![usize::MAX; pool.len()];
        let mut sum_dist = vec![0u64; pool.len()];

        let first = rng.below(pool.len());
        chosen_idx.push(first);
        taken[first] = true;
        update_distances(&pool, first, &taken, &mut min_dist, &mut sum_dist);

        while chosen_idx.len() < size {
            let mut best: Option<usize> = None;
            for i in 0..pool.len() {
                if taken[i] {
                    continue;
                }
                // Strict improvement keeps the lexicographically first winner
                // because the pool is in lexicographic order.
                let better = match best {
                    None => true,
                    Some(b) => {
                        min_dist[i] > min_dist[b]
                            || (min_dist[i] == min_dist[b] && sum_dist[i] > sum_dist[b])
                    }
                };
                if better {
                    best = Some(i);
                }
            }
            let pick = best.expect("pool cannot be exhausted before size is reached");
            chosen_idx.push(pick);
            taken[pick] = true;
            update_distances(&pool, pick, &taken, &mut min_dist, &mut sum_dist);
        }

        let permutations: Vec<Permutation> = chosen_idx
            .into_iter()
            .map(|i| Permutation {
                indices: pool[i].clone(),
            })
            .collect();
        let min_pairwise_hamming = min_pairwise(&permutations);
        Ok(Self {
            n,
            seed,
            permutations,
            min_pairwise_hamming,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.permutations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutations.is_empty()
    }

    pub fn get(&self, i: usize) -> &Permutation {
        &self.permutations[i]
    }

    pub fn perms(&self) -> &[Permutation] {
        &self.permutations
    }

    /// Minimum Hamming distance over all pairs; 0 for singleton sets.
    pub fn min_pairwise_hamming(&self) -> usize {
        self.min_pairwise_hamming
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let file = PermSetFile {
            n: self.n,
            seed: self.seed,
            permutations: self
                .permutations
                .iter()
                .map(|p| p.indices.clone())
                .collect(),
        };
        let mut bytes = serde_json::to_vec(&file).expect("serialization cannot fail");
        bytes.push(b'\n');
        bytes
    }

    pub fn save(&self, path: &Path) -> Result<(), PermSetError> {
        fs::write(path, self.to_json_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PermSetError> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, PermSetError> {
        let file: PermSetFile =
            serde_json::from_str(text).map_err(|e| PermSetError::Parse(e.to_string()))?;
        let mut seen = BTreeSet::new();
        let mut permutations = Vec::with_capacity(file.permutations.len());
        for (row, indices) in file.permutations.into_iter().enumerate() {
            if indices.len() != file.n {
                return Err(PermSetError::InvalidRow {
                    row,
                    reason: format!("length {} does not match n = {}", indices.len(), file.n),
                });
            }
            let perm = Permutation::new(indices).map_err(|e| PermSetError::InvalidRow {
                row,
                reason: e.to_string(),
            })?;
            if !seen.insert(perm.indices.clone()) {
                return Err(PermSetError::DuplicateRow { row });
            }
            permutations.push(perm);
        }
        if permutations.is_empty() {
            return Err(PermSetError::Parse("file contains no permutations".into()));
        }
        let min_pairwise_hamming = min_pairwise(&permutations);
        Ok(Self {
            n: file.n,
            seed: file.seed,
            permutations,
            min_pairwise_hamming,
        })
    }
}

fn min_pairwise(perms: &[Permutation]) -> usize {
    let mut min = usize::MAX;
    for i in 0..perms.len() {
        for j in (i + 1)..perms.len() {
            let d = perms[i]
                .hamming(&perms[j])
                .expect("equal lengths by construction");
            min = min.min(d);
        }
    }
    if min == usize::MAX {
        0
    } else {
        min
    }
}

fn update_distances(
    pool: &[Vec<usize>],
    new_pick: usize,
    taken: &[bool],
    min_dist: &mut [usize],
    sum_dist: &mut [u64],
) {
    let picked = &pool[new_pick];
    for i in 0..pool.len() {
        if taken[i] {
            continue;
        }
        let d = pool[i]
            .iter()
            .zip(picked)
            .filter(|(a, b)| a != b)
            .count();
        if d < min_dist[i] {
            min_dist[i] = d;
        }
        sum_dist[i] += d as u64;
    }
}

/// All permutations of `0..n` in lexicographic order.
fn enumerate_lexicographic(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    loop {
        out.push(current.clone());
        // Standard next-permutation step.
        let Some(i) = (0..n - 1).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

/// `count` distinct uniform permutations, returned in lexicographic order so
/// greedy tie-breaking stays well defined.
fn sample_distinct_pool(n: usize, count: usize, rng: &mut RngState) -> Vec<Vec<usize>> {
    let mut set: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut scratch: Vec<usize> = (0..n).collect();
    while set.len() < count {
        rng.shuffle(&mut scratch);
        if !set.contains(&scratch) {
            set.insert(scratch.clone());
        }
    }
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_places_source_parts_at_target_slots() {
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        let parts = vec!["a", "b", "c"];
        assert_eq!(p.apply(&parts).unwrap(), vec!["c", "a", "b"]);
    }

    #[test]
    fn apply_rejects_length_mismatch() {
        let p = Permutation::new(vec![1, 0]).unwrap();
        assert!(matches!(
            p.apply(&[1, 2, 3]).unwrap_err(),
            PermSetError::LengthMismatch { .. }
        ));
    }

    #[test]
    fn invert_round_trips() {
        let mut rng = RngState::new(3);
        for &n in &[4usize, 9] {
            for _ in 0..100 {
                let mut idx: Vec<usize> = (0..n).collect();
                rng.shuffle(&mut idx);
                let p = Permutation::new(idx).unwrap();
                let parts: Vec<usize> = (0..n).map(|i| i * 10).collect();
                let shuffled = p.apply(&parts).unwrap();
                let restored = p.invert().apply(&shuffled).unwrap();
                assert_eq!(restored, parts);
                assert_eq!(p.invert().invert(), p);
            }
        }
    }

    #[test]
    fn non_bijections_are_rejected() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3]).is_err());
        assert!(Permutation::new(vec![1]).is_err());
    }

    #[test]
    fn hamming_is_a_metric_on_s4_and_never_one() {
        let all = enumerate_lexicographic(4);
        let perms: Vec<Permutation> = all
            .into_iter()
            .map(|v| Permutation::new(v).unwrap())
            .collect();
        for a in &perms {
            assert_eq!(a.hamming(a).unwrap(), 0);
            for b in &perms {
                let dab = a.hamming(b).unwrap();
                assert_eq!(dab, b.hamming(a).unwrap());
                assert_ne!(dab, 1, "distinct permutations cannot differ in one slot");
                if a != b {
                    assert!(dab >= 2);
                }
                for c in &perms {
                    let dac = a.hamming(c).unwrap();
                    let dcb = c.hamming(b).unwrap();
                    assert!(dab <= dac + dcb, "triangle inequality violated");
                }
            }
        }
    }

    #[test]
    fn identity_maps_every_slot_to_itself() {
        let id = Permutation::identity(5);
        assert!(id.is_identity());
        assert_eq!(id.apply(&[9, 8, 7, 6, 5]).unwrap(), vec![9, 8, 7, 6, 5]);
    }

    #[test]
    fn generate_n3_size2_reaches_min_distance_3() {
        let set = PermutationSet::generate(3, 2, 11).unwrap();
        assert_eq!(set.min_pairwise_hamming(), 3);
    }

    #[test]
    fn generate_n4_size24_is_all_of_s4() {
        let set = PermutationSet::generate(4, 24, 5).unwrap();
        assert_eq!(set.len(), 24);
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        for p in set.perms() {
            assert!(seen.insert(p.indices().to_vec()));
        }
        assert_eq!(seen.len(), 24);
        assert!(set.min_pairwise_hamming() >= 2);
    }

    #[test]
    fn generate_rejects_infeasible_sizes() {
        let err = PermutationSet::generate(3, 7, 0).unwrap_err();
        match err {
            PermSetError::Infeasible {
                requested,
                available,
            } => {
                assert_eq!(requested, 7);
                assert_eq!(available, 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generate_is_deterministic_per_seed() {
        let a = PermutationSet::generate(5, 20, 99).unwrap();
        let b = PermutationSet::generate(5, 20, 99).unwrap();
        assert_eq!(a.to_json_bytes(), b.to_json_bytes());
        let c = PermutationSet::generate(5, 20, 100).unwrap();
        assert_ne!(a.to_json_bytes(), c.to_json_bytes());
    }

    #[test]
    fn save_load_round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("perms.json");
        let set = PermutationSet::generate(4, 10, 7).unwrap();
        set.save(&path).unwrap();
        let loaded = PermutationSet::load(&path).unwrap();
        assert_eq!(loaded, set);
        assert_eq!(
            loaded.min_pairwise_hamming(),
            set.min_pairwise_hamming(),
            "recomputed diversity must match"
        );
    }

    #[test]
    fn load_rejects_non_bijective_and_duplicate_rows() {
        let bad = r#"{"n":3,"seed":0,"permutations":[[0,1,2],[0,0,2]]}"#;
        assert!(matches!(
            PermutationSet::from_json_str(bad).unwrap_err(),
            PermSetError::InvalidRow { row: 1, .. }
        ));
        let dup = r#"{"n":3,"seed":0,"permutations":[[0,1,2],[0,1,2]]}"#;
        assert!(matches!(
            PermutationSet::from_json_str(dup).unwrap_err(),
            PermSetError::DuplicateRow { row: 1 }
        ));
        let garbage = "{not json";
        assert!(matches!(
            PermutationSet::from_json_str(garbage).unwrap_err(),
            PermSetError::Parse(_)
        ));
    }

    #[test]
    fn greedy_first_pick_is_uniform_over_candidates() {
        // With different seeds the first element varies across the pool.
        let mut firsts = BTreeSet::new();
        for seed in 0..40 {
            let set = PermutationSet::generate(4, 1, seed).unwrap();
            firsts.insert(set.get(0).indices().to_vec());
        }
        assert!(firsts.len() > 10, "only {} distinct first picks", firsts.len());
    }
}
