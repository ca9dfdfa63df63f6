//! K-means grouping of permutations by validation behavior, and the grouped
//! feature vector the policy consumes.
//!
//! Permutations whose confidence-ratio rows look alike are clustered so the
//! policy acts on a handful of difficulty groups instead of |Ψ| individual
//! permutations. Group slots are canonicalized by ascending median ratio, so
//! "action 0" always means "currently hardest group" regardless of the group
//! ids k-means happened to assign.

use crate::nncore::{Matrix, RngState};

use super::state::NetworkStateMatrix;
use super::CurriculumError;

/// Result of clustering: a group id per point, members per group, and the
/// final centroids. Post-repair, every group is nonempty.
#[derive(Debug, Clone)]
pub struct Grouping {
    /// `assignment[i]` is the group id of point (permutation) `i`.
    pub assignment: Vec<usize>,
    /// `members[g]` lists the point indices of group `g`, ascending.
    pub members: Vec<Vec<usize>>,
    /// k × dim matrix of group means.
    pub centroids: Matrix,
}

impl Grouping {
    pub fn n_groups(&self) -> usize {
        self.members.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Seeded k-means with farthest-point initialization.
///
/// The first centroid is a uniformly drawn point; each subsequent centroid is
/// the point maximizing its minimum squared distance to those already chosen
/// (ties toward the smallest index). Lloyd iterations run until centroids
/// move less than 1e-9 or 100 rounds elapse; nearest-centroid ties resolve to
/// the smallest group id. An empty group is repaired by splitting the largest
/// group (ties toward the smallest id) at the member farthest from its
/// centroid (ties toward the smallest index).
pub fn kmeans(points: &Matrix, k: usize, seed: u64) -> Result<Grouping, CurriculumError> {
    let n = points.rows();
    if k == 0 {
        return Err(CurriculumError::NoClusters);
    }
    if k > n {
        return Err(CurriculumError::GroupCount {
            requested: k,
            available: n,
        });
    }

    let mut rng = RngState::for_subsystem(seed, "kmeans");
    let mut chosen = vec![rng.below(n)];
    while chosen.len() < k {
        let mut best = 0usize;
        let mut best_d = f64::NEG_INFINITY;
        for i in 0..n {
            let d = chosen
                .iter()
                .map(|&c| sq_dist(points.row(i), points.row(c)))
                .fold(f64::INFINITY, f64::min);
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        chosen.push(best);
    }

    let dim = points.cols();
    let mut centroids = Matrix::zeros(k, dim);
    for (g, &i) in chosen.iter().enumerate() {
        centroids.row_mut(g).copy_from_slice(points.row(i));
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..100 {
        // Assignment step.
        for i in 0..n {
            let mut best = 0usize;
            let mut best_d = sq_dist(points.row(i), centroids.row(0));
            for g in 1..k {
                let d = sq_dist(points.row(i), centroids.row(g));
                if d < best_d {
                    best_d = d;
                    best = g;
                }
            }
            assignment[i] = best;
        }

        repair_empty_groups(points, &centroids, &mut assignment, k);

        // Update step.
        let mut movement: f64 = 0.0;
        let mut sums = Matrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let g = assignment[i];
            counts[g] += 1;
            let row = sums.row_mut(g);
            for (acc, &v) in row.iter_mut().zip(points.row(i)) {
                *acc += v;
            }
        }
        for g in 0..k {
            let count = counts[g] as f64;
            let old: Vec<f64> = centroids.row(g).to_vec();
            let new_row = centroids.row_mut(g);
            for (c, &s) in new_row.iter_mut().zip(sums.row(g)) {
                *c = s / count;
            }
            movement = movement.max(sq_dist(&old, centroids.row(g)).sqrt());
        }
        if movement < 1e-9 {
            break;
        }
    }

    let mut members = vec![Vec::new(); k];
    for (i, &g) in assignment.iter().enumerate() {
        members[g].push(i);
    }
    debug_assert!(members.iter().all(|m| !m.is_empty()));
    Ok(Grouping {
        assignment,
        members,
        centroids,
    })
}

fn repair_empty_groups(points: &Matrix, centroids: &Matrix, assignment: &mut [usize], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &g in assignment.iter() {
            counts[g] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        // Largest group, ties toward the smallest id.
        let mut donor = 0usize;
        for g in 1..k {
            if counts[g] > counts[donor] {
                donor = g;
            }
        }
        // Farthest member of the donor from its centroid, ties toward the
        // smallest index.
        let mut far = None;
        let mut far_d = f64::NEG_INFINITY;
        for (i, &g) in assignment.iter().enumerate() {
            if g != donor {
                continue;
            }
            let d = sq_dist(points.row(i), centroids.row(donor));
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let far = far.expect("largest group cannot be empty");
        assignment[far] = empty;
    }
}

/// Within-cluster sum of squares for an assignment, with centroids taken as
/// the group means. The objective k-means minimizes.
pub fn wcss(points: &Matrix, assignment: &[usize], k: usize) -> f64 {
    let dim = points.cols();
    let mut sums = Matrix::zeros(k, dim);
    let mut counts = vec![0usize; k];
    for (i, &g) in assignment.iter().enumerate() {
        counts[g] += 1;
        for (acc, &v) in sums.row_mut(g).iter_mut().zip(points.row(i)) {
            *acc += v;
        }
    }
    let mut means = sums;
    for g in 0..k {
        if counts[g] > 0 {
            let inv = 1.0 / counts[g] as f64;
            for v in means.row_mut(g) {
                *v *= inv;
            }
        }
    }
    assignment
        .iter()
        .enumerate()
        .map(|(i, &g)| sq_dist(points.row(i), means.row(g)))
        .sum()
}

/// Clusters the state matrix rows (one per permutation) into `n_groups`
/// difficulty groups.
pub fn group_permutations(
    state: &NetworkStateMatrix,
    n_groups: usize,
    seed: u64,
) -> Result<Grouping, CurriculumError> {
    kmeans(&state.ratios, n_groups, seed)
}

/// Policy-facing summary: one (normalized size, median ratio) pair per group,
/// slots ordered by ascending median. Slot 0 is the hardest group (lowest
/// confidence); ties between equal medians fall back to ascending group id.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedState {
    /// `group_ids[slot]` is the original k-means group id behind each slot.
    pub group_ids: Vec<usize>,
    /// Group sizes divided by the total number of permutations; sums to 1.
    pub sizes: Vec<f64>,
    /// Median confidence ratio per group, non-decreasing across slots.
    pub medians: Vec<f64>,
}

impl GroupedState {
    pub fn n_groups(&self) -> usize {
        self.group_ids.len()
    }

    /// Interleaved `[size_0, median_0, size_1, median_1, ...]` — the policy
    /// input vector of length 2 × n_groups.
    pub fn features(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.n_groups());
        for slot in 0..self.n_groups() {
            out.push(self.sizes[slot]);
            out.push(self.medians[slot]);
        }
        out
    }
}

fn median_sorted(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median member-row ratio per slot for a fixed slot → group mapping.
///
/// Used when the same grouping is evaluated against a later state matrix:
/// slot order is kept as given (no re-sorting), so slot k still refers to the
/// same group it did when the grouping was formed.
pub fn slot_medians(
    state: &NetworkStateMatrix,
    grouping: &Grouping,
    slot_group_ids: &[usize],
) -> Vec<f64> {
    slot_group_ids
        .iter()
        .map(|&g| {
            let members = &grouping.members[g];
            assert!(!members.is_empty(), "group {g} is empty");
            let mut values: Vec<f64> = members
                .iter()
                .flat_map(|&i| state.ratios.row(i).iter().copied())
                .collect();
            median_sorted(&mut values)
        })
        .collect()
}

/// Condenses the state matrix into the grouped feature vector: per group its
/// normalized size and the median over all member-row entries, slots sorted
/// by ascending median (group id breaks ties).
pub fn aggregate_state(state: &NetworkStateMatrix, grouping: &Grouping) -> GroupedState {
    let n_perms = state.n_perms() as f64;
    let mut slots: Vec<(usize, f64, f64)> = grouping
        .members
        .iter()
        .enumerate()
        .map(|(g, members)| {
            assert!(!members.is_empty(), "group {g} is empty");
            let mut values: Vec<f64> = members
                .iter()
                .flat_map(|&i| state.ratios.row(i).iter().copied())
                .collect();
            let median = median_sorted(&mut values);
            (g, members.len() as f64 / n_perms, median)
        })
        .collect();
    slots.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));

    GroupedState {
        group_ids: slots.iter().map(|s| s.0).collect(),
        sizes: slots.iter().map(|s| s.1).collect(),
        medians: slots.iter().map(|s| s.2).collect(),
    }
}
