//! Property-based checks of the library's structural invariants: permutation
//! algebra, pool construction, probability outputs, state-matrix bounds,
//! grouping features, and the reward extrapolation.

use proptest::prelude::*;

use permrl::curriculum::{
    aggregate_state, extrapolated_error, kmeans, validate, NetworkStateMatrix, ValidationProbe,
};
use permrl::nncore::{softmax_row, Matrix, RngState};
use permrl::permset::{Permutation, PermutationSet};
use permrl::toydata::{generate, normalize_part, DatasetSpec, TaskKind};

/// A shuffled 0..n index vector, i.e. an arbitrary permutation.
fn arb_perm(max_n: usize) -> impl Strategy<Value = Permutation> {
    (2..=max_n, any::<u64>()).prop_map(|(n, seed)| {
        let mut indices: Vec<usize> = (0..n).collect();
        RngState::new(seed).shuffle(&mut indices);
        Permutation::new(indices).expect("a shuffled identity is a bijection")
    })
}

fn finite_logits(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-30.0f64..30.0, len..=len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_then_inverse_restores_the_original(perm in arb_perm(8), seed in any::<u64>()) {
        let n = perm.len();
        let mut payload: Vec<u32> = (0..n as u32).collect();
        RngState::new(seed).shuffle(&mut payload);

        let shuffled = perm.apply(&payload).unwrap();
        let restored = perm.invert().apply(&shuffled).unwrap();
        prop_assert_eq!(restored, payload);
    }

    #[test]
    fn inverse_composition_lands_on_identity(perm in arb_perm(8)) {
        let n = perm.len();
        let ordered: Vec<usize> = (0..n).collect();
        let round_trip = perm.invert().apply(&perm.apply(&ordered).unwrap()).unwrap();
        prop_assert_eq!(round_trip, ordered);
    }

    #[test]
    fn hamming_is_symmetric_zero_iff_equal_and_never_one(
        a in arb_perm(7),
        b_seed in any::<u64>(),
    ) {
        let n = a.len();
        let mut indices: Vec<usize> = (0..n).collect();
        RngState::new(b_seed).shuffle(&mut indices);
        let b = Permutation::new(indices).unwrap();

        let d_ab = a.hamming(&b).unwrap();
        let d_ba = b.hamming(&a).unwrap();
        prop_assert_eq!(d_ab, d_ba);
        prop_assert_ne!(d_ab, 1, "two bijections cannot disagree in exactly one slot");
        prop_assert_eq!(d_ab == 0, a.indices() == b.indices());
        prop_assert_eq!(a.hamming(&a).unwrap(), 0);
    }

    #[test]
    fn generated_pools_are_distinct_and_spread(
        n in 3usize..=6,
        requested in 2usize..=20,
        seed in any::<u64>(),
    ) {
        let feasible: usize = (1..=n).product();
        let size = requested.min(feasible);
        let set = PermutationSet::generate(n, size, seed).unwrap();
        prop_assert_eq!(set.len(), size);

        let mut brute_min = usize::MAX;
        for i in 0..set.len() {
            // Each member is a bijection over 0..n.
            let mut sorted = set.get(i).indices().to_vec();
            sorted.sort_unstable();
            let expect: Vec<usize> = (0..n).collect();
            prop_assert_eq!(sorted, expect);
            for j in i + 1..set.len() {
                brute_min = brute_min.min(set.get(i).hamming(set.get(j)).unwrap());
            }
        }
        prop_assert_eq!(set.min_pairwise_hamming(), brute_min);
        prop_assert!(brute_min >= 2, "pool members must be distinct, so min distance >= 2");
    }

    #[test]
    fn softmax_rows_are_simplex_points_and_shift_invariant(
        logits in finite_logits(9),
        shift in -50.0f64..50.0,
    ) {
        let probs = softmax_row(&logits);
        let total: f64 = probs.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "sum {total}");
        prop_assert!(probs.iter().all(|&p| p > 0.0 && p <= 1.0));

        let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
        for (p, q) in probs.iter().zip(softmax_row(&shifted)) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn normalization_is_centered_bounded_and_affine_invariant(
        values in prop::collection::vec(-100.0f64..100.0, 4..=64),
        scale in 0.01f64..100.0,
        offset in -100.0f64..100.0,
    ) {
        let out = normalize_part(&values);
        let mean: f64 = out.iter().sum::<f64>() / out.len() as f64;
        let max_abs = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(mean.abs() < 1e-9, "mean {mean}");
        prop_assert!(max_abs <= 1.0 + 1e-12);
        // Either the part was constant (all zeros) or the extreme hits 1.
        prop_assert!(max_abs == 0.0 || (max_abs - 1.0).abs() < 1e-12);

        let transformed: Vec<f64> = values.iter().map(|v| scale * v + offset).collect();
        for (a, b) in out.iter().zip(normalize_part(&transformed)) {
            prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn extrapolation_is_clamped_to_the_unit_interval(
        errors in prop::collection::vec(0.0f64..=1.0, 1..=12),
    ) {
        let prediction = extrapolated_error(&errors);
        prop_assert!((0.0..=1.0).contains(&prediction), "prediction {prediction}");
        let n = errors.len();
        if n == 1 {
            prop_assert_eq!(prediction, errors[0]);
        } else {
            let raw = 2.0 * errors[n - 1] - errors[n - 2];
            prop_assert_eq!(prediction, raw.clamp(0.0, 1.0));
        }
    }
}

/// Probe emitting arbitrary (but seeded) softmax rows: exercises the ratio
/// computation with adversarial inputs instead of trained-model outputs.
struct NoisyProbe {
    n_classes: usize,
    rng: RngState,
}

impl ValidationProbe for NoisyProbe {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn probs(&mut self, _perm_id: usize, parts: &[Matrix]) -> Matrix {
        let batch = parts.first().map(Matrix::rows).unwrap_or(0);
        let mut out = Matrix::zeros(batch, self.n_classes);
        for r in 0..batch {
            let logits: Vec<f64> = (0..self.n_classes)
                .map(|_| self.rng.uniform(-20.0, 20.0))
                .collect();
            out.row_mut(r).copy_from_slice(&softmax_row(&logits));
        }
        out
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn state_entries_stay_within_the_ratio_bounds(probe_seed in any::<u64>()) {
        let spec = DatasetSpec {
            n_train: 4,
            n_val: 5,
            n_test: 2,
            ..DatasetSpec::spatial(9)
        };
        let dataset = generate(&spec).unwrap();
        let set = PermutationSet::generate(4, 10, 3).unwrap();
        let mut probe = NoisyProbe { n_classes: set.len(), rng: RngState::new(probe_seed) };
        let state = validate(&mut probe, &dataset.val, &set, TaskKind::Spatial).unwrap();
        for p in 0..state.n_perms() {
            for s in 0..state.n_samples() {
                let y = state.ratios.get(p, s);
                prop_assert!((0.5..=2.0).contains(&y), "ratio {y} out of bounds");
            }
        }
        prop_assert!((0.0..=1.0).contains(&state.error));
    }

    #[test]
    fn grouped_features_ignore_group_labels(label_seed in any::<u64>(), data_seed in any::<u64>()) {
        // Build a small ratio matrix, group it, then relabel the groups; the
        // multiset of (size, median) pairs must not change.
        let mut rng = RngState::new(data_seed);
        let n_perms = 12;
        let mut ratios = Matrix::zeros(n_perms, 6);
        for p in 0..n_perms {
            for s in 0..6 {
                ratios.set(p, s, rng.uniform(0.5, 2.0));
            }
        }
        let state = NetworkStateMatrix {
            task: TaskKind::Spatial,
            ratios,
            per_perm_error: vec![0.5; n_perms],
            error: 0.5,
            forwards: 0,
        };
        let grouping = kmeans(&state.ratios, 4, 11).unwrap();
        let grouped = aggregate_state(&state, &grouping);

        // Relabel: permute group ids with a random bijection.
        let mut relabel: Vec<usize> = (0..4).collect();
        RngState::new(label_seed).shuffle(&mut relabel);
        let assignment: Vec<usize> =
            grouping.assignment.iter().map(|&g| relabel[g]).collect();
        let mut members = vec![Vec::new(); 4];
        for (point, &g) in assignment.iter().enumerate() {
            members[g].push(point);
        }
        let mut centroids = Matrix::zeros(4, grouping.centroids.cols());
        for old in 0..4 {
            centroids
                .row_mut(relabel[old])
                .copy_from_slice(grouping.centroids.row(old));
        }
        let relabeled = permrl::curriculum::Grouping {
            assignment,
            members,
            centroids,
        };
        let grouped2 = aggregate_state(&state, &relabeled);

        let as_pairs = |g: &permrl::curriculum::GroupedState| {
            let mut pairs: Vec<(String, String)> = g
                .sizes
                .iter()
                .zip(&g.medians)
                .map(|(&sz, &m)| (format!("{sz:.12}"), format!("{m:.12}")))
                .collect();
            pairs.sort();
            pairs
        };
        prop_assert_eq!(as_pairs(&grouped), as_pairs(&grouped2));
    }
}
