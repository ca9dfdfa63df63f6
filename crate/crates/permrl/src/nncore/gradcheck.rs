//! Central finite-difference verification of backward passes.

use super::{ParamStore, RngState};

const FD_STEP: f64 = 1e-5;
const MAX_COORDS_PER_TENSOR: usize = 200;

#[derive(Debug, Clone)]
pub struct TensorCheck {
    pub tensor: String,
    pub coords_checked: usize,
    pub max_rel_error: f64,
    /// (analytic, numeric) pair at the worst coordinate.
    pub worst_pair: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    let denom = (analytic.abs() + numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / denom
}

/// Compares analytic gradients against central finite differences.
///
/// `compute(store, with_grad)` must evaluate the scalar loss; when
/// `with_grad` is true it must also accumulate gradients into the store
/// (which arrives zeroed). Up to 200 coordinates per tensor are probed, at a
/// seeded subsample when the tensor is larger; parameters are restored after
/// every probe.
pub fn grad_check<F>(store: &mut ParamStore, mut compute: F, seed: u64) -> GradCheckReport
where
    F: FnMut(&mut ParamStore, bool) -> f64,
{
    store.zero_grads();
    compute(store, true);
    let analytic = store.snapshot_grads();
    store.zero_grads();

    let names: Vec<String> = store.names().iter().map(|s| s.to_string()).collect();
    let mut rng = RngState::new(seed);
    let mut tensors = Vec::with_capacity(names.len());
    let mut overall: f64 = 0.0;

    for (t_idx, name) in names.iter().enumerate() {
        let n = analytic[t_idx].len();
        let coords: Vec<usize> = if n <= MAX_COORDS_PER_TENSOR {
            (0..n).collect()
        } else {
            rng.sample_distinct(n, MAX_COORDS_PER_TENSOR)
        };

        let mut max_rel: f64 = 0.0;
        let mut worst = (0.0, 0.0);
        for &c in &coords {
            let original = store.value(name).values()[c];
            store.value_mut(name).values_mut()[c] = original + FD_STEP;
            let loss_plus = compute(store, false);
            store.value_mut(name).values_mut()[c] = original - FD_STEP;
            let loss_minus = compute(store, false);
            store.value_mut(name).values_mut()[c] = original;

            let numeric = (loss_plus - loss_minus) / (2.0 * FD_STEP);
            let a = analytic[t_idx].values()[c];
            let rel = rel_error(a, numeric);
            if rel > max_rel {
                max_rel = rel;
                worst = (a, numeric);
            }
        }
        overall = overall.max(max_rel);
        tensors.push(TensorCheck {
            tensor: name.clone(),
            coords_checked: coords.len(),
            max_rel_error: max_rel,
            worst_pair: worst,
        });
    }

    GradCheckReport {
        tensors,
        max_rel_error: overall,
    }
}
