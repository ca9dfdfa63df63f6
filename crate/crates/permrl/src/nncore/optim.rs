//! SGD and Adam parameter updates over a whole [`ParamStore`].
//!
//! Both optimizers verify that gradients are finite before the update and
//! that parameters are finite afterwards; on violation they abort with an
//! error naming the tensor and the update step. Gradients are zeroed and the
//! store's step counter is incremented after a successful update.

use super::{Matrix, NncoreError, ParamStore};

fn check_finite(m: &Matrix, tensor: &str, step: u64) -> Result<(), NncoreError> {
    if m.all_finite() {
        Ok(())
    } else {
        Err(NncoreError::NonFinite {
            tensor: tensor.to_string(),
            step,
        })
    }
}

/// Plain gradient descent: `w -= lr * g` for every tensor.
pub fn sgd_step(store: &mut ParamStore, lr: f64) -> Result<(), NncoreError> {
    assert!(lr.is_finite() && lr > 0.0, "learning rate must be positive");
    let step = store.step() + 1;
    store.for_each_entry(|_, name, value, grad| {
        check_finite(grad, name, step)?;
        for (w, g) in value.values_mut().iter_mut().zip(grad.values()) {
            *w -= lr * g;
        }
        check_finite(value, name, step)?;
        grad.fill(0.0);
        Ok(())
    })?;
    store.bump_step();
    Ok(())
}

/// First/second moment estimates for Adam, laid out parallel to the store's
/// registration order.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: u64,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> Self {
        let m = store
            .snapshot_values()
            .into_iter()
            .map(|w| Matrix::zeros(w.rows(), w.cols()))
            .collect::<Vec<_>>();
        Self { v: m.clone(), m, t: 0 }
    }

    pub fn t(&self) -> u64 {
        self.t
    }
}

/// One Adam update with bias correction.
pub fn adam_step(
    store: &mut ParamStore,
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> Result<(), NncoreError> {
    assert!(lr.is_finite() && lr > 0.0, "learning rate must be positive");
    assert!((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2));
    assert_eq!(state.m.len(), store.len(), "Adam state layout mismatch");

    state.t += 1;
    let t = state.t;
    let corr1 = 1.0 - beta1.powi(t as i32);
    let corr2 = 1.0 - beta2.powi(t as i32);
    let step = store.step() + 1;

    let m_all = &mut state.m;
    let v_all = &mut state.v;
    store.for_each_entry(|i, name, value, grad| {
        check_finite(grad, name, step)?;
        let m = &mut m_all[i];
        let v = &mut v_all[i];
        assert_eq!(m.shape(), value.shape(), "Adam state shape mismatch");
        for (((w, g), mi), vi) in value
            .values_mut()
            .iter_mut()
            .zip(grad.values())
            .zip(m.values_mut())
            .zip(v.values_mut())
        {
            *mi = beta1 * *mi + (1.0 - beta1) * g;
            *vi = beta2 * *vi + (1.0 - beta2) * g * g;
            let m_hat = *mi / corr1;
            let v_hat = *vi / corr2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        check_finite(value, name, step)?;
        grad.fill(0.0);
        Ok(())
    })?;
    store.bump_step();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_store(w: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.register("w", Matrix::from_vec(1, 1, vec![w])).unwrap();
        s
    }

    #[test]
    fn sgd_applies_textbook_update() {
        let mut s = scalar_store(1.0);
        s.grad_mut("w").set(0, 0, 2.0);
        sgd_step(&mut s, 0.1).unwrap();
        assert!((s.value("w").get(0, 0) - 0.8).abs() < 1e-15);
        assert_eq!(s.grad("w").get(0, 0), 0.0);
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn sgd_converges_on_a_quadratic() {
        // loss = (w - 3)^2, gradient = 2 (w - 3)
        let mut s = scalar_store(0.0);
        for _ in 0..100 {
            let w = s.value("w").get(0, 0);
            s.grad_mut("w").set(0, 0, 2.0 * (w - 3.0));
            sgd_step(&mut s, 0.1).unwrap();
        }
        assert!((s.value("w").get(0, 0) - 3.0).abs() < 1e-4);
    }

    #[test]
    fn adam_first_step_magnitude_is_learning_rate() {
        for &g in &[1e-3, 1.0, 1e3] {
            let mut s = scalar_store(0.0);
            let mut adam = AdamState::new(&s);
            s.grad_mut("w").set(0, 0, g);
            adam_step(&mut s, &mut adam, 0.01, 0.9, 0.999, 1e-8).unwrap();
            let delta = s.value("w").get(0, 0).abs();
            assert!(
                (delta - 0.01).abs() < 1e-4 * 0.01 + 1e-9,
                "gradient {g} moved {delta}"
            );
        }
    }

    #[test]
    fn non_finite_gradient_names_tensor_and_step() {
        let mut s = scalar_store(0.0);
        s.grad_mut("w").set(0, 0, f64::NAN);
        let err = sgd_step(&mut s, 0.1).unwrap_err();
        match err {
            NncoreError::NonFinite { tensor, step } => {
                assert_eq!(tensor, "w");
                assert_eq!(step, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn adam_with_zero_gradient_leaves_parameters_unchanged() {
        let mut s = scalar_store(0.75);
        let mut adam = AdamState::new(&s);
        adam_step(&mut s, &mut adam, 0.01, 0.9, 0.999, 1e-8).unwrap();
        assert_eq!(s.value("w").get(0, 0), 0.75);
    }
}
