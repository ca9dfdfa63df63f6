//! Fully connected layer with hand-derived backward pass.

use super::{Matrix, NncoreError, ParamStore, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
}

/// A dense layer `act(x · W + b)` whose parameters live in a [`ParamStore`]
/// under `{name}.w` (in×out) and `{name}.b` (1×out).
#[derive(Debug, Clone)]
pub struct DenseLayer {
    name: String,
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
}

/// Forward intermediates needed by the backward pass.
#[derive(Debug, Clone)]
pub struct DenseCache {
    pub input: Matrix,
    pub pre: Matrix,
    pub output: Matrix,
}

impl DenseLayer {
    pub fn new(name: &str, in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        assert!(in_dim >= 1 && out_dim >= 1, "dense dims must be >= 1");
        Self {
            name: name.to_string(),
            in_dim,
            out_dim,
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn weight_name(&self) -> String {
        format!("{}.w", self.name)
    }

    fn bias_name(&self) -> String {
        format!("{}.b", self.name)
    }

    /// Registers weights drawn uniformly from ±sqrt(6 / (fan_in + fan_out))
    /// and a zero bias.
    pub fn register(&self, store: &mut ParamStore, rng: &mut RngState) -> Result<(), NncoreError> {
        let bound = (6.0 / (self.in_dim + self.out_dim) as f64).sqrt();
        let mut w = Matrix::zeros(self.in_dim, self.out_dim);
        for v in w.values_mut() {
            *v = rng.uniform(-bound, bound);
        }
        store.register(&self.weight_name(), w)?;
        store.register(&self.bias_name(), Matrix::zeros(1, self.out_dim))?;
        Ok(())
    }

    /// `input` is B×in; returns cache with pre-activation and output (B×out).
    pub fn forward(&self, store: &ParamStore, input: &Matrix) -> DenseCache {
        assert_eq!(input.cols(), self.in_dim, "dense '{}' input dim", self.name);
        let w = store.value(&self.weight_name());
        let b = store.value(&self.bias_name());
        let mut pre = input.matmul(w);
        pre.add_row_bias(b.values());
        let output = match self.activation {
            Activation::Linear => pre.clone(),
            Activation::Relu => pre.map(|v| if v > 0.0 { v } else { 0.0 }),
            Activation::Tanh => pre.map(f64::tanh),
        };
        DenseCache {
            input: input.clone(),
            pre,
            output,
        }
    }

    /// Accumulates parameter gradients for the cached forward call and returns
    /// the gradient with respect to the input.
    pub fn backward(&self, store: &mut ParamStore, cache: &DenseCache, d_out: &Matrix) -> Matrix {
        assert_eq!(d_out.shape(), cache.output.shape(), "dense backward shape");
        let d_pre = match self.activation {
            Activation::Linear => d_out.clone(),
            Activation::Relu => {
                let mut d = d_out.clone();
                for (g, &p) in d.values_mut().iter_mut().zip(cache.pre.values()) {
                    if p <= 0.0 {
                        *g = 0.0;
                    }
                }
                d
            }
            Activation::Tanh => {
                let mut d = d_out.clone();
                for (g, &o) in d.values_mut().iter_mut().zip(cache.output.values()) {
                    *g *= 1.0 - o * o;
                }
                d
            }
        };
        let d_w = cache.input.matmul_at_b(&d_pre);
        store.grad_mut(&self.weight_name()).add_assign(&d_w);
        let d_b = d_pre.column_sums();
        store
            .grad_mut(&self.bias_name())
            .add_assign(&Matrix::row_vector(&d_b));
        let w = store.value(&self.weight_name());
        d_pre.matmul_a_bt(w)
    }
}
