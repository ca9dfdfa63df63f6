//! Single-cell LSTM applied over a sequence, with backpropagation through
//! time from the final hidden state.
//!
//! Gate layout in the fused weight matrices is `[input, forget, candidate,
//! output]`. Gates use the logistic sigmoid, the candidate and the cell output
//! use tanh, and the initial hidden and cell states are zero.

use super::{Matrix, NncoreError, ParamStore, RngState};

#[derive(Debug, Clone)]
pub struct LstmLayer {
    name: String,
    in_dim: usize,
    hidden: usize,
}

#[derive(Debug, Clone)]
struct StepCache {
    x: Matrix,
    h_prev: Matrix,
    c_prev: Matrix,
    i: Matrix,
    f: Matrix,
    g: Matrix,
    o: Matrix,
    tanh_c: Matrix,
}

/// Per-timestep intermediates for the backward pass, plus the final hidden
/// state.
#[derive(Debug, Clone)]
pub struct LstmCache {
    steps: Vec<StepCache>,
    pub final_hidden: Matrix,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmLayer {
    pub fn new(name: &str, in_dim: usize, hidden: usize) -> Self {
        assert!(in_dim >= 1 && hidden >= 1, "lstm dims must be >= 1");
        Self {
            name: name.to_string(),
            in_dim,
            hidden,
        }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn wx_name(&self) -> String {
        format!("{}.wx", self.name)
    }

    fn wh_name(&self) -> String {
        format!("{}.wh", self.name)
    }

    fn bias_name(&self) -> String {
        format!("{}.b", self.name)
    }

    pub fn register(&self, store: &mut ParamStore, rng: &mut RngState) -> Result<(), NncoreError> {
        let four_h = 4 * self.hidden;
        let bx = (6.0 / (self.in_dim + four_h) as f64).sqrt();
        let mut wx = Matrix::zeros(self.in_dim, four_h);
        for v in wx.values_mut() {
            *v = rng.uniform(-bx, bx);
        }
        let bh = (6.0 / (self.hidden + four_h) as f64).sqrt();
        let mut wh = Matrix::zeros(self.hidden, four_h);
        for v in wh.values_mut() {
            *v = rng.uniform(-bh, bh);
        }
        store.register(&self.wx_name(), wx)?;
        store.register(&self.wh_name(), wh)?;
        store.register(&self.bias_name(), Matrix::zeros(1, four_h))?;
        Ok(())
    }

    /// Runs the cell over `inputs` (each B×in, in time order) and returns the
    /// cache with the final hidden state (B×hidden).
    pub fn forward(&self, store: &ParamStore, inputs: &[Matrix]) -> LstmCache {
        assert!(!inputs.is_empty(), "lstm needs at least one timestep");
        let batch = inputs[0].rows();
        let h = self.hidden;
        let wx = store.value(&self.wx_name());
        let wh = store.value(&self.wh_name());
        let b = store.value(&self.bias_name());

        let mut h_prev = Matrix::zeros(batch, h);
        let mut c_prev = Matrix::zeros(batch, h);
        let mut steps = Vec::with_capacity(inputs.len());

        for x in inputs {
            assert_eq!(x.cols(), self.in_dim, "lstm '{}' input dim", self.name);
            assert_eq!(x.rows(), batch, "lstm batch size changed mid-sequence");
            let mut z = x.matmul(wx);
            z.add_assign(&h_prev.matmul(wh));
            z.add_row_bias(b.values());

            let mut i_g = Matrix::zeros(batch, h);
            let mut f_g = Matrix::zeros(batch, h);
            let mut g_g = Matrix::zeros(batch, h);
            let mut o_g = Matrix::zeros(batch, h);
            let mut c = Matrix::zeros(batch, h);
            let mut tanh_c = Matrix::zeros(batch, h);
            let mut h_new = Matrix::zeros(batch, h);
            for r in 0..batch {
                for j in 0..h {
                    let iv = sigmoid(z.get(r, j));
                    let fv = sigmoid(z.get(r, h + j));
                    let gv = z.get(r, 2 * h + j).tanh();
                    let ov = sigmoid(z.get(r, 3 * h + j));
                    let cv = fv * c_prev.get(r, j) + iv * gv;
                    let tc = cv.tanh();
                    i_g.set(r, j, iv);
                    f_g.set(r, j, fv);
                    g_g.set(r, j, gv);
                    o_g.set(r, j, ov);
                    c.set(r, j, cv);
                    tanh_c.set(r, j, tc);
                    h_new.set(r, j, ov * tc);
                }
            }
            steps.push(StepCache {
                x: x.clone(),
                h_prev: h_prev.clone(),
                c_prev: c_prev.clone(),
                i: i_g,
                f: f_g,
                g: g_g,
                o: o_g,
                tanh_c,
            });
            h_prev = h_new;
            c_prev = c;
        }

        LstmCache {
            steps,
            final_hidden: h_prev,
        }
    }

    /// Backpropagates a gradient on the final hidden state through the whole
    /// sequence, accumulating parameter gradients. Returns per-timestep input
    /// gradients.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &LstmCache,
        d_final_hidden: &Matrix,
    ) -> Vec<Matrix> {
        let h = self.hidden;
        let batch = d_final_hidden.rows();
        assert_eq!(d_final_hidden.cols(), h, "lstm backward shape");

        let wx = store.value(&self.wx_name()).clone();
        let wh = store.value(&self.wh_name()).clone();
        let mut d_wx = Matrix::zeros(wx.rows(), wx.cols());
        let mut d_wh = Matrix::zeros(wh.rows(), wh.cols());
        let mut d_b = Matrix::zeros(1, 4 * h);

        let mut d_h = d_final_hidden.clone();
        let mut d_c = Matrix::zeros(batch, h);
        let mut d_inputs = vec![Matrix::zeros(0, 0); cache.steps.len()];

        for (t, step) in cache.steps.iter().enumerate().rev() {
            // dz holds gate pre-activation gradients in [i, f, g, o] layout.
            let mut dz = Matrix::zeros(batch, 4 * h);
            for r in 0..batch {
                for j in 0..h {
                    let iv = step.i.get(r, j);
                    let fv = step.f.get(r, j);
                    let gv = step.g.get(r, j);
                    let ov = step.o.get(r, j);
                    let tc = step.tanh_c.get(r, j);
                    let dh = d_h.get(r, j);

                    let d_o = dh * tc;
                    let mut d_cell = d_c.get(r, j) + dh * ov * (1.0 - tc * tc);
                    let d_i = d_cell * gv;
                    let d_f = d_cell * step.c_prev.get(r, j);
                    let d_g = d_cell * iv;
                    d_cell *= fv; // flows to c_{t-1}

                    dz.set(r, j, d_i * iv * (1.0 - iv));
                    dz.set(r, h + j, d_f * fv * (1.0 - fv));
                    dz.set(r, 2 * h + j, d_g * (1.0 - gv * gv));
                    dz.set(r, 3 * h + j, d_o * ov * (1.0 - ov));
                    d_c.set(r, j, d_cell);
                }
            }
            d_wx.add_assign(&step.x.matmul_at_b(&dz));
            d_wh.add_assign(&step.h_prev.matmul_at_b(&dz));
            d_b.add_assign(&Matrix::row_vector(&dz.column_sums()));
            d_inputs[t] = dz.matmul_a_bt(&wx);
            d_h = dz.matmul_a_bt(&wh);
        }

        store.grad_mut(&self.wx_name()).add_assign(&d_wx);
        store.grad_mut(&self.wh_name()).add_assign(&d_wh);
        store.grad_mut(&self.bias_name()).add_assign(&d_b);
        d_inputs
    }
}
