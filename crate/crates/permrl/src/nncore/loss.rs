//! Softmax and cross-entropy, with the gradient taken with respect to the
//! logits.

use super::Matrix;

/// Probabilities are clamped to this floor inside the log so the loss stays
/// finite for confident wrong predictions.
pub const PROB_FLOOR: f64 = 1e-12;

/// Numerically stable softmax of one logit row (max subtraction).
pub fn softmax_row(logits: &[f64]) -> Vec<f64> {
    assert!(!logits.is_empty(), "softmax of empty row");
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Row-wise softmax of a logit matrix.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(logits.rows(), logits.cols());
    for r in 0..logits.rows() {
        let p = softmax_row(logits.row(r));
        out.row_mut(r).copy_from_slice(&p);
    }
    out
}

/// Entropy of a probability vector in nats; `0 ln 0` is taken as 0.
pub fn entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Cross-entropy of one probability row against a target index. Returns the
/// loss and the gradient with respect to the logits (`p - onehot`).
pub fn cross_entropy(probs: &[f64], target: usize) -> (f64, Vec<f64>) {
    assert!(target < probs.len(), "target class out of range");
    let loss = -probs[target].max(PROB_FLOOR).ln();
    let mut d_logits = probs.to_vec();
    d_logits[target] -= 1.0;
    (loss, d_logits)
}

/// Mean cross-entropy over a batch of probability rows. The returned logit
/// gradient is already scaled by `1 / batch`.
pub fn cross_entropy_batch(probs: &Matrix, targets: &[usize]) -> (f64, Matrix) {
    assert_eq!(probs.rows(), targets.len(), "batch/target length mismatch");
    assert!(probs.rows() > 0, "empty batch");
    let scale = 1.0 / probs.rows() as f64;
    let mut total = 0.0;
    let mut d_logits = Matrix::zeros(probs.rows(), probs.cols());
    for r in 0..probs.rows() {
        let (loss, grad) = cross_entropy(probs.row(r), targets[r]);
        total += loss;
        let row = d_logits.row_mut(r);
        for (d, g) in row.iter_mut().zip(grad) {
            *d = g * scale;
        }
    }
    (total * scale, d_logits)
}
