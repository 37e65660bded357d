use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Softmax cross-entropy for a single example.
///
/// Returns `-log softmax(logits)[label]` (computed after max subtraction) and
/// its gradient `softmax(logits) - onehot(label)`.
pub fn softmax_ce(logits: &Tensor, label: usize) -> Result<(f64, Tensor)> {
    let k = logits.len();
    if label >= k {
        return Err(Error::LabelOutOfRange { label, classes: k });
    }
    let z = logits.data();
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let loss = total.ln() - (z[label] - max);
    let mut grad: Vec<f64> = exps.iter().map(|e| e / total).collect();
    grad[label] -= 1.0;
    Ok((loss.max(0.0), Tensor::new(logits.shape(), grad)?))
}

pub fn softmax(logits: &Tensor) -> Tensor {
    let z = logits.data();
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Tensor::new(logits.shape(), exps.iter().map(|e| e / total).collect())
        .expect("softmax of finite logits")
}
