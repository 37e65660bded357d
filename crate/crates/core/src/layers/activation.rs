use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0)).expect("relu preserves finiteness")
}

/// Gradient of ReLU given the pre-activation input; the kink at 0 takes slope 0.
pub fn relu_backward(pre: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    if pre.shape() != grad_out.shape() {
        return Err(Error::Shape(format!(
            "relu_backward: {:?} vs {:?}",
            pre.shape(),
            grad_out.shape()
        )));
    }
    pre.zip_map(grad_out, "relu_backward", |x, g| if x > 0.0 { g } else { 0.0 })
}
