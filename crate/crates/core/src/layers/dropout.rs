use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropoutMode {
    Train,
    Eval,
}

/// Inverted dropout: survivors are scaled by `1/(1-rate)` at train time so
/// evaluation is the identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DropoutSpec {
    pub rate: f64,
    pub mode: DropoutMode,
}

impl DropoutSpec {
    pub fn new(rate: f64, mode: DropoutMode) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        Ok(DropoutSpec { rate, mode })
    }

    fn active(&self) -> bool {
        self.mode == DropoutMode::Train && self.rate > 0.0
    }

    /// Returns the output and the {0,1} keep mask.
    pub fn apply(&self, x: &Tensor, rng: &mut Rng) -> Result<(Tensor, Tensor)> {
        if !(0.0..1.0).contains(&self.rate) {
            return Err(Error::Config(format!(
                "dropout rate {} outside [0, 1)",
                self.rate
            )));
        }
        if !self.active() {
            return Ok((x.clone(), Tensor::filled(x.shape(), 1.0)));
        }
        let keep = 1.0 - self.rate;
        let mask_data: Vec<f64> = (0..x.len())
            .map(|_| if rng.bernoulli(keep) { 1.0 } else { 0.0 })
            .collect();
        let mask = Tensor::new(x.shape(), mask_data)?;
        let scale = 1.0 / keep;
        let y = x.zip_map(&mask, "dropout", |v, m| v * m * scale)?;
        Ok((y, mask))
    }

    pub fn backward(&self, grad_out: &Tensor, mask: &Tensor) -> Result<Tensor> {
        if !self.active() {
            return Ok(grad_out.clone());
        }
        let scale = 1.0 / (1.0 - self.rate);
        grad_out.zip_map(mask, "dropout_backward", |g, m| g * m * scale)
    }
}
