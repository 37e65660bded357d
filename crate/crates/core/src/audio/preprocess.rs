use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Which part of an over-length recording to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CropMode {
    Head,
    #[default]
    Center,
    Tail,
}

/// Settings shared by every sample entering a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preprocess {
    #[serde(default = "default_rate")]
    pub working_rate: u32,
    pub input_length: usize,
    #[serde(default)]
    pub crop: CropMode,
}

fn default_rate() -> u32 {
    16_000
}

impl Preprocess {
    pub fn new(input_length: usize) -> Self {
        Preprocess {
            working_rate: default_rate(),
            input_length,
            crop: CropMode::Center,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.working_rate == 0 || self.input_length == 0 {
            return Err(Error::Config(
                "working_rate and input_length must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Linear-interpolation resampling with output length `round(n * to / from)`.
pub fn resample_linear(x: &[f64], from: u32, to: u32) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::Data("cannot resample an empty signal".into()));
    }
    if from == 0 || to == 0 {
        return Err(Error::Data("sample rates must be positive".into()));
    }
    if from == to {
        return Ok(x.to_vec());
    }
    let n_out = ((x.len() as f64 * to as f64 / from as f64).round() as usize).max(1);
    let step = from as f64 / to as f64;
    let last = x.len() - 1;
    Ok((0..n_out)
        .map(|i| {
            let pos = i as f64 * step;
            let i0 = (pos.floor() as usize).min(last);
            let i1 = (i0 + 1).min(last);
            let frac = pos - i0 as f64;
            x[i0] + (x[i1] - x[i0]) * frac.min(1.0)
        })
        .collect())
}

/// Crops or symmetrically zero-pads to `len`; padding puts the extra zero on the right.
pub fn fit_length(x: &[f64], len: usize, crop: CropMode) -> Vec<f64> {
    match x.len().cmp(&len) {
        std::cmp::Ordering::Equal => x.to_vec(),
        std::cmp::Ordering::Greater => {
            let excess = x.len() - len;
            let start = match crop {
                CropMode::Head => 0,
                CropMode::Center => excess / 2,
                CropMode::Tail => excess,
            };
            x[start..start + len].to_vec()
        }
        std::cmp::Ordering::Less => {
            let left = (len - x.len()) / 2;
            let mut out = vec![0.0; len];
            out[left..left + x.len()].copy_from_slice(x);
            out
        }
    }
}

/// Zero mean, unit population std; constant signals become all zeros.
pub fn standardize(x: &mut [f64]) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    for v in x.iter_mut() {
        *v = (*v - mean) / std;
    }
}

/// Resample, crop/pad, then standardize a decoded recording.
pub fn preprocess(samples: &[f64], rate: u32, cfg: &Preprocess) -> Result<Tensor> {
    cfg.validate()?;
    let resampled = resample_linear(samples, rate, cfg.working_rate)?;
    let mut fitted = fit_length(&resampled, cfg.input_length, cfg.crop);
    standardize(&mut fitted);
    Tensor::new(&[cfg.input_length], fitted)
}
