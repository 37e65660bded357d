use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::layers::Conv1d;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvConfig {
    pub filters: usize,
    pub width: usize,
    pub stride: usize,
}

/// Network geometry.
///
/// `scale` multiplies the layer widths (filter counts, LSTM hidden size and
/// fully connected sizes, each rounded and kept ≥ 1); the input length,
/// kernel widths and strides are taken as given.
///
/// Parameter count, with `F1, F2` filters, `k1, k2` kernel widths, `H` the
/// LSTM hidden size, `D1, D2` the FC sizes, `K` classes and `L2` the conv2
/// output length:
///
/// ```text
/// conv1  F1·k1 + F1
/// conv2  F2·F1·k2 + F2
/// lstm   2·(4H·F2 + 4H·H + 4H)
/// fc1    D1·I + D1        I = 2H with the LSTM, F2·L2 without
/// fc2    D2·D1 + D2
/// out    K·D2 + K
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub input_length: usize,
    pub conv1: ConvConfig,
    pub conv2: ConvConfig,
    pub lstm_hidden: usize,
    pub fc_sizes: [usize; 2],
    pub num_classes: usize,
    pub dropout: f64,
    pub use_lstm: bool,
    pub scale: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            input_length: 54_000,
            conv1: ConvConfig {
                filters: 128,
                width: 16,
                stride: 8,
            },
            conv2: ConvConfig {
                filters: 128,
                width: 16,
                stride: 8,
            },
            lstm_hidden: 500,
            fc_sizes: [1000, 1000],
            num_classes: 6,
            dropout: 0.30,
            use_lstm: true,
            scale: 1.0,
        }
    }
}

/// Concrete sizes after applying `scale`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Resolved {
    pub conv1: Conv1d,
    pub conv2: Conv1d,
    pub conv1_len: usize,
    pub seq_len: usize,
    pub hidden: usize,
    pub fc1: usize,
    pub fc2: usize,
    pub fc1_in: usize,
    pub classes: usize,
}

impl NetworkConfig {
    /// The small configuration used for desk-scale experiments.
    pub fn desk() -> Self {
        NetworkConfig {
            input_length: 2000,
            conv1: ConvConfig {
                filters: 16,
                width: 16,
                stride: 8,
            },
            conv2: ConvConfig {
                filters: 16,
                width: 16,
                stride: 8,
            },
            lstm_hidden: 32,
            fc_sizes: [64, 64],
            ..NetworkConfig::default()
        }
    }

    fn scaled(&self, v: usize) -> usize {
        ((v as f64 * self.scale).round() as usize).max(1)
    }

    pub(crate) fn resolve(&self) -> Result<Resolved> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!("network.scale {} must be positive", self.scale)));
        }
        if self.num_classes < 2 {
            return Err(Error::Config("network.num_classes must be at least 2".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("network.dropout {} outside [0, 1)", self.dropout)));
        }
        let positive = [
            ("input_length", self.input_length),
            ("conv1.filters", self.conv1.filters),
            ("conv1.width", self.conv1.width),
            ("conv1.stride", self.conv1.stride),
            ("conv2.filters", self.conv2.filters),
            ("conv2.width", self.conv2.width),
            ("conv2.stride", self.conv2.stride),
            ("lstm_hidden", self.lstm_hidden),
            ("fc_sizes[0]", self.fc_sizes[0]),
            ("fc_sizes[1]", self.fc_sizes[1]),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("network.{name} must be positive")));
        }
        let f1 = self.scaled(self.conv1.filters);
        let f2 = self.scaled(self.conv2.filters);
        let conv1 = Conv1d::new(1, f1, self.conv1.width, self.conv1.stride)?;
        let conv2 = Conv1d::new(f1, f2, self.conv2.width, self.conv2.stride)?;
        let conv1_len = conv1
            .output_len(self.input_length)
            .map_err(|_| Error::Config(format!(
                "input_length {} shorter than conv1 width {}",
                self.input_length, self.conv1.width
            )))?;
        let seq_len = conv2.output_len(conv1_len).map_err(|_| {
            Error::Config(format!(
                "conv1 output length {conv1_len} shorter than conv2 width {}",
                self.conv2.width
            ))
        })?;
        let hidden = self.scaled(self.lstm_hidden);
        let fc1_in = if self.use_lstm { 2 * hidden } else { f2 * seq_len };
        Ok(Resolved {
            conv1,
            conv2,
            conv1_len,
            seq_len,
            hidden,
            fc1: self.scaled(self.fc_sizes[0]),
            fc2: self.scaled(self.fc_sizes[1]),
            fc1_in,
            classes: self.num_classes,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    /// Closed-form parameter count (see the type-level docs).
    pub fn param_count(&self) -> Result<usize> {
        let r = self.resolve()?;
        let (f1, f2) = (r.conv1.filters, r.conv2.filters);
        let h = r.hidden;
        let lstm = if self.use_lstm {
            2 * (4 * h * f2 + 4 * h * h + 4 * h)
        } else {
            0
        };
        Ok(f1 * r.conv1.kernel_width
            + f1
            + f2 * f1 * r.conv2.kernel_width
            + f2
            + lstm
            + r.fc1 * r.fc1_in
            + r.fc1
            + r.fc2 * r.fc1
            + r.fc2
            + r.classes * r.fc2
            + r.classes)
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> [u8; 32] {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).into()
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(self.hash())
    }
}
