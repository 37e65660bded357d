use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerName {
    Conv1,
    Conv2,
    Lstm,
    Fc1,
    Fc2,
    Out,
}

impl LayerName {
    pub const ALL: [LayerName; 6] = [
        LayerName::Conv1,
        LayerName::Conv2,
        LayerName::Lstm,
        LayerName::Fc1,
        LayerName::Fc2,
        LayerName::Out,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LayerName::Conv1 => "conv1",
            LayerName::Conv2 => "conv2",
            LayerName::Lstm => "lstm",
            LayerName::Fc1 => "fc1",
            LayerName::Fc2 => "fc2",
            LayerName::Out => "out",
        }
    }
}

impl fmt::Display for LayerName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LayerName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LayerName::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::UnknownLayer(s.to_string()))
    }
}

/// Which layers to freeze and which to re-draw before fine-tuning.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerMask {
    pub frozen: BTreeSet<LayerName>,
    pub reinit: BTreeSet<LayerName>,
}

impl LayerMask {
    pub fn new(
        frozen: impl IntoIterator<Item = LayerName>,
        reinit: impl IntoIterator<Item = LayerName>,
    ) -> Result<Self> {
        let mask = LayerMask {
            frozen: frozen.into_iter().collect(),
            reinit: reinit.into_iter().collect(),
        };
        if let Some(l) = mask.frozen.intersection(&mask.reinit).next() {
            return Err(Error::Contract(format!(
                "layer {l} cannot be both frozen and re-initialized"
            )));
        }
        Ok(mask)
    }

    pub fn parse(frozen: &[&str], reinit: &[&str]) -> Result<Self> {
        let f = frozen.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?;
        let r = reinit.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?;
        Self::new(f, r)
    }

    pub fn is_empty(&self) -> bool {
        self.frozen.is_empty() && self.reinit.is_empty()
    }
}
