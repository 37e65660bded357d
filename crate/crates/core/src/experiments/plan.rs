use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{LayerMask, LayerName};

/// Whether target training data joins pre-training (S1) or only fine-tuning (S2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    S1,
    S2,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::S1, Scenario::S2];

    pub fn includes_target(self) -> bool {
        self == Scenario::S1
    }
}

/// Feature transference approach: which layers are frozen or redrawn before fine-tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Approach {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
    A8,
}

impl Approach {
    pub const ALL: [Approach; 8] = [
        Approach::A1,
        Approach::A2,
        Approach::A3,
        Approach::A4,
        Approach::A5,
        Approach::A6,
        Approach::A7,
        Approach::A8,
    ];

    /// A1 evaluates the pre-trained network as is.
    pub fn fine_tunes(self) -> bool {
        self != Approach::A1
    }

    /// Frozen and re-initialized layers, before dropping layers a network lacks.
    pub fn layers(self) -> (Vec<LayerName>, Vec<LayerName>) {
        use LayerName::*;
        match self {
            Approach::A1 => (vec![Conv1, Conv2, Lstm, Fc1, Fc2, Out], vec![]),
            Approach::A2 => (vec![], vec![]),
            Approach::A3 => (vec![Conv1], vec![]),
            Approach::A4 => (vec![Conv1, Conv2], vec![]),
            Approach::A5 => (vec![Conv1, Conv2, Lstm], vec![]),
            Approach::A6 => (vec![Conv1], vec![Conv2, Lstm, Fc1, Fc2, Out]),
            Approach::A7 => (vec![Conv1, Conv2], vec![Lstm, Fc1, Fc2, Out]),
            Approach::A8 => (vec![Conv1, Conv2, Lstm], vec![Fc1, Fc2, Out]),
        }
    }

    /// The mask for a network with or without the recurrent layer.
    pub fn mask(self, has_lstm: bool) -> LayerMask {
        let keep = |l: &LayerName| has_lstm || *l != LayerName::Lstm;
        let (frozen, reinit) = self.layers();
        LayerMask::new(
            frozen.into_iter().filter(keep),
            reinit.into_iter().filter(keep),
        )
        .expect("approach table is disjoint")
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

impl FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Approach::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown approach `{s}`")))
    }
}

/// One transfer configuration for one target domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferPlan {
    pub scenario: Scenario,
    pub approach: Approach,
    pub target: String,
    pub sources: Vec<String>,
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
    pub seed: u64,
}

impl TransferPlan {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::Config(format!("no source domains for target `{}`", self.target)));
        }
        if self.sources.contains(&self.target) {
            return Err(Error::Config(format!(
                "target `{}` cannot also be a source",
                self.target
            )));
        }
        let mut sorted = self.sources.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.sources.len() {
            return Err(Error::Config("duplicate source domain".into()));
        }
        Ok(())
    }

    /// Fine-tuning epochs actually run; zero for A1.
    pub fn effective_finetune_epochs(&self) -> usize {
        if self.approach.fine_tunes() {
            self.finetune_epochs
        } else {
            0
        }
    }

    /// Column label such as `S1-A3`.
    pub fn cell(&self) -> String {
        cell_name(self.scenario, self.approach)
    }
}

pub fn cell_name(scenario: Scenario, approach: Approach) -> String {
    format!("{scenario}-{approach}")
}
