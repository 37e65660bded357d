use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are true labels, columns predictions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::Stats("confusion matrix must be square and non-empty".into()));
        }
        Ok(ConfusionMatrix {
            classes: k,
            counts: rows.concat(),
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let k = self.classes;
        if truth >= k || predicted >= k {
            return Err(Error::LabelOutOfRange {
                label: truth.max(predicted),
                classes: k,
            });
        }
        self.counts[truth * k + predicted] += 1;
        Ok(())
    }

    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class * self.classes..(class + 1) * self.classes]
            .iter()
            .sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::Stats("merging confusion matrices of different sizes".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Unweighted average recall over the classes that have support.
    pub fn uar(&self) -> Result<f64> {
        let recalls: Vec<f64> = (0..self.classes)
            .filter_map(|c| {
                let s = self.support(c);
                (s > 0).then(|| self.count(c, c) as f64 / s as f64)
            })
            .collect();
        if recalls.is_empty() {
            return Err(Error::Stats("UAR of an empty confusion matrix".into()));
        }
        Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
    }
}
