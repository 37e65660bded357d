use crate::error::{Error, Result};
use crate::rng::Rng;

use super::label::EmotionLabel;

/// Assignment of sample indices to `k` cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Folds {
    k: usize,
    assignment: Vec<usize>,
}

impl Folds {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Fold index of every sample, in input order.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }
}

/// Stratified split: each emotion's samples are shuffled and dealt round-robin,
/// with the dealing position carried from one emotion to the next so total fold
/// sizes also differ by at most one.
pub fn split_folds(labels: &[EmotionLabel], k: usize, seed: u64) -> Result<Folds> {
    if k < 2 {
        return Err(Error::Data(format!("need at least 2 folds, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::Data(format!(
            "{k} folds requested for {} samples",
            labels.len()
        )));
    }
    let mut rng = Rng::derived(seed, "folds");
    let mut assignment = vec![0; labels.len()];
    let mut cursor = 0;
    for label in EmotionLabel::ALL {
        let mut stratum: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        rng.shuffle(&mut stratum);
        for i in stratum {
            assignment[i] = cursor % k;
            cursor += 1;
        }
    }
    Ok(Folds { k, assignment })
}
