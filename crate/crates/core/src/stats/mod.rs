//! Evaluation statistics: UAR, relative gains, paired t-tests and the
//! significance marks used in ablation tables.

mod confusion;
mod ttest;

pub use confusion::ConfusionMatrix;
pub use ttest::{paired_t_test, regularized_incomplete_beta, student_t_cdf, two_tailed_p, TTest};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative gain `(value − baseline) / baseline`.
pub fn gain(baseline: f64, value: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(Error::Stats(format!("gain needs a positive baseline, got {baseline}")));
    }
    Ok((value - baseline) / baseline)
}

/// Outcome of comparing a configuration with its reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mark {
    /// Significantly higher.
    #[serde(rename = "up")]
    Up,
    /// No significant change.
    #[serde(rename = "same")]
    Same,
    /// Significantly lower.
    #[serde(rename = "down")]
    Down,
}

impl Mark {
    pub fn symbol(self) -> &'static str {
        match self {
            Mark::Up => "↑",
            Mark::Same => "•",
            Mark::Down => "↓",
        }
    }
}

pub fn classify_significance(p: f64, mean_diff: f64, alpha: f64) -> Mark {
    if p <= alpha && mean_diff > 0.0 {
        Mark::Up
    } else if p <= alpha && mean_diff < 0.0 {
        Mark::Down
    } else {
        Mark::Same
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
