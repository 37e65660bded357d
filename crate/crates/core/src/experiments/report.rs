use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::plan::{Approach, Scenario, TransferPlan};
use crate::error::{Error, Result};
use crate::stats::Mark;

/// Outcome of one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub uar: f64,
    pub train_samples: usize,
    pub test_samples: usize,
    /// Trained weights, relative to the results directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<String>,
    pub weights_sha256: String,
    /// Pre-trained checkpoint this fold started from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pretrained_sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pretrain_checkpoint: Option<String>,
    /// Hash of the pre-training sample set (ids and waveforms).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pretrain_set_sha256: Option<String>,
}

/// One TT or transfer cell evaluated over all folds of one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cell: String,
    pub target: String,
    pub sources: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<TransferPlan>,
    pub fold_uars: Vec<f64>,
    pub mean_uar: f64,
    pub folds: Vec<FoldResult>,
    pub config_hash: String,
    pub seed: u64,
    /// Kept out of the JSON so reports stay byte-reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// A transfer cell compared with the TT baseline of the same folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub record: RunRecord,
    pub baseline_mean_uar: f64,
    /// `None` when the baseline UAR is zero.
    pub gain: Option<f64>,
    /// `None` when the differences have zero variance.
    pub t: Option<f64>,
    pub p: f64,
    pub mark: Mark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMatrix {
    pub target: String,
    pub sources: Vec<String>,
    pub tt: RunRecord,
    pub cells: Vec<EvalReport>,
}

/// Mean and sample std of one cell's gain across targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub cell: String,
    pub mean_gain: Option<f64>,
    pub std_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub experiment: String,
    pub seed: u64,
    pub config_hash: String,
    pub targets: Vec<TargetMatrix>,
    pub summary: Vec<SummaryCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub scenario: Scenario,
    pub approach: Approach,
    pub record: RunRecord,
    pub t: Option<f64>,
    pub p: f64,
    /// Compared with the same cell of the `All` row.
    pub mark: Mark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    /// `All`, or `-<domain>` for the row excluding that domain.
    pub label: String,
    pub excluded: Option<String>,
    pub sources: Vec<String>,
    pub cells: Vec<AblationCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetAblation {
    pub target: String,
    pub rows: Vec<AblationRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub experiment: String,
    pub seed: u64,
    pub config_hash: String,
    pub alpha: f64,
    pub targets: Vec<TargetAblation>,
}

/// Pretty JSON with a trailing newline.
pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

impl MatrixReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn cell(&self, target: &str, cell: &str) -> Option<&EvalReport> {
        self.targets
            .iter()
            .find(|t| t.target == target)?
            .cells
            .iter()
            .find(|c| c.record.cell == cell)
    }
}

impl AblationReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}
