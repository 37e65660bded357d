use std::path::Path;

use serde::{Deserialize, Serialize};

use emoxfer::experiments::{AblationReport, EvalReport, MatrixReport, RunRecord};
use emoxfer::{Error, Result};

/// Where a report came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub config_hash: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn new(config_hash: &str, config_sha256: &str, seed: u64) -> Self {
        Provenance {
            config_hash: config_hash.to_string(),
            config_sha256: config_sha256.to_string(),
            seed,
            version: format!("emoxfer {}", env!("CARGO_PKG_VERSION")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "results", rename_all = "lowercase")]
pub enum ReportBody {
    Tt(Vec<RunRecord>),
    Transfer(Vec<EvalReport>),
    Matrix(MatrixReport),
    Ablation(AblationReport),
}

/// Top-level JSON document written by every experiment command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub provenance: Provenance,
    #[serde(flatten)]
    pub body: ReportBody,
}

impl ReportDocument {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("not a report document: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read report {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
        }
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        std::fs::write(path, bytes).map_err(|e| Error::Experiment(format!("{}: {e}", path.display())))
    }
}
