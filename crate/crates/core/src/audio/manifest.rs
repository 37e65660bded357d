use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::label::EmotionLabel;
use super::preprocess::{preprocess, Preprocess};
use super::wav::load_wav;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One line of a manifest file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub path: String,
    pub label: EmotionLabel,
    pub domain: String,
}

/// A list of labelled recordings. Relative paths resolve against `base_dir`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
    pub base_dir: PathBuf,
}

/// A preprocessed, labelled waveform ready for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSample {
    pub waveform: Tensor,
    pub label: EmotionLabel,
    pub domain: String,
    pub source_path: String,
}

impl Manifest {
    pub fn new(records: Vec<ManifestRecord>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        for r in &records {
            if r.domain.is_empty() {
                return Err(Error::Data(format!("record `{}` has an empty domain", r.path)));
            }
        }
        Ok(Manifest {
            records,
            base_dir: base_dir.into(),
        })
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: ManifestRecord = serde_json::from_str(line)
                .map_err(|e| Error::Data(format!("manifest line {}: {e}", i + 1)))?;
            records.push(rec);
        }
        Self::new(records, base_dir)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn resolve(&self, record: &ManifestRecord) -> PathBuf {
        let p = Path::new(&record.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn domains(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.domain.as_str()).collect()
    }

    pub fn labels(&self) -> Vec<EmotionLabel> {
        self.records.iter().map(|r| r.label).collect()
    }
}

/// Loads and preprocesses every record, in manifest order.
pub fn load_samples(manifest: &Manifest, cfg: &Preprocess) -> Result<Vec<AudioSample>> {
    manifest
        .records
        .par_iter()
        .map(|r| {
            let path = manifest.resolve(r);
            let (samples, rate) = load_wav(&path)?;
            if samples.is_empty() {
                return Err(Error::Audio {
                    path,
                    msg: "no samples".into(),
                });
            }
            Ok(AudioSample {
                waveform: preprocess(&samples, rate, cfg)?,
                label: r.label,
                domain: r.domain.clone(),
                source_path: r.path.clone(),
            })
        })
        .collect()
}
