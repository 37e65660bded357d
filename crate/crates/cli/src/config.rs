use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use emoxfer::audio::synth::{CorpusRecipe, DomainRecipe, SynthDomainSpec};
use emoxfer::audio::{CropMode, Preprocess};
use emoxfer::experiments::{ExperimentSettings, RunSetup};
use emoxfer::network::{NetworkConfig, TrainConfig};
use emoxfer::optim::AdaDeltaConfig;
use emoxfer::{Error, Result};

/// The single JSON document describing an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub optimizer: AdaDeltaConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub experiment: ExperimentSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default = "default_rate")]
    pub working_rate: u32,
    #[serde(default)]
    pub crop: CropMode,
    /// Manifest path per domain, relative to the config file.
    #[serde(default)]
    pub manifests: BTreeMap<String, PathBuf>,
}

fn default_rate() -> u32 {
    16_000
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            working_rate: default_rate(),
            crop: CropMode::Center,
            manifests: BTreeMap::new(),
        }
    }
}

/// Synthetic corpus written by `emoxfer synth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    /// Output directory, relative to the config file.
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default = "default_rate")]
    pub rate: u32,
    pub length: usize,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    pub domains: Vec<DomainRecipe>,
}

fn default_out() -> PathBuf {
    PathBuf::from("corpus")
}

fn default_jitter() -> f64 {
    0.05
}

impl SynthConfig {
    pub fn recipe(&self) -> CorpusRecipe {
        CorpusRecipe {
            rate: self.rate,
            length: self.length,
            jitter: self.jitter,
            domains: self.domains.clone(),
        }
    }
}

/// A parsed config together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    /// SHA-256 of the file bytes.
    pub file_sha256: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_slice(&bytes)?;
        Ok(LoadedConfig {
            config,
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            file_sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn setup(&self) -> RunSetup {
        let c = &self.config;
        RunSetup {
            network: c.network.clone(),
            optimizer: c.optimizer,
            train: c.train,
            experiment: c.experiment.clone(),
        }
    }

    pub fn preprocess(&self) -> Preprocess {
        Preprocess {
            working_rate: self.config.data.working_rate,
            input_length: self.config.network.input_length,
            crop: self.config.data.crop,
        }
    }

    pub fn synth_specs(&self) -> Result<Vec<SynthDomainSpec>> {
        let s = self
            .config
            .synth
            .as_ref()
            .ok_or_else(|| Error::Config("config has no `synth` section".into()))?;
        s.recipe().specs(self.config.train.seed)
    }

    pub fn synth_dir(&self, out_override: Option<&Path>) -> Result<PathBuf> {
        if let Some(o) = out_override {
            return Ok(o.to_path_buf());
        }
        let s = self
            .config
            .synth
            .as_ref()
            .ok_or_else(|| Error::Config("config has no `synth` section".into()))?;
        Ok(self.resolve(&s.out_dir))
    }

    /// Manifest per domain: the explicit list, or the synthetic corpus layout.
    pub fn manifests(&self) -> Result<BTreeMap<String, PathBuf>> {
        let c = &self.config;
        if !c.data.manifests.is_empty() {
            return Ok(c
                .data
                .manifests
                .iter()
                .map(|(d, p)| (d.clone(), self.resolve(p)))
                .collect());
        }
        match &c.synth {
            Some(s) => {
                let dir = self.resolve(&s.out_dir);
                Ok(s.domains
                    .iter()
                    .map(|d| (d.id.clone(), dir.join(&d.id).join("manifest.jsonl")))
                    .collect())
            }
            None => Err(Error::Config(
                "config lists no manifests and has no `synth` section".into(),
            )),
        }
    }

    /// Checks everything that can be checked without loading audio.
    pub fn validate_for_run(&self, need_targets: bool) -> Result<()> {
        let c = &self.config;
        self.setup().validate()?;
        self.preprocess().validate()?;
        let manifests = self.manifests()?;
        for (domain, path) in &manifests {
            if !path.is_file() {
                return Err(Error::Config(format!(
                    "manifest for domain `{domain}` not found at {}",
                    path.display()
                )));
            }
        }
        let known = |d: &String| manifests.contains_key(d);
        if need_targets && c.experiment.targets.is_empty() {
            return Err(Error::Config("experiment.targets is empty".into()));
        }
        for t in &c.experiment.targets {
            if !known(t) {
                return Err(Error::Config(format!("unknown target domain `{t}`")));
            }
        }
        if let Some(sources) = &c.experiment.sources {
            for s in sources {
                if !known(s) {
                    return Err(Error::Config(format!("unknown source domain `{s}`")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_uses_defaults() {
        let c: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c.network, NetworkConfig::default());
        assert_eq!(c.experiment.folds, 5);
        assert_eq!(c.experiment.alpha, 0.05);
        assert_eq!(c.experiment.approaches.len(), 8);
        assert_eq!(c.experiment.ablation_approaches.len(), 4);
        assert_eq!(c.data.working_rate, 16_000);
        assert_eq!(c.train.batch_size, 32);
    }

    #[test]
    fn unknown_keys_and_values_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"netwrk": {}}"#).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"experiment": {"approaches": ["A9"]}}"#).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"experiment": {"scenarios": ["S3"]}}"#).is_err());
    }

    #[test]
    fn synth_manifest_layout() {
        let text = r#"{"synth": {"out_dir": "c", "length": 100,
            "domains": [{"id": "x", "samples_per_emotion": 2}]}}"#;
        let lc = LoadedConfig {
            config: serde_json::from_str(text).unwrap(),
            base_dir: PathBuf::from("/cfg"),
            file_sha256: String::new(),
        };
        let m = lc.manifests().unwrap();
        assert_eq!(m["x"], PathBuf::from("/cfg/c/x/manifest.jsonl"));
        assert_eq!(lc.synth_specs().unwrap().len(), 1);
        assert!(lc.validate_for_run(false).is_err());
    }
}
