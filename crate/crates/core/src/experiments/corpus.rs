use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::audio::synth::SynthDomainSpec;
use crate::audio::{load_samples, AudioSample, Manifest, Preprocess};
use crate::error::{Error, Result};

/// Preprocessed samples grouped by domain, each domain in manifest order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    domains: BTreeMap<String, Vec<AudioSample>>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds samples, grouping them by their `domain` field.
    pub fn extend(&mut self, samples: impl IntoIterator<Item = AudioSample>) {
        for s in samples {
            self.domains.entry(s.domain.clone()).or_default().push(s);
        }
    }

    pub fn from_manifests<P: AsRef<Path>>(paths: &[P], pre: &Preprocess) -> Result<Self> {
        let mut corpus = Corpus::new();
        for p in paths {
            let m = Manifest::load(p)?;
            corpus.extend(load_samples(&m, pre)?);
        }
        Ok(corpus)
    }

    pub fn from_synth(specs: &[SynthDomainSpec], pre: &Preprocess) -> Result<Self> {
        let mut corpus = Corpus::new();
        for s in specs {
            corpus.extend(s.samples(pre)?);
        }
        Ok(corpus)
    }

    pub fn domain_names(&self) -> Vec<String> {
        self.domains.keys().cloned().collect()
    }

    pub fn domain(&self, name: &str) -> Result<&[AudioSample]> {
        match self.domains.get(name) {
            Some(s) if !s.is_empty() => Ok(s),
            _ => Err(Error::Data(format!("domain `{name}` has no samples"))),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.domains.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.domains.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Identifier of a sample across domains.
pub fn sample_id(s: &AudioSample) -> String {
    format!("{}/{}", s.domain, s.source_path)
}

/// SHA-256 over sample ids and waveform bits, in the given order.
pub fn sample_set_hash<'a>(samples: impl IntoIterator<Item = &'a AudioSample>) -> String {
    let mut h = Sha256::new();
    for s in samples {
        let id = sample_id(s);
        h.update((id.len() as u64).to_le_bytes());
        h.update(id.as_bytes());
        h.update((s.label.index() as u64).to_le_bytes());
        for v in s.waveform.data() {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::EmotionLabel;
    use crate::tensor::Tensor;

    fn sample(domain: &str, name: &str, v: f64) -> AudioSample {
        AudioSample {
            waveform: Tensor::new(&[2], vec![v, -v]).unwrap(),
            label: EmotionLabel::Fear,
            domain: domain.into(),
            source_path: name.into(),
        }
    }

    #[test]
    fn grouping_and_lookup() {
        let mut c = Corpus::new();
        c.extend([sample("b", "1", 1.0), sample("a", "2", 1.0), sample("b", "3", 1.0)]);
        assert_eq!(c.domain_names(), vec!["a", "b"]);
        assert_eq!(c.domain("b").unwrap().len(), 2);
        assert!(c.domain("z").is_err());
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn hash_sensitive_to_content_and_order() {
        let a = sample("d", "x", 1.0);
        let b = sample("d", "y", 1.0);
        let b2 = sample("d", "y", 2.0);
        assert_eq!(sample_set_hash([&a, &b]), sample_set_hash([&a, &b]));
        assert_ne!(sample_set_hash([&a, &b]), sample_set_hash([&b, &a]));
        assert_ne!(sample_set_hash([&a, &b]), sample_set_hash([&a, &b2]));
    }
}
