//! Synthetic emotion corpora: each emotion is a carrier tone with an
//! amplitude-modulation signature, and each domain applies its own gain,
//! spectral tilt and additive noise.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::label::EmotionLabel;
use super::manifest::{AudioSample, Manifest, ManifestRecord};
use super::preprocess::{preprocess, Preprocess};
use super::wav::{quantize, wav_bytes};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};

/// Amplitude envelope over the whole recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Envelope {
    Flat,
    Rise,
    Decay,
    Hann,
}

impl Envelope {
    /// Value at relative position `u` in [0, 1].
    pub fn at(self, u: f64) -> f64 {
        match self {
            Envelope::Flat => 1.0,
            Envelope::Rise => 0.2 + 0.8 * u,
            Envelope::Decay => 1.0 - 0.8 * u,
            Envelope::Hann => 0.2 + 0.8 * (PI * u).sin().powi(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prototype {
    pub carrier_hz: f64,
    pub am_rate_hz: f64,
    pub envelope: Envelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainTransform {
    #[serde(default = "one")]
    pub gain: f64,
    #[serde(default)]
    pub noise_std: f64,
    /// First-order tilt `y[n] = x[n] + tilt * x[n-1]`.
    #[serde(default)]
    pub tilt: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for DomainTransform {
    fn default() -> Self {
        DomainTransform {
            gain: 1.0,
            noise_std: 0.0,
            tilt: 0.0,
        }
    }
}

/// Full description of one synthetic domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthDomainSpec {
    pub domain: String,
    pub prototypes: BTreeMap<EmotionLabel, Prototype>,
    #[serde(default)]
    pub transform: DomainTransform,
    pub samples_per_emotion: usize,
    pub seed: u64,
    pub rate: u32,
    /// Recording length in samples.
    pub length: usize,
    /// Relative per-recording jitter of carrier and modulation rates.
    #[serde(default)]
    pub jitter: f64,
}

/// Per-recording random draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    pub freq_scale: f64,
    pub am_scale: f64,
    pub phase: f64,
    pub am_phase: f64,
    pub amplitude: f64,
}

const AM_DEPTH: f64 = 0.8;

/// Noise-free prototype waveform for one recording.
pub fn prototype_wave(p: &Prototype, v: &Variant, rate: u32, length: usize) -> Vec<f64> {
    let fc = p.carrier_hz * v.freq_scale;
    let fa = p.am_rate_hz * v.am_scale;
    let denom = (length.max(2) - 1) as f64;
    (0..length)
        .map(|n| {
            let t = n as f64 / rate as f64;
            let am = (1.0 + AM_DEPTH * (2.0 * PI * fa * t + v.am_phase).sin()) / (1.0 + AM_DEPTH);
            v.amplitude * p.envelope.at(n as f64 / denom) * am * (2.0 * PI * fc * t + v.phase).sin()
        })
        .collect()
}

impl SynthDomainSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("synthetic domain `{}`: {m}", self.domain)));
        if self.domain.is_empty() || self.domain.contains(['/', '\\']) || self.domain.starts_with('.') {
            return bad("domain id must be a nonempty plain name".into());
        }
        if self.prototypes.is_empty() {
            return bad("no emotion prototypes".into());
        }
        if self.samples_per_emotion == 0 || self.length == 0 || self.rate == 0 {
            return bad("samples_per_emotion, length and rate must be positive".into());
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return bad(format!("jitter {} outside [0, 0.5)", self.jitter));
        }
        let nyquist = self.rate as f64 / 2.0;
        for (e, p) in &self.prototypes {
            let top = p.carrier_hz.max(p.am_rate_hz) * (1.0 + self.jitter);
            if !(p.carrier_hz > 0.0 && p.am_rate_hz >= 0.0 && top < nyquist) {
                return bad(format!(
                    "{e}: frequencies must be positive and below Nyquist ({nyquist} Hz)"
                ));
            }
        }
        let t = &self.transform;
        if !(t.noise_std >= 0.0 && t.noise_std.is_finite()) {
            return bad("noise_std must be finite and >= 0".into());
        }
        if !(t.gain > 0.0 && t.gain.is_finite() && t.tilt.abs() <= 1.0) {
            return bad("gain must be positive and |tilt| <= 1".into());
        }
        Ok(())
    }

    fn rng_for(&self, emotion: EmotionLabel, index: usize) -> Rng {
        Rng::derived(self.seed, &format!("{}/{}/{}", self.domain, emotion, index))
    }

    fn variant(&self, rng: &mut Rng) -> Variant {
        let j = self.jitter;
        Variant {
            freq_scale: 1.0 + rng.uniform(-j, j),
            am_scale: 1.0 + rng.uniform(-j, j),
            phase: rng.uniform(0.0, 2.0 * PI),
            am_phase: rng.uniform(0.0, 2.0 * PI),
            amplitude: rng.uniform(0.3, 0.5),
        }
    }

    /// Float waveform of recording `index` of `emotion`, before quantization.
    pub fn render(&self, emotion: EmotionLabel, index: usize) -> Result<(Vec<f64>, Variant)> {
        let proto = self.prototypes.get(&emotion).ok_or_else(|| {
            Error::Data(format!("domain `{}` has no prototype for {emotion}", self.domain))
        })?;
        let mut rng = self.rng_for(emotion, index);
        let v = self.variant(&mut rng);
        let clean = prototype_wave(proto, &v, self.rate, self.length);
        let t = &self.transform;
        let mut prev = 0.0;
        let out = clean
            .iter()
            .map(|&x| {
                let tilted = x + t.tilt * prev;
                prev = x;
                t.gain * tilted + t.noise_std * rng.normal()
            })
            .collect();
        Ok((out, v))
    }

    /// Recordings in generation order: emotions by index, then sample index.
    pub fn recordings(&self) -> Result<Vec<(EmotionLabel, String, Vec<i16>)>> {
        self.validate()?;
        let mut out = Vec::new();
        for &e in self.prototypes.keys() {
            for i in 0..self.samples_per_emotion {
                let (x, _) = self.render(e, i)?;
                let pcm = x.iter().map(|&v| quantize(v)).collect();
                out.push((e, format!("{e}_{i:04}.wav"), pcm));
            }
        }
        Ok(out)
    }

    /// Same samples `synth_generate` writes, preprocessed without touching disk.
    pub fn samples(&self, pre: &Preprocess) -> Result<Vec<AudioSample>> {
        self.recordings()?
            .into_iter()
            .map(|(label, name, pcm)| {
                let x: Vec<f64> = pcm.iter().map(|&v| v as f64 / 32768.0).collect();
                Ok(AudioSample {
                    waveform: preprocess(&x, self.rate, pre)?,
                    label,
                    domain: self.domain.clone(),
                    source_path: name,
                })
            })
            .collect()
    }
}

/// Writes `<out>/<domain>/*.wav` plus `<out>/<domain>/manifest.jsonl` for each
/// spec and returns the manifest paths.
pub fn synth_generate(specs: &[SynthDomainSpec], out_dir: &Path) -> Result<Vec<PathBuf>> {
    for s in specs {
        s.validate()?;
    }
    let mut seen = std::collections::BTreeSet::new();
    for s in specs {
        if !seen.insert(&s.domain) {
            return Err(Error::Config(format!("duplicate synthetic domain `{}`", s.domain)));
        }
    }
    let mut manifests = Vec::new();
    for s in specs {
        let dir = out_dir.join(&s.domain);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut records = Vec::new();
        for (label, name, pcm) in s.recordings()? {
            let path = dir.join(&name);
            std::fs::write(&path, wav_bytes(&pcm, s.rate)?).map_err(|e| Error::io(&path, e))?;
            records.push(ManifestRecord {
                path: name,
                label,
                domain: s.domain.clone(),
            });
        }
        let manifest = Manifest::new(records, &dir)?;
        let mpath = dir.join("manifest.jsonl");
        manifest.save(&mpath)?;
        manifests.push(mpath);
    }
    Ok(manifests)
}

/// The six reference prototypes: three carriers crossed with two modulation rates.
pub fn default_bank() -> [Prototype; 6] {
    let p = |carrier_hz, am_rate_hz, envelope| Prototype {
        carrier_hz,
        am_rate_hz,
        envelope,
    };
    [
        p(2600.0, 56.0, Envelope::Flat),
        p(600.0, 24.0, Envelope::Decay),
        p(2600.0, 24.0, Envelope::Rise),
        p(1400.0, 56.0, Envelope::Hann),
        p(600.0, 56.0, Envelope::Decay),
        p(1400.0, 24.0, Envelope::Rise),
    ]
}

/// Compact description of one domain built from the reference bank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainRecipe {
    pub id: String,
    /// Emotion `e` uses bank entry `(e + rotation) % 6`.
    #[serde(default)]
    pub rotation: usize,
    /// Multiplies every carrier frequency of the bank.
    #[serde(default = "one")]
    pub carrier_scale: f64,
    #[serde(default)]
    pub transform: DomainTransform,
    pub samples_per_emotion: usize,
    /// Restricts the domain to a subset of emotions; all six when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotions: Option<Vec<EmotionLabel>>,
}

/// A multi-domain corpus description; per-domain seeds derive from one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecipe {
    #[serde(default = "default_rate")]
    pub rate: u32,
    pub length: usize,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    pub domains: Vec<DomainRecipe>,
}

fn default_rate() -> u32 {
    16_000
}

fn default_jitter() -> f64 {
    0.05
}

impl CorpusRecipe {
    pub fn specs(&self, seed: u64) -> Result<Vec<SynthDomainSpec>> {
        let bank = default_bank();
        self.domains
            .iter()
            .map(|d| {
                let emotions = d.emotions.clone().unwrap_or_else(|| EmotionLabel::ALL.to_vec());
                let prototypes = emotions
                    .into_iter()
                    .map(|e| {
                        let mut p = bank[(e.index() + d.rotation) % 6];
                        p.carrier_hz *= d.carrier_scale;
                        (e, p)
                    })
                    .collect();
                let spec = SynthDomainSpec {
                    domain: d.id.clone(),
                    prototypes,
                    transform: d.transform,
                    samples_per_emotion: d.samples_per_emotion,
                    seed: derive_seed(seed, &format!("synth/{}", d.id)),
                    rate: self.rate,
                    length: self.length,
                    jitter: self.jitter,
                };
                spec.validate()?;
                Ok(spec)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::load_samples;

    fn spec(noise: f64) -> SynthDomainSpec {
        CorpusRecipe {
            rate: 16_000,
            length: 800,
            jitter: 0.05,
            domains: vec![DomainRecipe {
                id: "d0".into(),
                rotation: 0,
                carrier_scale: 1.0,
                transform: DomainTransform {
                    gain: 1.0,
                    noise_std: noise,
                    tilt: 0.0,
                },
                samples_per_emotion: 3,
                emotions: None,
            }],
        }
        .specs(7)
        .unwrap()
        .remove(0)
    }

    #[test]
    fn clean_case_matches_prototype() {
        let s = spec(0.0);
        for e in [EmotionLabel::Anger, EmotionLabel::Sadness] {
            let (x, v) = s.render(e, 2).unwrap();
            let p = prototype_wave(&s.prototypes[&e], &v, s.rate, s.length);
            assert_eq!(x, p);
        }
    }

    #[test]
    fn deterministic_bytes_on_disk() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let specs = vec![spec(0.05)];
        let ma = synth_generate(&specs, a.path()).unwrap();
        let mb = synth_generate(&specs, b.path()).unwrap();
        assert_eq!(std::fs::read(&ma[0]).unwrap(), std::fs::read(&mb[0]).unwrap());
        let m = Manifest::load(&ma[0]).unwrap();
        assert_eq!(m.len(), 18);
        for r in &m.records {
            let fa = std::fs::read(a.path().join("d0").join(&r.path)).unwrap();
            let fb = std::fs::read(b.path().join("d0").join(&r.path)).unwrap();
            assert_eq!(fa, fb);
        }
    }

    #[test]
    fn in_memory_matches_disk() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(0.1);
        let m = synth_generate(std::slice::from_ref(&s), dir.path()).unwrap();
        let pre = Preprocess::new(1000);
        let disk = load_samples(&Manifest::load(&m[0]).unwrap(), &pre).unwrap();
        assert_eq!(disk, s.samples(&pre).unwrap());
    }

    #[test]
    fn validation() {
        let mut s = spec(0.0);
        s.prototypes.get_mut(&EmotionLabel::Fear).unwrap().carrier_hz = 9_000.0;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = spec(0.0);
        s.transform.noise_std = -0.1;
        assert!(s.validate().is_err());
        let mut s = spec(0.0);
        s.domain = "../x".into();
        assert!(s.validate().is_err());
        let dup = vec![spec(0.0), spec(0.0)];
        let dir = tempfile::tempdir().unwrap();
        assert!(synth_generate(&dup, dir.path()).is_err());
    }

    #[test]
    fn rotation_and_subset() {
        let r = CorpusRecipe {
            rate: 16_000,
            length: 100,
            jitter: 0.0,
            domains: vec![DomainRecipe {
                id: "r".into(),
                rotation: 2,
                carrier_scale: 1.5,
                transform: DomainTransform::default(),
                samples_per_emotion: 1,
                emotions: Some(vec![EmotionLabel::Anger, EmotionLabel::Surprise]),
            }],
        };
        let s = r.specs(0).unwrap().remove(0);
        let bank = default_bank();
        assert_eq!(s.prototypes.len(), 2);
        assert_eq!(s.prototypes[&EmotionLabel::Anger].carrier_hz, bank[2].carrier_hz * 1.5);
        assert_eq!(s.prototypes[&EmotionLabel::Surprise].am_rate_hz, bank[1].am_rate_hz);
    }

    /// Energy in `bands` equal-width frequency bands by direct DFT.
    fn band_energies(x: &[f64], bands: usize) -> Vec<f64> {
        let n = x.len();
        let half = n / 2;
        let mut e = vec![0.0; bands];
        for k in 1..half {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in x.iter().enumerate() {
                let a = 2.0 * PI * (k * i) as f64 / n as f64;
                re += v * a.cos();
                im -= v * a.sin();
            }
            e[(k * bands / half).min(bands - 1)] += re * re + im * im;
        }
        let total: f64 = e.iter().sum();
        e.iter().map(|v| (v / total).ln_1p()).collect()
    }

    #[test]
    fn band_energy_linear_classifier_separates_two_emotions() {
        let recipe = CorpusRecipe {
            rate: 16_000,
            length: 512,
            jitter: 0.05,
            domains: vec![DomainRecipe {
                id: "lin".into(),
                rotation: 0,
                carrier_scale: 1.0,
                transform: DomainTransform {
                    gain: 1.0,
                    noise_std: 0.2,
                    tilt: 0.3,
                },
                samples_per_emotion: 40,
                emotions: Some(vec![EmotionLabel::Anger, EmotionLabel::Disgust]),
            }],
        };
        let s = recipe.specs(11).unwrap().remove(0);
        let data = s.samples(&Preprocess::new(512)).unwrap();
        let feats: Vec<(Vec<f64>, usize)> = data
            .iter()
            .map(|a| (band_energies(a.waveform.data(), 16), a.label.index()))
            .collect();
        let (train, test): (Vec<_>, Vec<_>) = feats.iter().enumerate().partition(|(i, _)| i % 2 == 0);
        // Nearest class mean is a linear decision rule.
        let mut means = vec![vec![0.0; 16]; 2];
        let mut counts = [0.0; 2];
        for (_, (f, l)) in &train {
            let c = usize::from(*l != 0);
            counts[c] += 1.0;
            for (m, v) in means[c].iter_mut().zip(f) {
                *m += v;
            }
        }
        for c in 0..2 {
            means[c].iter_mut().for_each(|m| *m /= counts[c]);
        }
        let dist = |f: &[f64], m: &[f64]| f.iter().zip(m).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let correct = test
            .iter()
            .filter(|(_, (f, l))| {
                let pred = usize::from(dist(f, &means[1]) < dist(f, &means[0]));
                pred == usize::from(*l != 0)
            })
            .count();
        let acc = correct as f64 / test.len() as f64;
        assert!(acc > 0.9, "accuracy {acc}");
    }
}
