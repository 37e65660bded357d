//! Corpus ingestion and the synthetic multi-domain corpus generator.

mod folds;
mod label;
mod manifest;
mod preprocess;
pub mod synth;
mod wav;

pub use folds::{split_folds, Folds};
pub use label::EmotionLabel;
pub use manifest::{load_samples, AudioSample, Manifest, ManifestRecord};
pub use preprocess::{preprocess, resample_linear, standardize, CropMode, Preprocess};
pub use wav::{load_wav, quantize, read_wav, wav_bytes, write_wav};
