use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Shape(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("empty sequence: {0}")]
    EmptySequence(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("unknown layer `{0}`")]
    UnknownLayer(String),

    #[error("weight file format error: {0}")]
    Format(String),

    #[error("weight file incompatible with configuration: {0}")]
    Compatibility(String),

    #[error("audio error in {path}: {msg}")]
    Audio { path: PathBuf, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("statistics error: {0}")]
    Stats(String),

    #[error("experiment error: {0}")]
    Experiment(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration rather than a
    /// failure while running an experiment.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::UnknownLayer(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
