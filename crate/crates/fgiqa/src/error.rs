//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the metric pipeline and its I/O surfaces.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates a precondition (dimensions, ranges, lengths).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value is out of its admissible range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A manifest row or header could not be parsed.
    #[error("manifest error at line {line}: {message}")]
    Manifest { line: u64, message: String },

    /// An image file could not be read or decoded.
    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
