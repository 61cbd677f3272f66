use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs whose shapes do not line up (point counts, frame counts).
    #[error("structural error: {0}")]
    Structural(String),

    #[error("index out of bounds: {0}")]
    Bounds(String),

    /// Geometry that cannot host the requested construction.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Zero-length reference geometry where a ratio is required.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("sequence error: {0}")]
    Sequence(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// A configuration field failed validation.
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    /// Malformed file contents; `record` names the offending frame or record.
    #[error("format error in {record}: {reason}")]
    Format { record: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn format(record: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            record: record.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
