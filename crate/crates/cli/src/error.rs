use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] myostrain::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// An artifact no longer matches the manifest it was derived from.
    #[error("stale artifact: {0}")]
    Stale(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        use myostrain::Error as E;
        match self {
            CliError::Config(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Stale(_) => 6,
            CliError::Core(e) => match e {
                E::Validation { .. }
                | E::Geometry(_)
                | E::Bounds(_)
                | E::Size(_)
                | E::Structural(_)
                | E::Sequence(_)
                | E::InsufficientData { .. } => 3,
                E::Io { .. } => 4,
                E::Format { .. } => 5,
                E::DegenerateGeometry(_) => 1,
            },
        }
    }
}
