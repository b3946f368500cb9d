use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the PAAP toolkit.
#[derive(Debug, Error)]
pub enum PaapError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported codec: {0}")]
    UnsupportedCodec(String),

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("unknown phoneme label {0:?}")]
    Vocabulary(String),

    #[error("singular normal equations: {0}")]
    Singular(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PaapError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PaapError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        PaapError::Argument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        PaapError::Format(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, PaapError>;
