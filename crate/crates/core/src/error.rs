use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the placement evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid construction parameters; `field` names the offending input.
    #[error("invalid configuration for `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("index {index} out of range (size {len})")]
    Bounds { index: u64, len: u64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported transform: {0}")]
    UnsupportedTransform(String),

    /// Binary or structured file format violations.
    #[error("format error: {0}")]
    Format(String),

    #[error("parse error in {}:{line}: {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }

    /// Coarse category used by front-ends to pick exit codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Parse { .. } | Error::Format(_) => ErrorCategory::Parse,
            Error::Io { .. } => ErrorCategory::Io,
            Error::Config { .. }
            | Error::Bounds { .. }
            | Error::Argument(_)
            | Error::UnsupportedTransform(_)
            | Error::Validation(_) => ErrorCategory::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Parse,
    Validation,
    Io,
}
