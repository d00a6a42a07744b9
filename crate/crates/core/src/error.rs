use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = VprError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum VprError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {kind}")]
    Format { path: PathBuf, kind: FormatError },

    #[error("data error: {0}")]
    Data(String),
}

/// Structural problems found while decoding one of the binary or text formats.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { expected: String, found: String },

    #[error("truncated payload: header declares {expected} values, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("{extra} trailing bytes after payload")]
    TrailingBytes { extra: u64 },

    #[error("dimension mismatch: header declares {header}, found {found}")]
    DimMismatch { header: usize, found: usize },

    #[error("unknown dtype code {0}")]
    UnknownDtype(u32),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Header(String),
}

impl VprError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        VprError::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        VprError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, kind: FormatError) -> Self {
        VprError::Format {
            path: path.into(),
            kind,
        }
    }
}
