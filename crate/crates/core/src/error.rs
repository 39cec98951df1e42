use std::path::PathBuf;

/// Errors surfaced by the factorization, codelength and I/O routines.
#[derive(Debug, thiserror::Error)]
pub enum BmfError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range for {context} of size {size}")]
    IndexOutOfRange {
        context: &'static str,
        index: usize,
        size: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed {format} data: {reason}")]
    Malformed { format: &'static str, reason: String },

    #[error("inconsistent model: {0}")]
    InconsistentModel(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl BmfError {
    pub(crate) fn mismatch(context: &'static str, expected: usize, found: usize) -> Self {
        BmfError::DimensionMismatch {
            context,
            expected,
            found,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BmfError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = BmfError> = std::result::Result<T, E>;
