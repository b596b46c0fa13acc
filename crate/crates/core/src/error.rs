use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition: {blocks} blocks for {rows} rows")]
    InvalidPartition { rows: usize, blocks: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("row {0} of the matrix is identically zero")]
    ZeroRow(usize),

    #[error("non-finite entry at position {0}")]
    NonFinite(usize),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("undefined constant: {0}")]
    UndefinedConstant(String),

    #[error("metric unavailable: {0}")]
    UnavailableMetric(&'static str),

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
