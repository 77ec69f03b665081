use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification of failures, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid arguments or configuration.
    Config,
    /// Malformed or unsuitable input data.
    Data,
    /// A numerical routine failed (factorization, singular system).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("point {query} has only {available} candidate neighbors in the pool, {k} required")]
    InsufficientPool {
        query: usize,
        available: usize,
        k: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("kernel matrix is not positive definite (jitter escalated to {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("regression backend `{0}` does not provide a predictive density")]
    MissingDensity(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("{path}: row {row}, column `{column}`: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("malformed document: {0}")]
    Document(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("while computing transform of point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_)
            | Error::InvalidConfig(_)
            | Error::Unknown { .. }
            | Error::MissingDensity(_)
            | Error::Io { .. } => ErrorKind::Config,
            Error::NotPositiveDefinite { .. } | Error::Singular(_) => ErrorKind::Numerical,
            Error::AtPoint { source, .. } | Error::Stage { source, .. } => source.kind(),
            Error::InsufficientPool { .. }
            | Error::DimensionMismatch { .. }
            | Error::Data(_)
            | Error::Parse { .. }
            | Error::FormatVersion { .. }
            | Error::Document(_)
            | Error::Csv(_) => ErrorKind::Data,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
