//! Crate-wide error type and process exit-code mapping.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unreadable input: {0}")]
    Stream(String),

    #[error("not a motif: {0}")]
    NotAMotif(String),

    #[error("proximity unavailable: {0}")]
    ProximityUnavailable(String),

    #[error("coordinate out of range: ({0}, {1})")]
    CoordinateOutOfRange(f64, f64),

    #[error("census budget exceeded: {enumerated} connected subgraphs, budget {budget}")]
    CensusBudget { enumerated: u64, budget: u64 },

    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 0 success, 1 config error, 2 i/o error, 3 stage failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Io { .. } | Error::Stream(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
