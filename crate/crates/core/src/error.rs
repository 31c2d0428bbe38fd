use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("graph is empty after removing comments and self-loops")]
    EmptyGraph,

    #[error("unknown vertex id {0}")]
    UnknownVertex(usize),

    #[error("k = {k} is out of range for a graph with {n} vertices (need {min} <= k <= n)")]
    InvalidK { k: usize, n: usize, min: usize },

    #[error("noise level {epsilon} must lie in [0, {n}]")]
    InvalidEpsilon { epsilon: f64, n: usize },

    #[error("jaccard index is undefined for two empty sets")]
    EmptySets,

    #[error("graph has {n} vertices; all-pairs analysis is capped at {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coordinate mismatch: {0}")]
    Mismatch(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            _ => 1,
        }
    }
}
