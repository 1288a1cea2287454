use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("ensemble selection error: {0}")]
    Selection(String),

    #[error("graph build error: {0}")]
    Build(String),

    #[error("dense adjacency export limited to {limit} nodes, graph has {nodes}")]
    Capacity { nodes: usize, limit: usize },

    #[error("node {0} has no neighbors")]
    NoNeighbors(u32),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("similarity undefined for a zero vector")]
    ZeroVector,

    #[error("user triple vector error: {0}")]
    Utv(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("AUC undefined: {0}")]
    UndefinedAuc(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("stage order error: {0}")]
    StageOrder(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::StageOrder(_) => 2,
            Error::Numeric(_) | Error::ZeroVector => 4,
            _ => 3,
        }
    }
}
