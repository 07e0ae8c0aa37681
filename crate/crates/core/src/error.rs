use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("self-loop at line {line}")]
    SelfLoop { line: usize },

    #[error("node id {id} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { id: usize, num_nodes: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph too dense: need {needed} negative pairs but only {available} non-edges exist")]
    NoNegativesAvailable { needed: usize, available: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite loss at epoch {epoch} ({phase})")]
    NonFiniteLoss { epoch: usize, phase: &'static str },

    #[error("empty subgraph")]
    EmptySubgraph,

    #[error("watermark needs at least 2 trigger nodes, got {0}")]
    TooFewTriggerNodes(usize),

    #[error("sample size {n} outside supported range [{min}, {max}]")]
    SampleSize { n: usize, min: usize, max: usize },

    #[error("sample has zero variance")]
    ZeroVariance,

    #[error("labels contain a single class")]
    SingleClass,

    #[error("clean AUC mean {clean_mean} is not below watermarked AUC mean {wm_mean}")]
    SidesInverted { clean_mean: f64, wm_mean: f64 },

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            what,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
