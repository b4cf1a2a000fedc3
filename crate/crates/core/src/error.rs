use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node {node} out of range for graph with {node_count} nodes")]
    InvalidNode { node: usize, node_count: usize },
    #[error("self-loop on node {0} rejected")]
    SelfLoopRejected(usize),
    #[error("edge ({u}, {v}) has weight {weight}; weights must be >= 1")]
    InvalidWeight { u: usize, v: usize, weight: i64 },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("severity {kappa} outside the allowed range for {kind}")]
    InvalidSeverity { kind: &'static str, kappa: f64 },
    #[error("cannot add {requested} edges: only {available} non-edges available")]
    GraphSaturated { requested: usize, available: usize },
    #[error("per-cluster perturbation requires cluster assignments")]
    MissingClusters,
    #[error("invalid clusters: {0}")]
    InvalidClusters(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("label {label} out of range for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },
    #[error("split infeasible: {0}")]
    SplitInfeasible(String),
    #[error("model kind {0} requires a background-knowledge graph")]
    MissingGraph(String),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    TrainingDiverged { epoch: usize, loss: f64 },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
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

    pub(crate) fn parse(path: impl std::fmt::Display, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }

    /// True for failures caused by the filesystem rather than by the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
