use thiserror::Error;

use crate::graph::{EdgeId, NodeId};

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("offset {offset} outside edge {edge} of length {length}")]
    OffsetOutOfRange { edge: EdgeId, offset: f64, length: f64 },
    #[error("edge {index} has nonpositive length {length}")]
    NonPositiveLength { index: usize, length: f64 },
    #[error("edge {index} is a self-loop at node {node}")]
    SelfLoop { index: usize, node: usize },
    #[error("network is disconnected")]
    Disconnected,
    #[error("network has no nodes")]
    Empty,
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge {edge} has length {length} > delta {delta}; subdivide first")]
    AssumptionViolated { edge: EdgeId, length: f64, delta: f64 },
    #[error("invalid radius {0}")]
    InvalidRadius(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid has {count} candidates, above the limit of {limit}")]
    TooManyCandidates { count: usize, limit: usize },
    #[error("no connected G(n, p) sample after {0} attempts")]
    ResampleCapExceeded(usize),
    #[error("inconsistent solution: {0}")]
    InconsistentSolution(String),
    #[error("solver backend: {0}")]
    Backend(String),
    #[error("unknown backend {0:?}")]
    UnknownBackend(String),
    #[error("model: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
