use thiserror::Error;

use crate::graph::NodeId;

/// Errors produced by the routing lab.
#[derive(Debug, Error)]
pub enum QrlError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("invalid mix vector: {0}")]
    InvalidMix(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("node {node} out of range (graph has {nodes} nodes)")]
    NodeOutOfRange { node: NodeId, nodes: usize },
    #[error("node {dst} is unreachable from {src}")]
    Unreachable { src: NodeId, dst: NodeId },
    #[error("empty pair set")]
    EmptyPairSet,
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid search strategy: {0}")]
    InvalidStrategy(String),
    #[error("invalid cost model: {0}")]
    InvalidModel(String),
    #[error("invalid routing table: {0}")]
    InvalidTable(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = QrlError> = std::result::Result<T, E>;
