use thiserror::Error;

use crate::network::NodeId;

/// Errors raised while building networks or evaluating coding, power and rate quantities.
#[derive(Debug, Error)]
pub enum AncError {
    #[error("invalid network shape: {0}")]
    Shape(String),

    #[error("power must be strictly positive and finite, got {value} for {what}")]
    NonPositivePower { what: String, value: f64 },

    #[error("non-finite channel gain at layer {layer}, row {row}, column {col}")]
    NonFiniteGain { layer: usize, row: usize, col: usize },

    #[error("node {0} is unreachable (all incoming or all outgoing gains are zero)")]
    Unreachable(NodeId),

    #[error("node {0} is not valid here: {1}")]
    InvalidNode(NodeId, &'static str),

    #[error("received power at node {0} is zero; delta is undefined")]
    DegenerateReceivedPower(NodeId),

    #[error("gain assignment does not match network: {0}")]
    GainShape(String),

    #[error("non-finite gain for relay {0}")]
    NonFiniteBeta(NodeId),

    #[error("edges {0} -> {1} and {2} -> {3} do not meet at a common node")]
    NonAdjacentEdges(NodeId, NodeId, NodeId, NodeId),

    #[error("path enumeration exceeded the guard of {0} paths")]
    PathGuard(usize),

    #[error("exceptional layer {layer} out of range 1..={max}")]
    LayerOutOfRange { layer: usize, max: usize },

    #[error("node {0} has zero compound gain towards the destination")]
    InvisibleNode(NodeId),

    #[error("scheme constant c1 must be positive, got {0}")]
    NonPositiveC1(f64),

    #[error("negative SNR {0}")]
    NegativeSnr(f64),

    #[error("ideal network has no layer-{0} noise reaching the destination")]
    ZeroIdealNoise(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mismatched quantities: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AncError>;
