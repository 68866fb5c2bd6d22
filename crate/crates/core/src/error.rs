use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("vocabulary line {line}: {message}")]
    Vocabulary { line: usize, message: String },

    #[error("instance {id}: label index {label} out of range (vocabulary has {count} labels)")]
    LabelOutOfRange {
        id: String,
        label: u64,
        count: usize,
    },

    #[error("instance {id}: duplicate label index {label}")]
    DuplicateLabel { id: String, label: u32 },

    #[error("instance {id}: fingerprint width mismatch ({message})")]
    FingerprintWidth { id: String, message: String },

    #[error("instance {id}: edge ({u}, {v}) invalid for a graph with {nodes} nodes")]
    EdgeOutOfRange {
        id: String,
        u: usize,
        v: usize,
        nodes: usize,
    },

    #[error("instance {id}: self-edge on node {node}")]
    SelfEdge { id: String, node: usize },

    #[error("instance {id}: node feature dimension {found}, expected {expected}")]
    NodeFeatureDim {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("instance {id}: regression width {found}, expected {expected}")]
    RegressionWidth {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("instance {id}: non-finite value in {field}")]
    NonFinite { id: String, field: &'static str },

    #[error("duplicate instance id {0}")]
    DuplicateId(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable class name, stable across releases.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Malformed { .. } => "malformed",
            Error::Vocabulary { .. } => "vocabulary",
            Error::LabelOutOfRange { .. } => "label-out-of-range",
            Error::DuplicateLabel { .. } => "duplicate-label",
            Error::FingerprintWidth { .. } => "fingerprint-width",
            Error::EdgeOutOfRange { .. } => "edge-out-of-range",
            Error::SelfEdge { .. } => "self-edge",
            Error::NodeFeatureDim { .. } => "node-feature-dim",
            Error::RegressionWidth { .. } => "regression-width",
            Error::NonFinite { .. } => "non-finite",
            Error::DuplicateId(_) => "duplicate-id",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Shape(_) => "shape",
            Error::Undefined(_) => "undefined",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
