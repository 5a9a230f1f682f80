//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by tensor ops, model construction, file formats and the
/// base-calling pipeline.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Tensor or parameter shapes are inconsistent.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A layer or model specification violates one of its invariants.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// A named tensor expected by the model is absent from the weight set.
    #[error("missing tensor `{0}`")]
    MissingTensor(String),

    /// The weights container is malformed.
    #[error("weights container: {0}")]
    Container(String),

    /// The model configuration file is malformed or violates an invariant.
    #[error("config: {0}")]
    Config(String),

    /// A signal input file is malformed.
    #[error("signal input: {0}")]
    Signal(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
