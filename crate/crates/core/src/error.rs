use thiserror::Error;

/// Errors raised by the finite and Gaussian backends.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("space mismatch: expected `{expected}`, found `{found}`")]
    SpaceMismatch { expected: String, found: String },

    #[error("label `{label}` is not an element of `{space}`")]
    UnknownLabel { space: String, label: String },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("row {row} of kernel {source_space} -> {target} is not a distribution: {reason}")]
    NotStochastic {
        source_space: String,
        target: String,
        row: usize,
        reason: String,
    },

    #[error("kernel shape: {0}")]
    Shape(String),

    #[error("space `{0}` has no product structure")]
    NotAProductSpace(String),

    #[error("kernel does not preserve states: pushforward is {pushforward}, expected {expected}")]
    NotStatePreserving { pushforward: String, expected: String },

    #[error("object mismatch: {0}")]
    ObjectMismatch(String),

    #[error("observation {step} ({point}) has zero likelihood under the current posterior")]
    ZeroLikelihoodObservation { step: usize, point: String },

    #[error("the observed tuple has zero pushforward mass; batch update is undefined")]
    ZeroLikelihoodBatch,

    #[error("design matrix is rank deficient or ill-conditioned (condition number {condition:e})")]
    RankDeficient { condition: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid gaussian: {0}")]
    InvalidGaussian(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
