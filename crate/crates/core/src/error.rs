use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("failed to parse spin system document: {0}")]
    Parse(String),

    #[error("basis error: {0}")]
    Basis(String),

    #[error("operand mismatch: {0}")]
    Mismatch(String),

    #[error("invalid initial state: {0}")]
    InitialState(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("step size too large: error control rejected {rejections} steps; try dt <= {suggested_dt:e}")]
    StepRejection { rejections: usize, suggested_dt: f64 },

    #[error("non-finite value encountered at step {step}")]
    NonFinite { step: usize },

    #[error("full-space simulation exceeds cap: Liouville dimension {dim} > {cap}")]
    CapExceeded { dim: u128, cap: u128 },

    #[error("root bracket failure: {0}")]
    Bracket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
