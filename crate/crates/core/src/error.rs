use thiserror::Error;

/// Errors raised by the solvers, samplers and experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge within {cap} iterations")]
    IterationCap { what: &'static str, cap: usize },

    #[error("insufficient samples: {have} available, {need} required")]
    InsufficientSamples { have: u64, need: u64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
