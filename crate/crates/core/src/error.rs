use thiserror::Error;

/// Errors raised by samplers, models and pricers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("double CFTP requires 0 < delta <= 1, got {0}")]
    InvalidDelta(f64),

    #[error("scale variable is almost surely constant; the Dirichlet mean is that constant")]
    DegenerateY,

    #[error("stopping rule needs an almost-sure bound on Y but the law is unbounded")]
    UnboundedY,

    #[error("sampler exceeded the cap of {0} primitive draws")]
    IterationCap(u64),

    #[error("cannot compose a Dirichlet mean from an empty block list")]
    EmptyBlocks,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("invalid calibration problem: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
