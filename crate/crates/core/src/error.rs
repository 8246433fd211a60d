use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rank deficient ({context}): sigma_min = {sigma_min:e}")]
    RankDeficient { context: String, sigma_min: f64 },

    #[error("singular system ({context}): smallest |eigenvalue| ~ {estimate:e}")]
    Singular { context: String, estimate: f64 },

    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("under-resolved truncation: {0}")]
    Resolution(String),

    #[error("not converged after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64, best: Vec<f64> },

    #[error("gain cap {cap} reached; best fitted rate {best_rate}")]
    GainCap { cap: f64, best_rate: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
