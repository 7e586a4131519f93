use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SureError {
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("degenerate law: {0}")]
    DegenerateLaw(String),

    #[error("model must be centered (mean {mean}); shift it first")]
    NonZeroMean { mean: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("signal length {len} is not a multiple of 2^{levels}")]
    BadLength { len: usize, levels: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("grid too small: {0}")]
    GridBoundary(String),

    #[error("malformed description: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, SureError>;
