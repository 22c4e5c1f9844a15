use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("size guard exceeded: {0}")]
    TooLarge(String),

    #[error("divergent phase: atoms {0} and {1} coincide")]
    DivergentPhase(usize, usize),

    #[error("quadrature did not converge: estimate {estimate}, error {error:e} > tolerance {tolerance:e}")]
    Quadrature {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("step size collapsed to {step:e} at t = {time}")]
    StepSizeCollapse { time: f64, step: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
