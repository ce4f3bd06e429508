use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("element {element} is degenerate (measure {measure:e})")]
    DegenerateElement { element: usize, measure: f64 },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid quantity of interest: {0}")]
    InvalidQoi(String),

    /// The derivative of the QoI with respect to the preintegration variable
    /// must be strictly positive for the discontinuity point to exist.
    #[error("monotonicity violated: phi_0 = {phi0:e} at z = {z:?}")]
    Monotonicity { phi0: f64, z: Vec<f64> },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("linear solve residual {residual:e} exceeds {bound:e}")]
    Residual { residual: f64, bound: f64 },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("value {value} outside of {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("index {index} out of range 0..{len}")]
    OutOfRange { index: u64, len: u64 },

    #[error("integrand returned {value} at point {point:?}")]
    NonFinite { value: f64, point: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
