use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("odd field must vanish at the origin (got {0:e})")]
    OddNonzeroAtOrigin(f64),

    #[error("point {x} lies outside the grid span [{lo}, {hi}]")]
    OutOfSpan { x: f64, lo: f64, hi: f64 },

    #[error("derivative of order {order} is unsupported at x = {x}")]
    UnsupportedDerivative { order: usize, x: f64 },

    #[error("degenerate anchor: {0}")]
    DegenerateAnchor(String),

    #[error("parity violation: even component {0:e} exceeds tolerance")]
    ParityViolation(f64),

    #[error("stream function is stale: max |-psi_xx - omega| = {0:e}")]
    StaleStream(f64),

    #[error("singular integrand: {0}")]
    SingularIntegrand(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite stage in time integration")]
    SolverBlowup,

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("root finder did not converge for y = {0}")]
    NoConvergence(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
