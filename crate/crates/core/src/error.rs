use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid epsilon {0}: must lie in (0, 1]")]
    InvalidEpsilon(f64),
    #[error("dimension must be at least 1")]
    DimensionZero,
    #[error("point coordinate {value} at axis {axis} lies outside [-1, 1]")]
    OutOfDomain { axis: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("smoothness nu must be positive, got {0}")]
    NonPositiveNu(f64),
    #[error("regularizer lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("beta must lie in (0, 1), got {0}")]
    BetaOutOfRange(f64),
    #[error("invalid theta: {0}")]
    InvalidTheta(String),
    #[error("invalid environment parameter: {0}")]
    InvalidEnvironment(String),
    #[error("policy returned action outside [-1, 1] at step {step}")]
    PolicyOutOfRange { step: usize },
    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),
    #[error("environment does not expose a transition density")]
    DensityUnavailable,
    #[error("grid resolution too small: {0}")]
    ResolutionTooSmall(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("oracle grid too large: {0}")]
    OracleTooLarge(String),
    #[error("run {index} failed: {source}")]
    Run {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("{} sweep run(s) failed: {}", .0.len(), join_errors(.0))]
    Sweep(Vec<Error>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_errors(errors: &[Error]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
