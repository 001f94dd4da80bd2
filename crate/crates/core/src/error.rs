use thiserror::Error;

/// Errors raised by constructors and operations when their preconditions fail.
///
/// Verification failures are never reported through this type; checks return a
/// [`VerificationReport`](crate::report::VerificationReport) with `passed = false`.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("vectors live on different momentum grids")]
    GridMismatch,

    #[error("profile leaks {mass:.3e} of its mass outside the declared half-line")]
    ProfileNotLocalized { mass: f64 },

    #[error("zero vector has no position-space distribution")]
    ZeroVector,

    #[error("zero {0} is not in the open upper half-plane")]
    ZeroOutsideUpperHalfPlane(String),

    #[error("singular coefficient must be non-negative, got {0}")]
    NegativeSingularCoefficient(f64),

    #[error("evaluation point {0} is within 1e-10 of a pole")]
    NearPole(String),

    #[error("inner function is not symmetric; use the fermionic entry point")]
    NotSymmetric,

    #[error("empty mode list")]
    EmptyModes,

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("operation requires {expected} statistics")]
    WrongStatistics { expected: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("entry {index} has modulus {modulus}, expected 1")]
    NotUnimodular { index: usize, modulus: f64 },

    #[error("declared operator property `{0}` does not hold within 1e-12")]
    FlagViolation(&'static str),

    #[error("negative deformation parameter kappa = {0}")]
    NegativeKappa(f64),

    #[error("charge entry {index} = {value} is not an integer")]
    NonIntegerCharge { index: usize, value: f64 },

    #[error("rapidity {0} is not a grid point")]
    OffGrid(f64),

    #[error("invalid kernel or time series: {0}")]
    InvalidSeries(String),

    #[error("asymptotic sequence is not Cauchy: differences {0:?}")]
    NotConverged(Vec<f64>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
