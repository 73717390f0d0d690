use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("inverse of zero")]
    ZeroInverse,
    #[error("invalid code parameters: {0}")]
    InvalidCode(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("letter {letter} outside alphabet of size {size}")]
    AlphabetMismatch { letter: usize, size: usize },
    #[error("rate constraint violated: {0}")]
    RateConstraint(String),
    #[error("multiplicity type {0:?} is not allowable")]
    NotAllowable(Vec<u32>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Blahut-Arimoto did not converge after {iters} iterations (last change {residual:e})")]
    NonConvergence { iters: usize, residual: f64 },
    #[error("super-source too large: {0} letters")]
    TooLarge(usize),
    #[error("target rate {target} unreachable (max {max})")]
    UnreachableRate { target: f64, max: f64 },
    #[error("target distortion {target} infeasible (range [{min}, {max}])")]
    InfeasibleDistortion { target: f64, min: f64, max: f64 },
    #[error("empty candidate list")]
    EmptyCandidates,
}
