use std::io;

/// Errors raised by the exploration library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("data set contains no valid point")]
    NoValidData,

    #[error("training data contains a single outcome class")]
    SingleClass,

    #[error("no data point with the opposing outcome")]
    NoOpposingClass,

    #[error("all utility weights are zero")]
    DegenerateWeights,

    #[error("probability {0} outside [0, 1]")]
    ProbabilityDomain(f64),

    #[error("parameter {0:?} lies outside the simulation domain")]
    OutOfDomain(Vec<f64>),

    #[error("kernel matrix is not positive definite after jitter escalation")]
    NotPositiveDefinite,

    #[error("Monte-Carlo sample is degenerate: {0}")]
    DegenerateVolume(&'static str),

    #[error("invalid exploration setup: {0}")]
    InvalidSetup(String),

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("malformed data: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
