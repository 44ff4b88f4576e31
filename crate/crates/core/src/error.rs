use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("degree {degree} exceeds the configured cap {cap}")]
    DegreeOverflow { degree: usize, cap: usize },
    #[error("operands use different model parameters")]
    ParamMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("integral does not converge: {0}")]
    NonIntegrable(String),
    #[error("geometry symmetry violated: {0}")]
    SymmetryViolation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("missing field: {0}")]
    MissingField(String),
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("selected subspace is empty")]
    EmptySubspace,
    #[error("point is a fixed point of the action")]
    FixedPoint,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
