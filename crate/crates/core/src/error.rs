use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cube: {0}")]
    InvalidCube(String),
    #[error("invalid dilation factor {0}: must be positive")]
    InvalidDilation(String),
    #[error("grid level {level} outside scale bounds [-{bound}, {bound}]")]
    ScaleRange { level: i32, bound: i32 },
    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("singular cell: {0}")]
    SingularCell(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("open set fills the whole window; the complement is empty")]
    NoExterior,
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("no maximal cube: {0}")]
    NoMaximalCube(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("case exhaustiveness violated: {0}")]
    Exhaustiveness(String),
}

pub type Result<T> = std::result::Result<T, Error>;
