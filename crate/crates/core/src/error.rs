use thiserror::Error;

#[derive(Debug, Error)]
pub enum YamabeError {
    #[error("sphere dimension must be at least {min}, got {got}")]
    InvalidDimension { min: i64, got: i64 },

    #[error("harmonic degree must be non-negative, got {0}")]
    NegativeDegree(i64),

    #[error("quadrature grids are only available for S^1, S^2 and S^3, got S^{0}")]
    UnsupportedGrid(usize),

    #[error("quadrature degree {required} required, grid is exact to degree {available}")]
    InsufficientExactness { required: usize, available: usize },

    #[error("{0}")]
    InvalidParameter(String),

    #[error("conformal factor must be positive at every node (min {min:.3e})")]
    NonPositiveFactor { min: f64 },

    #[error("function is not a single Laplace eigenfunction")]
    NotAnEigenfunction,

    #[error("family does not violate the eigenvalue test (lambda1 = {lambda1}, s/(n-1) = {threshold})")]
    NotViolated { lambda1: f64, threshold: f64 },

    #[error("no step up to {tau} produced a certified energy drop")]
    NoCertificate { tau: f64 },

    #[error("all {restarts} restarts breached positivity")]
    PositivityBreach { restarts: usize },

    #[error("velocity must have unit length in h_t (|v| = {norm})")]
    NonUnitVelocity { norm: f64 },

    #[error("malformed grid cache: {0}")]
    GridCache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, YamabeError>;

pub(crate) fn invalid(msg: impl Into<String>) -> YamabeError {
    YamabeError::InvalidParameter(msg.into())
}
