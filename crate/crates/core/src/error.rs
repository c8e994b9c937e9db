use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("direction must be nonzero")]
    ZeroDirection,
    #[error("direction has non-finite components")]
    NonFiniteDirection,
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain boundary is empty: no sign change of the level set in the bounding box")]
    DomainEmpty,
    #[error("degenerate level-set gradient |grad phi| = {norm:.3e} at {point:?}")]
    DegenerateGradient { norm: f64, point: Vec<f64> },
    #[error("point is not on the boundary: |phi| = {phi:.3e} exceeds {tol:.3e}")]
    NotOnBoundary { phi: f64, tol: f64 },
    #[error("hyperplane section of the boundary is empty at lambda = {lambda}")]
    EmptySection { lambda: f64 },
    #[error("cap boundary is empty at lambda = {lambda}")]
    EmptyCap { lambda: f64 },
    #[error("lambda = {lambda} outside the admissible range ({lo}, {hi})")]
    LambdaOutOfRange { lambda: f64, lo: f64, hi: f64 },
    #[error("no stopping event found before lambda = {lambda_end}")]
    NoEventFound { lambda_end: f64 },
    #[error("direction #{index} (theta = {theta}): {source}")]
    AtDirection {
        index: usize,
        theta: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("grid mask is empty at h = {h}")]
    EmptyMask { h: f64 },
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("input solution did not converge")]
    UnconvergedInput,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numeric failures (as opposed to bad input or a bad domain).
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NoEventFound { .. }
            | Error::NotConverged { .. }
            | Error::UnconvergedInput
            | Error::EmptySection { .. }
            | Error::EmptyCap { .. } => true,
            Error::AtDirection { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
