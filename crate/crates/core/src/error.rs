use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite {what} at node {coords:?}")]
    NonFinite { what: &'static str, coords: Vec<f64> },

    #[error("null function: L2 norm is zero")]
    NullFunction,

    #[error("coordinate {coord}: no analytic partial and no finite-difference step set")]
    MissingPartial { coord: usize },

    #[error("support {support:?} is not inside the box {domain:?}")]
    SupportOutsideBox { support: Vec<(f64, f64)>, domain: Vec<(f64, f64)> },

    #[error("support touches the grid boundary on coordinate {coord}")]
    SupportTouchesBoundary { coord: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not Kato: inner integral diverges under refinement ({0})")]
    NotKato(String),

    #[error("weights not homogeneous (max relative defect {max_defect:e})")]
    WeightsNotHomogeneous { max_defect: f64 },

    #[error("non-integrable g: {0}")]
    NonIntegrable(String),

    #[error("profile is not monotone: M({t_next}) = {m_next} > M({t}) = {m}")]
    ProfileNotMonotone { t: f64, m: f64, t_next: f64, m_next: f64 },

    #[error("linear solver breakdown at row {row}")]
    SolverBreakdown { row: usize },

    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("descriptor cannot be serialized: {0}")]
    NotSerializable(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
