//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::solver::StepRecord;

pub type Result<T> = std::result::Result<T, HmixError>;

#[derive(Debug, Error)]
pub enum HmixError {
    /// Index or size outside the documented range of an operation.
    #[error("argument error: {0}")]
    Argument(String),

    /// Input lies outside the region where the operation is defined
    /// (cone exit, nonpositive coefficient, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Admissibility lost at one or more grid points (linear indices).
    #[error("cone violation at {} point(s), worst margin {worst:e}", points.len())]
    ConeViolation { points: Vec<usize>, worst: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A problem could not be built; `points` lists offending grid indices.
    #[error("construction error: {message} ({} violating point(s))", points.len())]
    Construction { message: String, points: Vec<usize>, worst: f64 },

    #[error("newton stalled at t = {t}: residual {residual:e} after {iterations} iteration(s)")]
    NewtonStall { t: f64, residual: f64, iterations: usize },

    #[error("linear solve failed after {iterations} iteration(s), relative residual {relative_residual:e}")]
    LinearFailure { iterations: usize, relative_residual: f64 },

    #[error("homotopy failed: t = {t} could not be advanced (step below minimum)")]
    HomotopyFailure { t: f64, trace: Vec<StepRecord> },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HmixError {
    /// Short machine-readable tag used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            HmixError::Argument(_) => "argument",
            HmixError::Domain(_) => "domain",
            HmixError::ConeViolation { .. } => "cone_violation",
            HmixError::Precondition(_) => "precondition",
            HmixError::Construction { .. } => "construction",
            HmixError::NewtonStall { .. } => "newton_stall",
            HmixError::LinearFailure { .. } => "linear_failure",
            HmixError::HomotopyFailure { .. } => "homotopy_failure",
            HmixError::Config(_) => "config",
            HmixError::Io(_) => "io",
            HmixError::Json(_) => "json",
        }
    }
}
