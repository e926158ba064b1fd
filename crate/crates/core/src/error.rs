use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported loss kind for this operation: {0}")]
    UnsupportedLoss(String),

    #[error("non-finite {what} encountered at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },

    #[error("solver did not reach the gap tolerance: certificate {certificate:.3e} after {iterations} iterations")]
    NotConverged { certificate: f64, iterations: usize, result: Box<crate::solver::SolverResult> },

    #[error("grid search over {points} lattice points exceeds the budget of {budget} (M = {m})")]
    GridTooLarge { m: usize, points: u128, budget: u128 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse { path: String, row: usize, column: String, message: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
