use std::path::PathBuf;

use crate::dual::DualState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate projection: smallest singular value {smallest_singular_value:e} below 1e-12")]
    DegenerateProjection { smallest_singular_value: f64 },

    #[error("dual subproblem stopped after {iterations} inner iterations with gradient norm {} > {tolerance:e}", best.dual_grad_norm)]
    SubproblemFailure {
        iterations: usize,
        tolerance: f64,
        best: Box<DualState>,
    },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("line search exceeded {max_backtracks} backtracks at outer iteration {iteration}")]
    LineSearchFailure { iteration: usize, max_backtracks: usize },

    #[error("degenerate affinity: row {row} of W sums to zero")]
    DegenerateAffinity { row: usize },

    #[error("oracle failure: {0}")]
    OracleFailure(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(String),
}
