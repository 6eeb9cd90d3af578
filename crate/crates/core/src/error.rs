use thiserror::Error;

use crate::pde::NewtonReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate triangle {index} (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch: expected {expected} values, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("conjugate gradient stopped after {iterations} iterations with relative residual {residual:e}")]
    LinearSolver { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("semismooth Newton did not converge in {} iterations (residual {:e})", .0.iterations, .0.final_residual)]
    Newton(NewtonReport),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("every sample of the sequence lies below the noise floor")]
    DegenerateSequence,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
