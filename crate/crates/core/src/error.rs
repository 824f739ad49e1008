use thiserror::Error;

use crate::model::Diagnostic;

pub type Result<T> = std::result::Result<T, DisorderError>;

#[derive(Debug, Error)]
pub enum DisorderError {
    #[error("invalid model: {}", join_diagnostics(.0))]
    InvalidModel(Vec<Diagnostic>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// The transition `from -> to` has zero probability under both kernels
    /// given the current posterior.
    #[error("unreachable observation: transition {from} -> {to} is impossible under the model")]
    UnreachableObservation { from: usize, to: usize },

    #[error("unreachable path: joint density is zero")]
    UnreachablePath,

    #[error("value iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("no admissible branch assignment found")]
    NoAdmissibleAssignment,

    #[error("threshold table was solved for a different model (expected hash {expected}, found {found})")]
    ModelHashMismatch { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
