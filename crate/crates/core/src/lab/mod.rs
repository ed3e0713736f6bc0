//! Known-answer problem generators, order estimation and experiment traces.

mod experiment;
mod problem;
mod trace;

use thiserror::Error;

use crate::msqrt::SqrtError;
use crate::numerics::LinalgError;

pub use experiment::{run_experiment, write_trace_json, ExperimentKind, SolverParams};
pub use problem::{
    make_known_sqrt_problem, make_pencil_problem, KnownSqrt, PencilProblem, ProblemSpec,
    Similarity, SpectrumEntry,
};
pub use trace::{estimate_order, sci17, ConvergenceTrace, TraceRecord};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("need at least 3 positive errors, got {0} entries")]
    InsufficientData(usize),
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<SqrtError> for LabError {
    fn from(e: SqrtError) -> Self {
        match e {
            SqrtError::Linalg(l) => LabError::Linalg(l),
            other => LabError::InvalidParams(other.to_string()),
        }
    }
}
