//! The AB iteration on a matrix pencil `A - lambda B`.
//!
//! Starting from `(A_1, B_1)`, each step factors `A_1 + B_{k-1}` and sets
//!
//! ```text
//! A_k = A_1 (A_1 + B_{k-1})^{-1} A_{k-1}
//! B_k = B_{k-1} (A_1 + B_{k-1})^{-1} B_1      (= A_k + B_1 - A_1)
//! ```
//!
//! If `A_1 U = B_1 U Lambda` with `rho(Lambda) < 1`, then
//! `A_k U = B_k U Lambda^k`, so `A_k U -> 0` and the stable subspace is the
//! limiting null space of `A_k`. The flow composes: any two iterates give
//! the iterate of the summed index via [`combine`].

mod flow;
mod run;
mod spectral;

use thiserror::Error;

use crate::numerics::LinalgError;

pub(crate) use flow::factor_checked;
pub use flow::{
    ab_step, ab_step_with, closed_form_iterate, combine, AbChain, AbIterate, Pencil, StepForm,
    BREAKDOWN_RCOND,
};
pub(crate) use run::drive;
pub use run::{ab_run, ab_run_with, recover_lambda, RunOptions, Status, SubspaceResult};
pub use spectral::{
    breakdown_check, breakdown_check_tol, eigenvalue_map, ExtComplex, ROOT_OF_UNITY_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PencilError {
    /// `A_1 + B_{k-1}` (or the combining sum) is numerically singular while
    /// producing the iterate of flow index `k`.
    #[error("breakdown: singular sum while forming iterate {k}")]
    Breakdown { k: usize },
    /// Singular inner sum in the accelerated iteration.
    #[error("breakdown in outer step {outer}, inner step {inner}")]
    AccelBreakdown { outer: usize, inner: usize },
    #[error("eigenvalue map has a pole (denominator sum vanishes for i = {i})")]
    PoleEncountered { i: usize },
    #[error("iterate indices start at 1, got {0}")]
    InvalidIndex(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
