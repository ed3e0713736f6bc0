//! Driving the flow to convergence and extracting the stable subspace.

use serde::{Deserialize, Serialize};

use crate::numerics::{
    least_squares, null_space_basis, smallest_right_singular_subspace, subspace_distance,
    ComplexMatrix, SubspaceBasis, DEFAULT_RANK_TOL,
};

use super::flow::{ab_step, AbIterate, Pencil};
use super::PencilError;

/// How an iteration ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIterations,
    Breakdown,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Threshold on the distance between successive near-null spaces.
    pub tol: f64,
    /// Largest iterate index (outer step for accelerated runs) computed.
    pub kmax: usize,
    /// When set, the near-null space is the span of this many smallest
    /// right singular directions, whatever their size.
    pub expected_dim: Option<usize>,
    /// Relative singular value cutoff for the near-null space.
    pub rank_tol: f64,
}

impl RunOptions {
    pub fn new(tol: f64, kmax: usize) -> Self {
        Self {
            tol,
            kmax,
            expected_dim: None,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }

    pub fn with_expected_dim(mut self, m: Option<usize>) -> Self {
        self.expected_dim = m;
        self
    }

    pub(crate) fn validate(&self) -> Result<(), PencilError> {
        if !(self.tol > 0.0) {
            return Err(PencilError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.rank_tol > 0.0) {
            return Err(PencilError::InvalidConfig(
                "rank_tol must be positive".into(),
            ));
        }
        if self.kmax < 2 {
            return Err(PencilError::InvalidConfig(format!(
                "kmax must be >= 2, got {}",
                self.kmax
            )));
        }
        Ok(())
    }

    fn near_null(&self, a: &ComplexMatrix) -> SubspaceBasis {
        match self.expected_dim {
            Some(m) => smallest_right_singular_subspace(a, m),
            None => null_space_basis(a, self.rank_tol),
        }
    }
}

/// Stable deflating subspace `A U = B U Lambda` recovered from a run.
#[derive(Clone, Debug)]
pub struct SubspaceResult {
    pub u: SubspaceBasis,
    pub lambda: ComplexMatrix,
    /// `||A_1 U - B_1 U Lambda||_F / ||U||_F`.
    pub residual: f64,
    /// Index of the last iterate computed (outer step count for
    /// accelerated runs).
    pub iterations: usize,
    /// Flow index of the last iterate.
    pub flow_index: usize,
    /// Last distance between successive near-null spaces.
    pub last_distance: f64,
    pub status: Status,
}

/// Runs the plain flow until successive near-null spaces of `A_k` agree
/// to `tol` or `k > kmax`.
pub fn ab_run(
    initial: &Pencil,
    tol: f64,
    kmax: usize,
    expected_dim: Option<usize>,
) -> Result<SubspaceResult, PencilError> {
    let opts = RunOptions::new(tol, kmax).with_expected_dim(expected_dim);
    ab_run_with(initial, &opts, |_, _| {})
}

/// [`ab_run`] with full options and an observer called on every iterate
/// (including `k = 1`).
pub fn ab_run_with(
    initial: &Pencil,
    opts: &RunOptions,
    observe: impl FnMut(usize, &AbIterate),
) -> Result<SubspaceResult, PencilError> {
    drive(initial, opts, |prev, _| ab_step(initial, prev), observe)
}

/// Shared loop for the plain and accelerated iterations. `advance` maps the
/// current iterate and the step number about to be produced to the next
/// iterate.
pub(crate) fn drive(
    initial: &Pencil,
    opts: &RunOptions,
    mut advance: impl FnMut(&AbIterate, usize) -> Result<AbIterate, PencilError>,
    mut observe: impl FnMut(usize, &AbIterate),
) -> Result<SubspaceResult, PencilError> {
    opts.validate()?;
    if let Some(m) = opts.expected_dim {
        if m > initial.dim() {
            return Err(PencilError::InvalidConfig(format!(
                "expected_dim {m} exceeds pencil size {}",
                initial.dim()
            )));
        }
    }
    let mut current = AbIterate::initial(initial);
    observe(1, &current);
    let mut prev_null = opts.near_null(&current.a);
    let mut status = Status::MaxIterations;
    let mut step = 1;
    let mut last_distance = 1.0;

    while step < opts.kmax {
        step += 1;
        current = advance(&current, step)?;
        observe(step, &current);
        let null = opts.near_null(&current.a);
        last_distance = if null.is_empty() {
            1.0
        } else {
            subspace_distance(&prev_null, &null)?
        };
        prev_null = null;
        if last_distance < opts.tol {
            status = Status::Converged;
            break;
        }
    }

    let (lambda, residual) = recover_lambda(initial, &prev_null)?;
    Ok(SubspaceResult {
        u: prev_null,
        lambda,
        residual,
        iterations: step,
        flow_index: current.k,
        last_distance,
        status,
    })
}

/// Least-squares `Lambda = (B_1 U)^+ (A_1 U)` against the original pencil,
/// with the relative residual.
pub fn recover_lambda(
    initial: &Pencil,
    u: &SubspaceBasis,
) -> Result<(ComplexMatrix, f64), PencilError> {
    let m = u.dim();
    if m == 0 {
        return Ok((ComplexMatrix::zeros(0, 0), 0.0));
    }
    let au = initial.a() * u.matrix();
    let bu = initial.b() * u.matrix();
    let lambda = least_squares(&bu, &au)?;
    let resid = (&au - &(&bu * &lambda)).norm_fro() / u.matrix().norm_fro();
    Ok((lambda, resid))
}
