//! Principal matrix square root through the AB flow.
//!
//! For `A = [[0, I], [S, 0]]` the pencil `(γI - A, γI + A)` has the stable
//! deflating subspace `[I; √S]` with eigenvalue block `(γI - √S)(γI + √S)^{-1}`.
//! Its flow keeps the shape
//!
//! ```text
//! A_k = [[Q_k, -I], [-S, Q_k]],   B_k = [[Q_k, I], [S, Q_k]]
//! ```
//!
//! so the whole iteration collapses to the `n x n` recursion
//! `Q_{k+1} = (γ Q_k + S)(γ I + Q_k)^{-1}`, `Q_1 = γ I`, and its order-`r`
//! acceleration. The `2n x 2n` pencil is kept only for cross-checks.

use std::time::Instant;

use thiserror::Error;

use crate::lab::ConvergenceTrace;
use crate::numerics::{induced_norm2, ComplexMatrix, LinalgError, LuFactorization, C64};
use crate::pencil::{Pencil, Status};

pub const MAX_ORDER: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SqrtError {
    /// Singular `Q̂ + Q^(l)` at outer step `outer`, inner step `inner`
    /// (`inner = r - 1` is the closing outer update). Signals spectrum on
    /// the closed negative real axis.
    #[error("breakdown at outer step {outer}, inner step {inner}")]
    Breakdown { outer: usize, inner: usize },
    #[error("singular partner sum in Q-step")]
    SingularSum,
    #[error("singular denominator in binomial step")]
    SingularDenominator,
    #[error("invalid bounds ({0}, {1}); need 0 < a <= b")]
    InvalidBounds(f64, f64),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Inputs to [`sqrtm_ab`]. Defaults: `gamma = 1`, `order = 2`,
/// `tol = 1e-12`, `kmax = 100`.
#[derive(Clone, Debug)]
pub struct SqrtProblem {
    pub s: ComplexMatrix,
    pub gamma: f64,
    pub order: usize,
    pub tol: f64,
    pub kmax: usize,
}

impl SqrtProblem {
    pub fn new(s: ComplexMatrix) -> Self {
        Self {
            s,
            gamma: 1.0,
            order: 2,
            tol: 1e-12,
            kmax: 100,
        }
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn kmax(mut self, kmax: usize) -> Self {
        self.kmax = kmax;
        self
    }

    pub fn validate(&self) -> Result<(), SqrtError> {
        if !self.s.is_square() {
            return Err(SqrtError::InvalidProblem(format!(
                "S must be square, got {}x{}",
                self.s.rows(),
                self.s.cols()
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(SqrtError::InvalidProblem(format!(
                "gamma must be > 0, got {}",
                self.gamma
            )));
        }
        if !(2..=MAX_ORDER).contains(&self.order) {
            return Err(SqrtError::InvalidProblem(format!(
                "order must be in 2..={MAX_ORDER}, got {}",
                self.order
            )));
        }
        if !(self.tol > 0.0) {
            return Err(SqrtError::InvalidProblem(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        if self.kmax < 2 {
            return Err(SqrtError::InvalidProblem(format!(
                "kmax must be >= 2, got {}",
                self.kmax
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SqrtResult {
    pub x: ComplexMatrix,
    /// `||X^2 - S||_F / ||S||_F` (absolute when `S = 0`).
    pub residual: f64,
    /// Per outer step: relative successive difference as `error`, and the
    /// relative residual.
    pub trace: ConvergenceTrace,
    /// Outer index of the returned iterate: the one with the smallest
    /// residual among those computed.
    pub iterations: usize,
    pub status: Status,
}

/// `A_1 = γI - [[0, I], [S, 0]]`, `B_1 = γI + [[0, I], [S, 0]]`.
pub fn embed_pencil(s: &ComplexMatrix, gamma: f64) -> Result<Pencil, SqrtError> {
    if !s.is_square() {
        return Err(LinalgError::NotSquare {
            rows: s.rows(),
            cols: s.cols(),
        }
        .into());
    }
    let n = s.rows();
    let zero = ComplexMatrix::zeros(n, n);
    let id = ComplexMatrix::identity(n);
    let companion = ComplexMatrix::block2x2(&zero, &id, s, &zero)?;
    let g = ComplexMatrix::scalar(2 * n, C64::new(gamma, 0.0));
    Pencil::new(&g - &companion, &g + &companion).map_err(|e| match e {
        crate::pencil::PencilError::Linalg(l) => SqrtError::Linalg(l),
        other => SqrtError::InvalidProblem(other.to_string()),
    })
}

/// `(S + P Q)(P + Q)^{-1}`. With `P = γI` this is one plain step.
pub fn q_step(
    q: &ComplexMatrix,
    s: &ComplexMatrix,
    partner: &ComplexMatrix,
) -> Result<ComplexMatrix, SqrtError> {
    let sum = partner + q;
    let scale = partner.max_abs().max(q.max_abs());
    let lu = LuFactorization::with_scale(&sum, scale).map_err(|e| match e {
        LinalgError::SingularMatrix { .. } => SqrtError::SingularSum,
        other => other.into(),
    })?;
    let num = s + &(partner * q);
    Ok(lu.solve_right(&num)?)
}

/// `Q_1, ..., Q_count` of the plain recursion from `Q_1 = γI`.
pub fn q_chain(
    s: &ComplexMatrix,
    gamma: f64,
    count: usize,
) -> Result<Vec<ComplexMatrix>, SqrtError> {
    let n = s.rows();
    let g = ComplexMatrix::scalar(n, C64::new(gamma, 0.0));
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    out.push(g.clone());
    for _ in 1..count {
        let next = q_step(out.last().expect("nonempty"), s, &g)?;
        out.push(next);
    }
    Ok(out)
}

/// One accelerated outer step `Q̂ = Q_N -> Q_{rN}`.
pub fn accel_q_step(
    hat_q: &ComplexMatrix,
    s: &ComplexMatrix,
    order: usize,
    outer: usize,
) -> Result<ComplexMatrix, SqrtError> {
    let breakdown = |inner| {
        move |e| match e {
            SqrtError::SingularSum => SqrtError::Breakdown { outer, inner },
            other => other,
        }
    };
    let mut q = hat_q.clone();
    for ell in 1..=order.saturating_sub(2) {
        q = q_step(&q, s, hat_q).map_err(breakdown(ell))?;
    }
    q_step(&q, s, hat_q).map_err(breakdown(order - 1))
}

/// Accelerated square-root iteration. Stops when
/// `||Q̂_k - Q̂_{k-1}||_F / ||Q̂_k||_F < tol`, when that change stops
/// shrinking after falling below `sqrt(tol)` (rounding floor reached), or
/// after `kmax` outer steps. Returns the iterate with the smallest residual.
pub fn sqrtm_ab(prob: &SqrtProblem) -> Result<SqrtResult, SqrtError> {
    sqrtm_ab_observed(prob, |_, _| {})
}

/// [`sqrtm_ab`] with an observer on every outer iterate `Q̂_k`, `k >= 1`.
pub fn sqrtm_ab_observed(
    prob: &SqrtProblem,
    mut observe: impl FnMut(usize, &ComplexMatrix),
) -> Result<SqrtResult, SqrtError> {
    prob.validate()?;
    let s = &prob.s;
    let n = s.rows();
    let s_norm = s.norm_fro();
    let start = Instant::now();

    let mut hat_q = ComplexMatrix::scalar(n, C64::new(prob.gamma, 0.0));
    observe(1, &hat_q);
    let mut trace = ConvergenceTrace::new();
    let mut status = Status::MaxIterations;
    let mut stop = StopRule::new(prob.tol);
    // past the attainable accuracy the iterates wander, so the smallest
    // residual seen is what gets returned
    let mut best = (sqrt_residual(&hat_q, s, s_norm), 1, hat_q.clone());
    let mut k = 1;
    while k < prob.kmax {
        k += 1;
        let next = accel_q_step(&hat_q, s, prob.order, k)?;
        observe(k, &next);
        let rel = relative_change(&next, &hat_q);
        let residual = sqrt_residual(&next, s, s_norm);
        trace.push(k, rel, residual, start.elapsed().as_secs_f64());
        if residual <= best.0 {
            best = (residual, k, next.clone());
        }
        hat_q = next;
        match stop.check(rel) {
            Stop::Continue => {}
            Stop::Converged | Stop::Stagnated => {
                status = Status::Converged;
                break;
            }
        }
    }
    trace.status = Some(status);
    let (residual, iterations, x) = best;
    Ok(SqrtResult {
        x,
        residual,
        trace,
        iterations,
        status,
    })
}

/// `||next - prev||_F / ||next||_F` (absolute when `next = 0`).
pub(crate) fn relative_change(next: &ComplexMatrix, prev: &ComplexMatrix) -> f64 {
    let denom = next.norm_fro();
    let diff = (next - prev).norm_fro();
    if denom > 0.0 {
        diff / denom
    } else {
        diff
    }
}

#[derive(Debug, PartialEq, Eq)]
pub(crate) enum Stop {
    Continue,
    Converged,
    /// The change stopped shrinking after dropping below `sqrt(tol)`:
    /// rounding error has taken over and further steps only amplify it.
    Stagnated,
}

/// Successive-difference stopping test with a stagnation guard.
pub(crate) struct StopRule {
    tol: f64,
    prev: Option<f64>,
}

impl StopRule {
    pub(crate) fn new(tol: f64) -> Self {
        Self { tol, prev: None }
    }

    pub(crate) fn check(&mut self, rel: f64) -> Stop {
        if rel < self.tol {
            return Stop::Converged;
        }
        if let Some(p) = self.prev {
            if p <= self.tol.sqrt() && rel >= p {
                return Stop::Stagnated;
            }
        }
        self.prev = Some(rel);
        Stop::Continue
    }
}

fn sqrt_residual(x: &ComplexMatrix, s: &ComplexMatrix, s_norm: f64) -> f64 {
    let r = (&(x * x) - s).norm_fro();
    if s_norm > 0.0 {
        r / s_norm
    } else {
        r
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// One order-`r` outer step in rational form:
/// `(sum_j C(r,2j) Q^{r-2j} S^j) (sum_j C(r,2j+1) Q^{r-2j-1} S^j)^{-1}`.
pub fn binomial_step(
    q: &ComplexMatrix,
    s: &ComplexMatrix,
    order: usize,
) -> Result<ComplexMatrix, SqrtError> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(SqrtError::InvalidProblem(format!(
            "order must be in 1..={MAX_ORDER}"
        )));
    }
    if q.shape() != s.shape() || !q.is_square() {
        return Err(LinalgError::DimensionMismatch {
            op: "binomial_step",
            left: q.shape(),
            right: s.shape(),
        }
        .into());
    }
    let n = q.rows();
    let r = order as u64;
    let q_pow: Vec<ComplexMatrix> =
        std::iter::successors(Some(ComplexMatrix::identity(n)), |p| Some(p * q))
            .take(order + 1)
            .collect();
    let s_pow: Vec<ComplexMatrix> =
        std::iter::successors(Some(ComplexMatrix::identity(n)), |p| Some(p * s))
            .take(order / 2 + 1)
            .collect();

    let mut num = ComplexMatrix::zeros(n, n);
    for j in 0..=(order / 2) {
        let c = binomial(r, 2 * j as u64) as f64;
        num = &num + &(&q_pow[order - 2 * j] * &s_pow[j]).scale_real(c);
    }
    let mut den = ComplexMatrix::zeros(n, n);
    for j in 0..=((order - 1) / 2) {
        let c = binomial(r, 2 * j as u64 + 1) as f64;
        den = &den + &(&q_pow[order - 2 * j - 1] * &s_pow[j]).scale_real(c);
    }
    let lu = LuFactorization::new(&den).map_err(|e| match e {
        LinalgError::SingularMatrix { .. } => SqrtError::SingularDenominator,
        other => other.into(),
    })?;
    Ok(lu.solve_right(&num)?)
}

/// `(Q + S Q^{-1}) / 2`.
pub fn newton_step(q: &ComplexMatrix, s: &ComplexMatrix) -> Result<ComplexMatrix, SqrtError> {
    let sq_inv = LuFactorization::new(q)?.solve_right(s)?;
    Ok((q + &sq_inv).scale_real(0.5))
}

/// Möbius image `(γI - X)(γI + X)^{-1}`.
pub fn cayley_factor(x: &ComplexMatrix, gamma: f64) -> Result<ComplexMatrix, SqrtError> {
    let g = ComplexMatrix::scalar(x.rows(), C64::new(gamma, 0.0));
    Ok(LuFactorization::new(&(&g + x))?.solve_right(&(&g - x))?)
}

/// `||(X - Q)(X + Q)^{-1}||_2` for a known square root `X`.
pub fn cayley_residual(q: &ComplexMatrix, x_true: &ComplexMatrix) -> Result<f64, SqrtError> {
    let c = LuFactorization::new(&(x_true + q))?.solve_right(&(x_true - q))?;
    Ok(induced_norm2(&c))
}

/// `γ = sqrt(a b)`: equalizes `|(x-γ)/(x+γ)|` at the ends of `[a, b]`,
/// which minimizes its maximum over the interval.
pub fn gamma_heuristic(bounds: (f64, f64)) -> Result<f64, SqrtError> {
    let (a, b) = bounds;
    if !(a > 0.0 && a <= b && b.is_finite()) {
        return Err(SqrtError::InvalidBounds(a, b));
    }
    Ok((a * b).sqrt())
}
