//! Order-`r` acceleration of the AB flow.
//!
//! Each outer step takes `(Â, B̂) = (A_N, B_N)` to `(A_{rN}, B_{rN})` by
//! walking an inner chain `A^(l) = A_{lN}` for `l = 1..r-1` and then
//! composing once more with `(Â, B̂)`. After `k` outer steps the iterate is
//! `(A_{r^{k-1}}, B_{r^{k-1}})`, so `Â_k U` decays like `||Lambda||^{r^{k-1}}`.

use crate::numerics::{ComplexMatrix, LuFactorization};
use crate::pencil::{
    drive, factor_checked, AbIterate, Pencil, PencilError, RunOptions, SubspaceResult,
};

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 16;

#[derive(Clone, Debug)]
pub struct AccelConfig {
    order: usize,
    pub tol: f64,
    pub kmax: usize,
    pub expected_dim: Option<usize>,
    pub rank_tol: f64,
}

impl AccelConfig {
    pub fn new(order: usize, tol: f64, kmax: usize) -> Result<Self, PencilError> {
        if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
            return Err(PencilError::InvalidConfig(format!(
                "order must be in {MIN_ORDER}..={MAX_ORDER}, got {order}"
            )));
        }
        let cfg = Self {
            order,
            tol,
            kmax,
            expected_dim: None,
            rank_tol: crate::numerics::DEFAULT_RANK_TOL,
        };
        cfg.run_options().validate()?;
        Ok(cfg)
    }

    pub fn with_expected_dim(mut self, m: Option<usize>) -> Self {
        self.expected_dim = m;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn run_options(&self) -> RunOptions {
        RunOptions {
            tol: self.tol,
            kmax: self.kmax,
            expected_dim: self.expected_dim,
            rank_tol: self.rank_tol,
        }
    }
}

fn factor_inner(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    outer: usize,
    inner: usize,
) -> Result<LuFactorization, PencilError> {
    factor_checked(x, y, PencilError::AccelBreakdown { outer, inner })
}

/// Inner chain from `(Â, B̂)`:
/// `A^(l+1) = A^(l) (A^(l) + B̂)^{-1} Â`, `B^(l+1) = B̂ (A^(l) + B̂)^{-1} B^(l)`
/// for `l = 1..=r-2`, returning `(A^(r-1), B^(r-1))`.
pub fn inner_chain(
    hat_a: &ComplexMatrix,
    hat_b: &ComplexMatrix,
    order: usize,
) -> Result<(ComplexMatrix, ComplexMatrix), PencilError> {
    inner_chain_at(hat_a, hat_b, order, 0)
}

fn inner_chain_at(
    hat_a: &ComplexMatrix,
    hat_b: &ComplexMatrix,
    order: usize,
    outer: usize,
) -> Result<(ComplexMatrix, ComplexMatrix), PencilError> {
    if order < MIN_ORDER {
        return Err(PencilError::InvalidConfig(format!(
            "order must be >= 2, got {order}"
        )));
    }
    let mut a = hat_a.clone();
    let mut b = hat_b.clone();
    for ell in 1..=order - 2 {
        let lu = factor_inner(&a, hat_b, outer, ell)?;
        let a_next = &a * &lu.solve(hat_a)?;
        let b_next = hat_b * &lu.solve(&b)?;
        a = a_next;
        b = b_next;
    }
    Ok((a, b))
}

/// One outer step: `(A_N, B_N) -> (A_{rN}, B_{rN})`. `outer` is the index
/// of the outer iterate being produced, used for error reporting.
pub fn accel_step(prev: &AbIterate, order: usize, outer: usize) -> Result<AbIterate, PencilError> {
    let (a_inner, b_inner) = inner_chain_at(&prev.a, &prev.b, order, outer)?;
    let lu = factor_inner(&a_inner, &prev.b, outer, order - 1)?;
    let a = &a_inner * &lu.solve(&prev.a)?;
    let b = &prev.b * &lu.solve(&b_inner)?;
    Ok(AbIterate {
        a,
        b,
        k: prev.k * order,
    })
}

/// The first `count` outer iterates `(Â_1, B̂_1), ..., (Â_count, B̂_count)`.
pub fn accel_iterates(
    initial: &Pencil,
    order: usize,
    count: usize,
) -> Result<Vec<AbIterate>, PencilError> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    out.push(AbIterate::initial(initial));
    for outer in 2..=count {
        let next = accel_step(out.last().expect("nonempty"), order, outer)?;
        out.push(next);
    }
    Ok(out)
}

/// Accelerated run; stops when successive outer near-null spaces agree to
/// `tol` or after `kmax` outer steps. Extraction matches
/// [`crate::pencil::ab_run`].
pub fn modified_ab_run(initial: &Pencil, cfg: &AccelConfig) -> Result<SubspaceResult, PencilError> {
    modified_ab_run_with(initial, cfg, |_, _| {})
}

pub fn modified_ab_run_with(
    initial: &Pencil,
    cfg: &AccelConfig,
    observe: impl FnMut(usize, &AbIterate),
) -> Result<SubspaceResult, PencilError> {
    let order = cfg.order;
    drive(
        initial,
        &cfg.run_options(),
        |prev, outer| accel_step(prev, order, outer),
        observe,
    )
}
