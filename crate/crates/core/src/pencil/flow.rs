//! The discrete flow `(A_k, B_k)` generated from an initial pencil.

use crate::numerics::{ComplexMatrix, LinalgError, LuFactorization};

use super::PencilError;

/// Regular pencil `A - lambda B`. Regularity is not checked here; the
/// iteration reports breakdown instead.
#[derive(Clone, Debug)]
pub struct Pencil {
    a: ComplexMatrix,
    b: ComplexMatrix,
}

impl Pencil {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self, PencilError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            }
            .into());
        }
        if a.shape() != b.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "pencil",
                left: a.shape(),
                right: b.shape(),
            }
            .into());
        }
        Ok(Self { a, b })
    }

    /// `A - lambda I`.
    pub fn standard(a: ComplexMatrix) -> Result<Self, PencilError> {
        let id = ComplexMatrix::identity(a.rows());
        Self::new(a, id)
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }
}

/// The `k`-th element `(A_k, B_k)` of the flow.
#[derive(Clone, Debug)]
pub struct AbIterate {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub k: usize,
}

impl AbIterate {
    /// `(A_1, B_1, 1)`.
    pub fn initial(pencil: &Pencil) -> Self {
        Self {
            a: pencil.a.clone(),
            b: pencil.b.clone(),
            k: 1,
        }
    }

    /// `||(A_k - B_k) - (A_1 - B_1)||_F`; zero in exact arithmetic.
    pub fn difference_drift(&self, initial: &Pencil) -> f64 {
        let lhs = &self.a - &self.b;
        let rhs = &initial.a - &initial.b;
        (&lhs - &rhs).norm_fro()
    }
}

/// Which sum is factored for each half of the step. All four combinations
/// produce the same iterates in exact arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StepForm {
    /// `A_k = A_1 (A_1+B_{k-1})^{-1} A_{k-1}` and `B_k = A_k + B_1 - A_1`.
    #[default]
    Shortcut,
    /// Both halves through `(A_1+B_{k-1})^{-1}`.
    Direct,
    /// `A` half through `(B_1+A_{k-1})^{-1}`, `B` half through `(A_1+B_{k-1})^{-1}`.
    MixedA,
    /// `A` half through `(A_1+B_{k-1})^{-1}`, `B` half through `(B_1+A_{k-1})^{-1}`.
    MixedB,
    /// Both halves through `(B_1+A_{k-1})^{-1}`.
    Swapped,
}

/// Sums whose reciprocal 1-norm condition number, measured against the
/// operands, falls below this are treated as singular.
pub const BREAKDOWN_RCOND: f64 = 1e-12;

/// Factors `x + y`, reporting `on_singular` when the sum is singular
/// relative to the size of `x` and `y`.
pub(crate) fn factor_checked(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    on_singular: PencilError,
) -> Result<LuFactorization, PencilError> {
    let sum = x + y;
    // cancellation in the sum is relative to the operands, not the result
    let scale = x.max_abs().max(y.max_abs());
    let lu = LuFactorization::with_scale(&sum, scale).map_err(|e| match e {
        LinalgError::SingularMatrix { .. } => on_singular.clone(),
        other => other.into(),
    })?;
    let rcond = 1.0 / (x.norm_one().max(y.norm_one()) * lu.inverse_norm_one()?);
    if !(rcond > BREAKDOWN_RCOND) {
        return Err(on_singular);
    }
    Ok(lu)
}

fn factor_sum(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    k: usize,
) -> Result<LuFactorization, PencilError> {
    factor_checked(x, y, PencilError::Breakdown { k })
}

/// One step of the flow from `prev = (A_{k-1}, B_{k-1})`, using the
/// default [`StepForm::Shortcut`].
pub fn ab_step(initial: &Pencil, prev: &AbIterate) -> Result<AbIterate, PencilError> {
    ab_step_with(initial, prev, StepForm::Shortcut)
}

pub fn ab_step_with(
    initial: &Pencil,
    prev: &AbIterate,
    form: StepForm,
) -> Result<AbIterate, PencilError> {
    if prev.k == 0 {
        return Err(PencilError::InvalidIndex(0));
    }
    if prev.a.shape() != initial.a.shape() || prev.b.shape() != initial.b.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "ab_step",
            left: initial.a.shape(),
            right: prev.a.shape(),
        }
        .into());
    }
    let k = prev.k + 1;
    let (a1, b1) = (&initial.a, &initial.b);

    let needs_a1b = !matches!(form, StepForm::Swapped);
    let needs_b1a = matches!(
        form,
        StepForm::MixedA | StepForm::MixedB | StepForm::Swapped
    );
    let lu_a1b = needs_a1b.then(|| factor_sum(a1, &prev.b, k)).transpose()?;
    let lu_b1a = needs_b1a.then(|| factor_sum(b1, &prev.a, k)).transpose()?;

    let a_lu = match form {
        StepForm::MixedA | StepForm::Swapped => lu_b1a.as_ref(),
        _ => lu_a1b.as_ref(),
    }
    .expect("factorization for A half");
    let a_next = a1 * &a_lu.solve(&prev.a)?;

    let b_next = match form {
        StepForm::Shortcut => &(&a_next + b1) - a1,
        StepForm::Direct | StepForm::MixedA => {
            let lu = lu_a1b.as_ref().expect("A1+B factorization");
            &prev.b * &lu.solve(b1)?
        }
        StepForm::MixedB | StepForm::Swapped => {
            let lu = lu_b1a.as_ref().expect("B1+A factorization");
            &prev.b * &lu.solve(b1)?
        }
    };

    Ok(AbIterate {
        a: a_next,
        b: b_next,
        k,
    })
}

/// Flow composition: `A_{i+j} = A_i (A_i+B_j)^{-1} A_j`,
/// `B_{i+j} = B_j (A_i+B_j)^{-1} B_i`.
pub fn combine(it_i: &AbIterate, it_j: &AbIterate) -> Result<AbIterate, PencilError> {
    if it_i.a.shape() != it_j.a.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "combine",
            left: it_i.a.shape(),
            right: it_j.a.shape(),
        }
        .into());
    }
    let k = it_i.k + it_j.k;
    let lu = factor_sum(&it_i.a, &it_j.b, k)?;
    let a = &it_i.a * &lu.solve(&it_j.a)?;
    let b = &it_j.b * &lu.solve(&it_i.b)?;
    Ok(AbIterate { a, b, k })
}

/// Closed form of the flow for `B_1 = I`:
/// `B_k = (sum_{j<k} A_1^j)^{-1}`, `A_k = A_1^k B_k`.
pub fn closed_form_iterate(a1: &ComplexMatrix, k: usize) -> Result<AbIterate, PencilError> {
    if k == 0 {
        return Err(PencilError::InvalidIndex(0));
    }
    if !a1.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a1.rows(),
            cols: a1.cols(),
        }
        .into());
    }
    let n = a1.rows();
    if k == 1 {
        return Ok(AbIterate {
            a: a1.clone(),
            b: ComplexMatrix::identity(n),
            k: 1,
        });
    }
    let sum = crate::numerics::matrix_power_sum(a1, k);
    let lu = LuFactorization::new(&sum)?;
    let b = lu.solve(&ComplexMatrix::identity(n))?;
    // A_1^k commutes with the power sum, so right or left division agree
    let a = lu.solve_right(&a1.powi(k as u32))?;
    Ok(AbIterate { a, b, k })
}

/// Iterator over `(A_1, B_1), (A_2, B_2), ...`. Stops after the first
/// error, which it yields.
pub struct AbChain<'a> {
    initial: &'a Pencil,
    form: StepForm,
    current: Option<AbIterate>,
    failed: bool,
}

impl<'a> AbChain<'a> {
    pub fn new(initial: &'a Pencil) -> Self {
        Self::with_form(initial, StepForm::Shortcut)
    }

    pub fn with_form(initial: &'a Pencil, form: StepForm) -> Self {
        Self {
            initial,
            form,
            current: None,
            failed: false,
        }
    }
}

impl Iterator for AbChain<'_> {
    type Item = Result<AbIterate, PencilError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let next = match &self.current {
            None => Ok(AbIterate::initial(self.initial)),
            Some(prev) => ab_step_with(self.initial, prev, self.form),
        };
        match next {
            Ok(it) => {
                self.current = Some(it.clone());
                Some(Ok(it))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}
