//! Gaussian elimination with partial pivoting.
//!
//! Every `(A_i + B_j)^{-1} X` in the crate goes through [`LuFactorization`];
//! no explicit inverse is ever formed.

use super::matrix::{ComplexMatrix, C64};
use super::LinalgError;

/// `P A = L U` with unit lower `L` and upper `U` packed in one matrix.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    lu: ComplexMatrix,
    /// Row `i` of `P A` is row `perm[i]` of `A`.
    perm: Vec<usize>,
    growth: f64,
}

impl LuFactorization {
    /// Factors `a`, declaring it singular when a pivot modulus falls to
    /// `n * eps * max|a_ij|` or below.
    pub fn new(a: &ComplexMatrix) -> Result<Self, LinalgError> {
        Self::with_scale(a, a.max_abs())
    }

    /// Factors `a` with the singularity cutoff `n * eps * scale`.
    ///
    /// Callers that form `a` as a sum of larger operands pass the operands'
    /// magnitude here, so cancellation in the sum is judged against the
    /// scale the rounding error actually lives on.
    pub fn with_scale(a: &ComplexMatrix, scale: f64) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let threshold = n as f64 * f64::EPSILON * scale.max(a.max_abs());
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pmax <= threshold {
                return Err(LinalgError::SingularMatrix {
                    pivot_index: k,
                    pivot_magnitude: pmax,
                    threshold,
                });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                if l == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= l * u;
                }
            }
        }

        let amax = a.max_abs();
        let umax = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .map(|(i, j)| lu[(i, j)].norm())
            .fold(0.0, f64::max);
        let growth = if amax > 0.0 { umax / amax } else { 0.0 };

        Ok(Self { lu, perm, growth })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// `max|U| / max|A|`.
    pub fn growth(&self) -> f64 {
        self.growth
    }

    /// `||A^{-1}||_1`, from solving against the identity.
    pub fn inverse_norm_one(&self) -> Result<f64, LinalgError> {
        Ok(self.solve(&ComplexMatrix::identity(self.dim()))?.norm_one())
    }

    /// Packed factors: strict lower part is `L`, upper part is `U`.
    pub fn factors(&self) -> &ComplexMatrix {
        &self.lu
    }

    /// Solves `A X = rhs`.
    pub fn solve(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        let n = self.dim();
        if rhs.rows() != n {
            return Err(LinalgError::DimensionMismatch {
                op: "lu_solve",
                left: (n, n),
                right: rhs.shape(),
            });
        }
        let m = rhs.cols();
        let mut x = ComplexMatrix::zeros(n, m);
        for i in 0..n {
            for j in 0..m {
                x[(i, j)] = rhs[(self.perm[i], j)];
            }
        }
        // L y = P b
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                if l == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..m {
                    let y = x[(k, j)];
                    x[(i, j)] -= l * y;
                }
            }
        }
        // U x = y
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                if u == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..m {
                    let y = x[(k, j)];
                    x[(i, j)] -= u * y;
                }
            }
            let d = self.lu[(i, i)];
            for j in 0..m {
                x[(i, j)] /= d;
            }
        }
        Ok(x)
    }

    /// Solves `X A = rhs`, i.e. returns `rhs * A^{-1}`.
    pub fn solve_right(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        let n = self.dim();
        if rhs.cols() != n {
            return Err(LinalgError::DimensionMismatch {
                op: "solve_right",
                left: rhs.shape(),
                right: (n, n),
            });
        }
        let mut x = ComplexMatrix::zeros(rhs.rows(), n);
        let mut v = vec![C64::new(0.0, 0.0); n];
        for r in 0..rhs.rows() {
            // v U = row
            for j in 0..n {
                let s = (0..j).fold(rhs[(r, j)], |s, i| s - v[i] * self.lu[(i, j)]);
                v[j] = s / self.lu[(j, j)];
            }
            // w L = v, unit diagonal, in place
            for j in (0..n).rev() {
                v[j] = (j + 1..n).fold(v[j], |s, i| s - v[i] * self.lu[(i, j)]);
            }
            // x P^T = w
            for i in 0..n {
                x[(r, self.perm[i])] = v[i];
            }
        }
        Ok(x)
    }
}

/// Solves `A X = rhs` by partial-pivoting LU.
pub fn lu_solve(a: &ComplexMatrix, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    LuFactorization::new(a)?.solve(rhs)
}

/// Returns `rhs * A^{-1}` by partial-pivoting LU.
pub fn solve_right(a: &ComplexMatrix, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    LuFactorization::new(a)?.solve_right(rhs)
}
