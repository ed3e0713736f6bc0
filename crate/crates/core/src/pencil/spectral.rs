//! Scalar eigenvalue bookkeeping for the flow: where eigenvalues move and
//! when the iteration must break down.

use std::f64::consts::PI;

use crate::numerics::C64;

use super::PencilError;

/// A point of the extended complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtComplex {
    Finite(C64),
    Infinity,
}

impl ExtComplex {
    pub fn finite(self) -> Option<C64> {
        match self {
            ExtComplex::Finite(z) => Some(z),
            ExtComplex::Infinity => None,
        }
    }
}

impl From<C64> for ExtComplex {
    fn from(z: C64) -> Self {
        ExtComplex::Finite(z)
    }
}

// sum_{s=0}^{count-1} z^s, together with sum |z|^s for scaling
fn geometric_sum(z: C64, count: usize) -> (C64, f64) {
    let mut term = C64::new(1.0, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    for _ in 0..count {
        sum += term;
        abs_sum += term.norm();
        term *= z;
    }
    (sum, abs_sum)
}

/// Eigenvalue of `A_i - lambda B_k` that descends from the eigenvalue
/// `lambda` of the initial pencil:
/// `lambda^i * (sum_{s<k} lambda^s) / (sum_{s<i} lambda^s)`.
///
/// At `lambda = 1` this is `k / i`. Fails when the denominator sum
/// vanishes, i.e. `lambda` is a nontrivial root of unity of order dividing `i`.
pub fn eigenvalue_map(lambda: ExtComplex, i: usize, k: usize) -> Result<ExtComplex, PencilError> {
    if i == 0 || k == 0 {
        return Err(PencilError::InvalidIndex(0));
    }
    let z = match lambda {
        ExtComplex::Infinity => return Ok(ExtComplex::Infinity),
        ExtComplex::Finite(z) => z,
    };
    let (num, _) = geometric_sum(z, k);
    let (den, den_scale) = geometric_sum(z, i);
    if den.norm() <= 1e-14 * den_scale {
        return Err(PencilError::PoleEncountered { i });
    }
    Ok(ExtComplex::Finite(z.powu(i as u32) * num / den))
}

/// Default distance at which an eigenvalue counts as a root of unity.
pub const ROOT_OF_UNITY_TOL: f64 = 1e-9;

/// Smallest `k <= kmax` with `S_k` (nontrivial `p`-th roots of unity for
/// `2 <= p <= k+1`) meeting the given eigenvalues, within
/// [`ROOT_OF_UNITY_TOL`].
///
/// A hit at `k` means the sum `A_1 + B_k` is singular, so computing the
/// iterate of index `k + 1` breaks down.
pub fn breakdown_check(eigenvalues: &[C64], kmax: usize) -> Option<usize> {
    breakdown_check_tol(eigenvalues, kmax, ROOT_OF_UNITY_TOL)
}

pub fn breakdown_check_tol(eigenvalues: &[C64], kmax: usize, tol: f64) -> Option<usize> {
    (1..=kmax).find(|&k| {
        let p_max = k + 1;
        eigenvalues.iter().any(|&lambda| {
            (1..p_max).any(|q| {
                let root = C64::from_polar(1.0, 2.0 * PI * q as f64 / p_max as f64);
                (lambda - root).norm() <= tol
            })
        })
    })
}
