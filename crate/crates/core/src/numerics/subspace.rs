//! Orthonormal bases, near-null spaces and subspace distance.

use super::matrix::{ComplexMatrix, C64};
use super::svd::{induced_norm2, JacobiSvd};
use super::LinalgError;

/// Relative singular-value cutoff used for near-null spaces unless a caller
/// supplies its own.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Orthonormal basis of a subspace of `C^n`, stored as the columns of an
/// `n x m` matrix. `m = 0` is the zero subspace.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    basis: ComplexMatrix,
    /// Singular values that drove the rank decision (all of them, largest
    /// first); empty when the basis was not produced by a rank decision.
    singular_values: Vec<f64>,
}

impl SubspaceBasis {
    /// Wraps columns that are already orthonormal.
    pub fn from_orthonormal(basis: ComplexMatrix) -> Self {
        Self {
            basis,
            singular_values: Vec::new(),
        }
    }

    /// Orthonormalizes the columns of `m` (Gram-Schmidt with one round of
    /// reorthogonalization). Fails if the columns are numerically dependent.
    pub fn orthonormalize(m: &ComplexMatrix) -> Result<Self, LinalgError> {
        let (q, _) = gram_schmidt(m)?;
        Ok(Self::from_orthonormal(q))
    }

    pub fn empty(ambient: usize) -> Self {
        Self::from_orthonormal(ComplexMatrix::zeros(ambient, 0))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Orthogonal projector `U U^H`.
    pub fn projector(&self) -> ComplexMatrix {
        &self.basis * &self.basis.adjoint()
    }

    /// `||U^H U - I||_F`.
    pub fn orthonormality_defect(&self) -> f64 {
        (&(&self.basis.adjoint() * &self.basis) - &ComplexMatrix::identity(self.dim())).norm_fro()
    }
}

/// QR by classical Gram-Schmidt with reorthogonalization ("twice is enough").
/// Returns `(Q, R)` with `m = Q R`.
pub fn gram_schmidt(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix), LinalgError> {
    let (rows, cols) = m.shape();
    let scale = m.norm_fro();
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(cols);
    let mut r = ComplexMatrix::zeros(cols, cols);
    for j in 0..cols {
        let mut v = m.column(j);
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let h: C64 = qi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                r[(i, j)] += h;
                for (vk, qk) in v.iter_mut().zip(qi) {
                    *vk -= h * qk;
                }
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm <= 1e3 * f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
            return Err(LinalgError::RankDeficient { column: j });
        }
        r[(j, j)] = C64::new(nrm, 0.0);
        for vk in v.iter_mut() {
            *vk /= nrm;
        }
        q.push(v);
    }
    Ok((ComplexMatrix::from_columns(rows, &q), r))
}

/// Right near-null space of `a`: right singular vectors whose singular
/// values fall below `rank_tol * sigma_max`. A zero matrix has the whole
/// space as its null space.
pub fn null_space_basis(a: &ComplexMatrix, rank_tol: f64) -> SubspaceBasis {
    assert!(rank_tol > 0.0, "rank_tol must be positive");
    let svd = square_up_svd(a);
    let smax = svd.sigma_max();
    let cutoff = rank_tol * smax;
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&j| smax == 0.0 || svd.singular_values[j] < cutoff)
        .collect();
    collect_right_vectors(&svd, &keep)
}

/// The `m` right singular directions with the smallest singular values,
/// regardless of any threshold.
pub fn smallest_right_singular_subspace(a: &ComplexMatrix, m: usize) -> SubspaceBasis {
    let svd = square_up_svd(a);
    let n = svd.singular_values.len();
    let m = m.min(n);
    let keep: Vec<usize> = (n - m..n).collect();
    collect_right_vectors(&svd, &keep)
}

// Pads a wide matrix with zero rows so every column gets a singular value;
// this does not change the right singular structure.
fn square_up_svd(a: &ComplexMatrix) -> JacobiSvd {
    if a.rows() >= a.cols() {
        JacobiSvd::compute(a)
    } else {
        let mut padded = ComplexMatrix::zeros(a.cols(), a.cols());
        padded.set_block(0, 0, a);
        JacobiSvd::compute(&padded)
    }
}

fn collect_right_vectors(svd: &JacobiSvd, keep: &[usize]) -> SubspaceBasis {
    let n = svd.v.rows();
    let cols: Vec<Vec<C64>> = keep.iter().map(|&j| svd.v.column(j)).collect();
    SubspaceBasis {
        basis: ComplexMatrix::from_columns(n, &cols),
        singular_values: svd.singular_values.clone(),
    }
}

/// `||P_U - P_V||_2`, the sine of the largest principal angle when the
/// dimensions agree. Subspaces of different dimension are at distance 1.
pub fn subspace_distance(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<f64, LinalgError> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(LinalgError::DimensionMismatch {
            op: "subspace_distance",
            left: u.matrix().shape(),
            right: v.matrix().shape(),
        });
    }
    if u.dim() != v.dim() {
        return Ok(1.0);
    }
    if u.dim() == 0 {
        return Ok(0.0);
    }
    // ||(I - P_U) V||_2 avoids the cancellation in sqrt(1 - cos^2)
    let uhv = &u.matrix().adjoint() * v.matrix();
    let resid = v.matrix() - &(u.matrix() * &uhv);
    Ok(induced_norm2(&resid).min(1.0))
}

/// Least-squares solution of `m X = rhs` for full-column-rank `m`, via the
/// thin SVD of `m`.
pub fn least_squares(m: &ComplexMatrix, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if m.rows() != rhs.rows() {
        return Err(LinalgError::DimensionMismatch {
            op: "least_squares",
            left: m.shape(),
            right: rhs.shape(),
        });
    }
    if m.rows() < m.cols() {
        return Err(LinalgError::RankDeficient { column: m.rows() });
    }
    let svd = JacobiSvd::compute(m);
    let smax = svd.sigma_max();
    let k = m.cols();
    // X = V diag(1/sigma^2) (AV)^H rhs, since AV = U diag(sigma)
    let mut coeff = &svd.av.adjoint() * rhs;
    for j in 0..k {
        let s = svd.singular_values[j];
        if s <= smax * f64::EPSILON * m.rows() as f64 || s == 0.0 {
            return Err(LinalgError::RankDeficient { column: j });
        }
        let inv = 1.0 / (s * s);
        for c in 0..coeff.cols() {
            coeff[(j, c)] *= inv;
        }
    }
    Ok(&svd.v * &coeff)
}

/// `sum_{j=0}^{k-1} A^j` by Horner accumulation (`S <- I + A S`).
pub fn matrix_power_sum(a: &ComplexMatrix, k: usize) -> ComplexMatrix {
    assert!(a.is_square(), "matrix_power_sum needs a square matrix");
    assert!(k >= 1, "matrix_power_sum needs k >= 1");
    let id = ComplexMatrix::identity(a.rows());
    let mut s = id.clone();
    for _ in 1..k {
        s = &id + &(a * &s);
    }
    s
}

/// Upper bound on the spectral radius from `||M^(2^s)||_2^(1/2^s)`,
/// renormalizing at each squaring. Converges to `rho(M)` from above.
pub fn spectral_radius_estimate(m: &ComplexMatrix, squarings: u32) -> f64 {
    assert!(m.is_square());
    let mut log_scale = 0.0f64;
    let mut p = m.clone();
    let mut exp = 1.0f64;
    for _ in 0..squarings {
        let nrm = p.norm_fro();
        if nrm == 0.0 {
            return 0.0;
        }
        p = p.scale_real(1.0 / nrm);
        log_scale += nrm.ln() / exp;
        p = &p * &p;
        exp *= 2.0;
    }
    let nrm = induced_norm2(&p);
    if nrm == 0.0 {
        return 0.0;
    }
    (log_scale + nrm.ln() / exp).exp()
}
