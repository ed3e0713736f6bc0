//! One-sided (Hestenes) Jacobi singular value decomposition.
//!
//! Column pairs of a working copy of `A` are rotated until mutually
//! orthogonal; the accumulated rotations give the right singular vectors.
//! The sweep order is fixed, so the output is a deterministic function of
//! the input. Small singular values come out with high relative accuracy,
//! which is what the near-null-space extraction relies on.

use super::matrix::{ComplexMatrix, C64};

const MAX_SWEEPS: usize = 80;

/// Thin SVD data: `A V = W` where the columns of `W` are `sigma_j u_j`.
#[derive(Clone, Debug)]
pub struct JacobiSvd {
    /// Singular values in non-increasing order (one per column of `A`).
    pub singular_values: Vec<f64>,
    /// Right singular vectors, `cols x cols`, columns ordered like
    /// `singular_values`.
    pub v: ComplexMatrix,
    /// `A V`, `rows x cols`.
    pub av: ComplexMatrix,
}

impl JacobiSvd {
    pub fn compute(a: &ComplexMatrix) -> Self {
        let (m, n) = a.shape();
        // column-major working storage for cache-friendly column sweeps
        let mut w: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
        let mut v: Vec<Vec<C64>> = (0..n)
            .map(|j| {
                let mut e = vec![C64::new(0.0, 0.0); n];
                e[j] = C64::new(1.0, 0.0);
                e
            })
            .collect();

        let tol = f64::EPSILON * (m.max(1) as f64).sqrt();
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha: f64 = w[p].iter().map(|z| z.norm_sqr()).sum();
                    let beta: f64 = w[q].iter().map(|z| z.norm_sqr()).sum();
                    let gamma: C64 = w[p].iter().zip(&w[q]).map(|(x, y)| x.conj() * y).sum();
                    let g = gamma.norm();
                    if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let phase = gamma / g; // e^{i phi}
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    let ph = phase.conj();
                    rotate(&mut w, p, q, c, s, ph);
                    rotate(&mut v, p, q, c, s, ph);
                }
            }
            if !rotated {
                break;
            }
        }

        let norms: Vec<f64> = w
            .iter()
            .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        // stable sort keeps ties in column order, preserving determinism
        order.sort_by(|&i, &j| {
            norms[j]
                .partial_cmp(&norms[i])
                .unwrap_or(std::cmp::Ordering::Equal)
        });

        let singular_values = order.iter().map(|&j| norms[j]).collect();
        let v_sorted: Vec<Vec<C64>> = order.iter().map(|&j| v[j].clone()).collect();
        let w_sorted: Vec<Vec<C64>> = order.iter().map(|&j| w[j].clone()).collect();
        Self {
            singular_values,
            v: ComplexMatrix::from_columns(n, &v_sorted),
            av: ComplexMatrix::from_columns(m, &w_sorted),
        }
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Left singular vector `j` (`A v_j / sigma_j`); `None` for a zero
    /// singular value.
    pub fn left_vector(&self, j: usize) -> Option<Vec<C64>> {
        let s = self.singular_values[j];
        (s > 0.0).then(|| self.av.column(j).into_iter().map(|z| z / s).collect())
    }
}

// [x, y] <- [c x - s e^{-i phi} y, s x + c e^{-i phi} y]
fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, ph: C64) {
    let (left, right) = cols.split_at_mut(q);
    let x = &mut left[p];
    let y = &mut right[0];
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let yt = ph * *yi;
        let nx = *xi * c - yt * s;
        let ny = *xi * s + yt * c;
        *xi = nx;
        *yi = ny;
    }
}

/// Largest singular value of `a`.
pub fn induced_norm2(a: &ComplexMatrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    // Jacobi on the narrower side
    if a.cols() > a.rows() {
        JacobiSvd::compute(&a.adjoint()).sigma_max()
    } else {
        JacobiSvd::compute(a).sigma_max()
    }
}
