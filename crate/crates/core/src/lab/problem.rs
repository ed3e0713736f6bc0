//! Seeded problems with known answers.
//!
//! Randomness comes from ChaCha8 seeded through `seed_from_u64`, so a
//! [`ProblemSpec`] maps to the same matrices on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::{gram_schmidt, ComplexMatrix, SubspaceBasis, C64};
use crate::pencil::{breakdown_check_tol, Pencil, ROOT_OF_UNITY_TOL};

use super::LabError;

/// Largest root-of-unity order recognised when tagging breakdowns.
const MAX_ROOT_ORDER: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub value: C64,
    pub multiplicity: usize,
    /// `false` puts the copies in a single Jordan block.
    pub semisimple: bool,
}

impl SpectrumEntry {
    pub fn simple(value: C64) -> Self {
        Self {
            value,
            multiplicity: 1,
            semisimple: true,
        }
    }

    pub fn real(x: f64) -> Self {
        Self::simple(C64::new(x, 0.0))
    }
}

/// How the diagonal form is conjugated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Similarity {
    Identity,
    /// `P = Q_1 diag(s) Q_2` with random unitary `Q_1, Q_2` and singular
    /// values spread geometrically so that `cond_2(P) = condition`.
    Random {
        condition: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub spectrum: Vec<SpectrumEntry>,
    pub similarity: Similarity,
    pub seed: u64,
    /// Pencil problems only: replace `(A, I)` by `(M A, M)` for a random
    /// well-conditioned `M`.
    pub mix_b: bool,
}

impl ProblemSpec {
    pub fn new(spectrum: Vec<SpectrumEntry>, seed: u64) -> Self {
        Self {
            spectrum,
            similarity: Similarity::Random { condition: 10.0 },
            seed,
            mix_b: false,
        }
    }

    /// Simple real eigenvalues.
    pub fn from_values(values: &[f64], seed: u64) -> Self {
        Self::new(
            values.iter().map(|&x| SpectrumEntry::real(x)).collect(),
            seed,
        )
    }

    pub fn with_similarity(mut self, similarity: Similarity) -> Self {
        self.similarity = similarity;
        self
    }

    pub fn with_mixing(mut self, mix_b: bool) -> Self {
        self.mix_b = mix_b;
        self
    }

    pub fn dim(&self) -> usize {
        self.spectrum.iter().map(|e| e.multiplicity).sum()
    }

    fn validate_common(&self) -> Result<(), LabError> {
        if self.dim() == 0 {
            return Err(LabError::InvalidSpectrum("empty spectrum".into()));
        }
        if self.spectrum.iter().any(|e| e.multiplicity == 0) {
            return Err(LabError::InvalidSpectrum("zero multiplicity".into()));
        }
        if self
            .spectrum
            .iter()
            .any(|e| !(e.value.re.is_finite() && e.value.im.is_finite()))
        {
            return Err(LabError::InvalidSpectrum("non-finite eigenvalue".into()));
        }
        if let Similarity::Random { condition } = self.similarity {
            if !(condition >= 1.0 && condition.is_finite()) {
                return Err(LabError::InvalidSpectrum(format!(
                    "similarity condition must be >= 1, got {condition}"
                )));
            }
        }
        Ok(())
    }
}

/// Block-diagonal (Jordan) form of the given entries, in order.
fn jordan_form(entries: &[SpectrumEntry]) -> ComplexMatrix {
    let n = entries.iter().map(|e| e.multiplicity).sum();
    let mut d = ComplexMatrix::zeros(n, n);
    let mut pos = 0;
    for e in entries {
        for j in 0..e.multiplicity {
            d.set_block(pos + j, pos + j, &ComplexMatrix::scalar(1, e.value));
            if !e.semisimple && j + 1 < e.multiplicity {
                d.set_block(pos + j, pos + j + 1, &ComplexMatrix::identity(1));
            }
        }
        pos += e.multiplicity;
    }
    d
}

fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    loop {
        let data = (0..n * n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let m = ComplexMatrix::new(n, n, data).expect("finite entries");
        if let Ok((q, _)) = gram_schmidt(&m) {
            return q;
        }
    }
}

/// `(P, P^{-1})` with `P^{-1}` assembled from the factors, not by solving.
fn similarity_pair(
    n: usize,
    condition: f64,
    rng: &mut ChaCha8Rng,
) -> (ComplexMatrix, ComplexMatrix) {
    let q1 = random_unitary(n, rng);
    let q2 = random_unitary(n, rng);
    let sv: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                1.0
            } else {
                condition.powf(-(i as f64) / (n - 1) as f64)
            }
        })
        .collect();
    let inv: Vec<f64> = sv.iter().map(|s| 1.0 / s).collect();
    let p = &(&q1 * &ComplexMatrix::from_real_diag(&sv)) * &q2;
    let p_inv = &(&q2.adjoint() * &ComplexMatrix::from_real_diag(&inv)) * &q1.adjoint();
    (p, p_inv)
}

fn conjugate(
    d: &ComplexMatrix,
    similarity: Similarity,
    rng: &mut ChaCha8Rng,
) -> (ComplexMatrix, ComplexMatrix) {
    match similarity {
        Similarity::Identity => (d.clone(), ComplexMatrix::identity(d.rows())),
        Similarity::Random { condition } => {
            let (p, p_inv) = similarity_pair(d.rows(), condition, rng);
            (&(&p * d) * &p_inv, p)
        }
    }
}

/// Square root test case: `S = X^2` with `X = P J P^{-1}` and the spectrum
/// of `J` as requested.
#[derive(Clone, Debug)]
pub struct KnownSqrt {
    pub s: ComplexMatrix,
    pub x_true: ComplexMatrix,
}

/// Builds `(S, X_true)`. Eigenvalues must lie in the open right half-plane,
/// or be zero with the semisimple flag set.
pub fn make_known_sqrt_problem(spec: &ProblemSpec) -> Result<KnownSqrt, LabError> {
    spec.validate_common()?;
    for e in &spec.spectrum {
        let z = e.value;
        if z == C64::new(0.0, 0.0) {
            if !e.semisimple && e.multiplicity > 1 {
                return Err(LabError::InvalidSpectrum(
                    "zero eigenvalue must be semisimple".into(),
                ));
            }
        } else if z.re <= 0.0 {
            return Err(LabError::InvalidSpectrum(format!(
                "eigenvalue {z} is not in the open right half-plane"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (x_true, _) = conjugate(&jordan_form(&spec.spectrum), spec.similarity, &mut rng);
    let s = &x_true * &x_true;
    Ok(KnownSqrt { s, x_true })
}

/// Pencil with known stable deflating subspace.
#[derive(Clone, Debug)]
pub struct PencilProblem {
    pub pencil: Pencil,
    /// Orthonormal basis of the stable subspace (`|lambda| < 1`).
    pub u_true: SubspaceBasis,
    /// `A U = B U Lambda` on `u_true`.
    pub lambda_true: ComplexMatrix,
    /// For spectra containing nontrivial roots of unity: the smallest `k`
    /// whose set `S_k` is hit, so the iterate of index `k + 1` cannot be
    /// formed.
    pub expected_breakdown: Option<usize>,
}

/// Builds `A = P diag(Lambda_s, Lambda_u) P^{-1}`, `B = I` (or both mixed
/// from the left). Unit-circle eigenvalues are rejected unless they are
/// nontrivial roots of unity, which are kept and tagged.
pub fn make_pencil_problem(spec: &ProblemSpec) -> Result<PencilProblem, LabError> {
    spec.validate_common()?;
    let mut expected: Option<usize> = None;
    for e in &spec.spectrum {
        let z = e.value;
        if (z.norm() - 1.0).abs() <= ROOT_OF_UNITY_TOL {
            match breakdown_check_tol(&[z], MAX_ROOT_ORDER - 1, ROOT_OF_UNITY_TOL) {
                Some(k) => expected = Some(expected.map_or(k, |prev| prev.min(k))),
                None => {
                    return Err(LabError::InvalidSpectrum(format!(
                        "eigenvalue {z} lies on the unit circle"
                    )))
                }
            }
        }
    }

    let mut ordered: Vec<SpectrumEntry> = spec
        .spectrum
        .iter()
        .copied()
        .filter(|e| e.value.norm() < 1.0)
        .collect();
    let m: usize = ordered.iter().map(|e| e.multiplicity).sum();
    ordered.extend(
        spec.spectrum
            .iter()
            .copied()
            .filter(|e| e.value.norm() >= 1.0),
    );
    let n = spec.dim();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (a0, p) = conjugate(&jordan_form(&ordered), spec.similarity, &mut rng);
    let (u_true, lambda_true) = if m == 0 {
        (SubspaceBasis::empty(n), ComplexMatrix::zeros(0, 0))
    } else {
        let u = SubspaceBasis::orthonormalize(&p.leading_columns(m))?;
        let lambda = &(&u.matrix().adjoint() * &a0) * u.matrix();
        (u, lambda)
    };
    let pencil = if spec.mix_b {
        let (mix, _) = similarity_pair(n, 4.0, &mut rng);
        Pencil::new(&mix * &a0, mix)
    } else {
        Pencil::standard(a0)
    }
    .map_err(|e| LabError::InvalidSpectrum(e.to_string()))?;
    Ok(PencilProblem {
        pencil,
        u_true,
        lambda_true,
        expected_breakdown: expected,
    })
}
