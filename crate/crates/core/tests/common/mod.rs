#![allow(dead_code)]

use abflow::lab::{make_pencil_problem, PencilProblem, ProblemSpec, Similarity, SpectrumEntry};
use abflow::numerics::{ComplexMatrix, C64};
use abflow::pencil::Pencil;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let data = (0..rows * cols)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    ComplexMatrix::new(rows, cols, data).unwrap()
}

/// Diagonally dominant, hence comfortably nonsingular.
pub fn well_conditioned(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    random_matrix(n, n, rng).add_scalar_identity(C64::new(2.0 * n as f64, 0.0))
}

pub fn random_in_disc(radius: f64, rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(
        radius * rng.gen_range(0.0f64..1.0).sqrt(),
        rng.gen_range(0.0..std::f64::consts::TAU),
    )
}

/// Pencil with every eigenvalue inside `|z| < rho`, a random similarity of
/// condition `cond` and random left mixing.
pub fn stable_pencil(n: usize, rho: f64, cond: f64, seed: u64) -> Pencil {
    let mut r = rng(seed ^ 0x5eed);
    let spectrum = (0..n)
        .map(|_| SpectrumEntry::simple(random_in_disc(rho, &mut r)))
        .collect();
    let spec = ProblemSpec::new(spectrum, seed)
        .with_similarity(Similarity::Random { condition: cond })
        .with_mixing(true);
    make_pencil_problem(&spec).unwrap().pencil
}

/// `m` eigenvalues inside `|z| <= rho_s`, the rest outside `|z| >= rho_u`.
pub fn split_problem(
    n: usize,
    m: usize,
    rho_s: f64,
    rho_u: f64,
    mix: bool,
    seed: u64,
) -> PencilProblem {
    let mut r = rng(seed ^ 0xab);
    let spectrum = (0..n)
        .map(|j| {
            let z = if j < m {
                random_in_disc(rho_s, &mut r)
            } else {
                C64::from_polar(
                    rho_u * r.gen_range(1.0..3.0),
                    r.gen_range(0.0..std::f64::consts::TAU),
                )
            };
            SpectrumEntry::simple(z)
        })
        .collect();
    let spec = ProblemSpec::new(spectrum, seed).with_mixing(mix);
    make_pencil_problem(&spec).unwrap()
}
