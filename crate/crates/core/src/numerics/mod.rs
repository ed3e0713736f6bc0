//! Dense complex linear algebra kernels.

mod lu;
mod matrix;
mod subspace;
mod svd;

use thiserror::Error;

pub use lu::{lu_solve, solve_right, LuFactorization};
pub use matrix::{ComplexMatrix, C64};
pub use subspace::{
    gram_schmidt, least_squares, matrix_power_sum, null_space_basis,
    smallest_right_singular_subspace, spectral_radius_estimate, subspace_distance, SubspaceBasis,
    DEFAULT_RANK_TOL,
};
pub use svd::{induced_norm2, JacobiSvd};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("expected {expected} entries, got {actual}")]
    DataLength { expected: usize, actual: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error(
        "singular matrix: pivot {pivot_index} has modulus {pivot_magnitude:e} <= {threshold:e}"
    )]
    SingularMatrix {
        pivot_index: usize,
        pivot_magnitude: f64,
        threshold: f64,
    },
    #[error("columns are numerically dependent at column {column}")]
    RankDeficient { column: usize },
}
