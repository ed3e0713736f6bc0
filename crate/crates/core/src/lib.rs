//! Doubling-type AB iteration for stable deflating subspaces, its order-`r`
//! acceleration, and the principal matrix square root built on it.
//!
//! ```
//! use abflow::msqrt::{sqrtm_ab, SqrtProblem};
//! use abflow::numerics::ComplexMatrix;
//!
//! let s = ComplexMatrix::from_real_rows(&[[33.0, 24.0], [48.0, 57.0]]);
//! let res = sqrtm_ab(&SqrtProblem::new(s).order(3)).unwrap();
//! let x = ComplexMatrix::from_real_rows(&[[5.0, 2.0], [4.0, 7.0]]);
//! assert!(res.x.rel_diff(&x) < 1e-10);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accel;
pub mod lab;
pub mod msqrt;
pub mod numerics;
pub mod pencil;

pub use numerics::{ComplexMatrix, C64};
pub use pencil::{Pencil, Status};
