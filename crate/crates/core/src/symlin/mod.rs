//! Dense symmetric-matrix linear algebra.
//!
//! Everything here is small and dense: problems of interest have `n` in the
//! single digits, so the routines favour accuracy and simplicity over speed.

mod eigen;
mod lu;
mod mat;
mod skron;
mod svd;
mod sym;

pub use eigen::{eig, EigDecomp};
pub use lu::{cholesky, Cholesky, Lu};
pub use mat::{dot, norm2, Mat};
pub use skron::{skron, skron_general};
pub use svd::{numerical_rank, svd, DenseView, Svd};
pub use sym::{smat, smat_slice, svec, tau, tau_inverse, SVec, SymMat};

use thiserror::Error;

/// Default relative tolerance used for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymlinError {
    #[error("vector of length {len} is not the svec of any symmetric matrix")]
    LengthNotTriangular { len: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("iteration did not converge within {iterations} sweeps")]
    ConvergenceFailure { iterations: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}
