//! Minimal dense and sparse linear algebra: exactly what the solver and the
//! reduction need, nothing more. Everything is deterministic; iteration
//! orders are fixed so repeated runs produce bit-identical results.

mod cg;
mod dense;
mod eigen;
mod ldl;
mod sparse;

pub use cg::conjugate_gradient;
pub use dense::{
    csr_congruence_symmetric, csr_times_dense, csr_times_dense_prefix, lu_solve,
    transpose_prefix_times, transpose_prefix_times_symmetric, transpose_times, DenseMat,
};
pub use eigen::symmetric_eigen;
pub use ldl::LdlFactorization;
pub use sparse::{CsrMatrix, Triplets};

use core::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum LinalgError {
    /// An LDL^T pivot came out non-positive: the matrix is not positive definite.
    NotPositiveDefinite { index: usize, pivot: f64 },
    /// Zero pivot during dense LU elimination.
    Singular { index: usize },
    /// Iterative solver did not reach the requested tolerance.
    NoConvergence { iterations: usize, residual: f64 },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NotPositiveDefinite { index, pivot } => write!(
                f,
                "matrix is not positive definite: pivot {pivot:e} at index {index}"
            ),
            LinalgError::Singular { index } => {
                write!(f, "matrix is singular: zero pivot at index {index}")
            }
            LinalgError::NoConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "iterative solver stalled after {iterations} iterations (residual {residual:e})"
            ),
        }
    }
}

impl core::error::Error for LinalgError {}
