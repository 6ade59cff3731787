//! Sparse and small dense linear algebra.

mod bicgstab;
mod dense;
mod expm;
mod ilu;
mod sparse;

pub use bicgstab::{bicgstab, bicgstab_ilu0, LinearSolveReport, LinearSolver};
pub use dense::DenseMatrix;
pub use expm::{dense_expm, dense_phi, dense_phi_vec, phi_scalar};
pub use ilu::Ilu0;
pub use sparse::{gershgorin_interval, spmv, CsrMatrix};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("malformed sparse structure: {0}")]
    Structure(String),
    #[error("non-finite matrix entries")]
    NonFinite,
    #[error("singular matrix")]
    Singular,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
}
