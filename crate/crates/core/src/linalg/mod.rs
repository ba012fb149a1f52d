//! Small dense linear algebra: row-major matrices, Cholesky, and symmetric
//! eigensolvers (Householder reduction followed by implicit QL).

mod cholesky;
mod eigen;
mod matrix;

pub use cholesky::Cholesky;
pub use eigen::{symmetric_eigen, symmetric_eigenvalues, tridiagonal_eigen, TridiagonalEigen};
pub use matrix::Matrix;
