use alloc::vec::Vec;

use super::Matrix;
use crate::error::{Error, Result};
use crate::math;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Matrix,
}

impl Cholesky {
    pub fn new(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::invalid("matrix", "Cholesky needs a square matrix"));
        }
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            {
                let lj = l.row(j);
                for k in 0..j {
                    d -= lj[k] * lj[k];
                }
            }
            if d.is_nan() || d <= 0.0 {
                return Err(Error::NotPositive { pivot: j, value: d });
            }
            let d = math::sqrt(d);
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                let (li, lj) = (l.row(i), l.row(j));
                for k in 0..j {
                    s -= li[k] * lj[k];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Cholesky { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let l = &self.lower;
        let mut y: Vec<f64> = b.to_vec();
        // Leading zeros of `b` stay zero in the forward sweep.
        let start = y.iter().position(|v| *v != 0.0).unwrap_or(n);
        for i in start..n {
            let li = l.row(i);
            let mut s = y[i];
            for k in start..i {
                s -= li[k] * y[k];
            }
            y[i] = s / li[i];
        }
        // `L^T x = y` swept by rows of `L`, which are contiguous.
        for i in (0..n).rev() {
            let li = l.row(i);
            let xi = y[i] / li[i];
            y[i] = xi;
            for k in 0..i {
                y[k] -= li[k] * xi;
            }
        }
        y
    }

    /// Solve for several right-hand sides given as the columns of `b`.
    pub fn solve_columns(&self, b: &Matrix) -> Matrix {
        let n = self.dim();
        assert_eq!(b.rows(), n);
        let mut out = Matrix::zeros(n, b.cols());
        let mut col = alloc::vec![0.0; n];
        for j in 0..b.cols() {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            let x = self.solve(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    pub fn inverse(&self) -> Matrix {
        let inv = self.solve_columns(&Matrix::identity(self.dim()));
        // Symmetrize away rounding so downstream symmetry checks see exact symmetry.
        Matrix::from_fn(inv.rows(), inv.cols(), |i, j| 0.5 * (inv[(i, j)] + inv[(j, i)]))
    }
}
