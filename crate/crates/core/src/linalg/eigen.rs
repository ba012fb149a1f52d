//! Symmetric eigensolvers.
//!
//! Dense matrices are reduced to tridiagonal form by Householder reflections
//! and then diagonalized by the implicit QL algorithm. For tridiagonal input
//! the QL rotations can be accumulated into an arbitrary subset of rows of
//! the eigenvector matrix, which keeps large radial problems at `O(n^2)`
//! when only a handful of node values are needed.

use alloc::vec;
use alloc::vec::Vec;

use super::Matrix;
use crate::error::{Error, Result};
use crate::math;

const MAX_QL_ITERATIONS: usize = 60;

/// Eigenvalues (ascending) and the selected rows of the eigenvector matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    pub eigenvalues: Vec<f64>,
    /// Row indices of the eigenvector matrix that were accumulated.
    pub rows: Vec<usize>,
    /// `rows.len() x n`, entry `(k, j)` is component `rows[k]` of eigenvector `j`.
    pub vectors: Matrix,
}

/// Rows of the eigenvector matrix stored column by column so that a QL
/// rotation touches two contiguous slices.
struct ColumnBlock {
    rows: usize,
    data: Vec<f64>,
}

impl ColumnBlock {
    fn from_row_selection(n: usize, rows: &[usize]) -> Self {
        let k = rows.len();
        let mut data = vec![0.0; k * n];
        for (r, &row) in rows.iter().enumerate() {
            data[row * k + r] = 1.0;
        }
        ColumnBlock { rows: k, data }
    }

    #[inline]
    fn rotate(&mut self, i: usize, s: f64, c: f64) {
        let k = self.rows;
        if k == 0 {
            return;
        }
        let (left, right) = self.data.split_at_mut((i + 1) * k);
        let zi = &mut left[i * k..];
        let zi1 = &mut right[..k];
        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
            let h = *b;
            *b = s * *a + c * h;
            *a = c * *a - s * h;
        }
    }

    fn into_sorted_rows(self, order: &[usize]) -> Matrix {
        let k = self.rows;
        Matrix::from_fn(k, order.len(), |r, j| self.data[order[j] * k + r])
    }
}

/// Implicit QL on a symmetric tridiagonal matrix.
///
/// `diag` has length `n`, `off` length `n - 1` (`off[i]` couples `i` and
/// `i + 1`). Rotations are accumulated into `block`, whose initial content
/// defines the basis the eigenvectors are expressed in. Returns unsorted
/// eigenvalues.
fn tql2(diag: &[f64], off: &[f64], block: &mut ColumnBlock) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    if n <= 1 {
        return Ok(d);
    }

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(math::abs(d[l]) + math::abs(e[l]));
        let mut m = l;
        while m < n - 1 {
            if math::abs(e[m]) <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::NoConvergence {
                        index: l,
                        residual: math::abs(e[l]),
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = math::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    // Entries stay far from the overflow range, so the plain
                    // square root is safe and much cheaper than `hypot`.
                    r = math::sqrt(p * p + e[i] * e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    block.rotate(i, s, c);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if math::abs(e[l]) <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(d)
}

fn ascending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

/// Eigen-decomposition of a symmetric tridiagonal matrix, accumulating only
/// the eigenvector components listed in `rows`.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64], rows: &[usize]) -> Result<TridiagonalEigen> {
    let n = diag.len();
    if off.len() + 1 != n && !(n == 0 && off.is_empty()) {
        return Err(Error::invalid("off", "off-diagonal must have length n - 1"));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
        return Err(Error::MissingNode(bad));
    }
    let mut block = ColumnBlock::from_row_selection(n, rows);
    let values = tql2(diag, off, &mut block)?;
    let order = ascending_order(&values);
    Ok(TridiagonalEigen {
        eigenvalues: order.iter().map(|&i| values[i]).collect(),
        rows: rows.to_vec(),
        vectors: block.into_sorted_rows(&order),
    })
}

/// Householder reduction of a symmetric matrix to tridiagonal form.
///
/// Returns `(diag, off, q^T)` with `a = q T q^T`; `q^T` is only formed when
/// `accumulate` is set. The work array holds the transpose of the classic
/// column-oriented layout so that every inner loop runs along a row; since
/// `a` is symmetric the arithmetic is unchanged.
fn householder_tridiagonal(a: &Matrix, accumulate: bool) -> (Vec<f64>, Vec<f64>, Option<Matrix>) {
    let n = a.rows();
    let mut v = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        d[j] = v[(j, n - 1)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += math::abs(*dk);
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(j, i - 1)];
                v[(j, i)] = 0.0;
                v[(i, j)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = math::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(i, j)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(j, k)] * d[k];
                    e[k] += v[(j, k)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(j, k)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(j, i - 1)];
                v[(j, i)] = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for (j, dj) in d.iter_mut().enumerate() {
            *dj = v[(j, j)];
        }
        let off = if n > 0 { e[1..].to_vec() } else { Vec::new() };
        return (d, off, None);
    }
    for i in 0..n.saturating_sub(1) {
        v[(i, n - 1)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(i + 1, k)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(i + 1, k)] * v[(j, k)];
                }
                for k in 0..=i {
                    v[(j, k)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(i + 1, k)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(j, n - 1)];
        v[(j, n - 1)] = 0.0;
    }
    if n > 0 {
        v[(n - 1, n - 1)] = 1.0;
    }
    let off = if n > 0 { e[1..].to_vec() } else { Vec::new() };
    (d, off, Some(v))
}

/// Full eigen-decomposition of a dense symmetric matrix.
/// Returns ascending eigenvalues and the eigenvector matrix (columns).
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if !a.is_square() {
        return Err(Error::invalid("matrix", "eigen-decomposition needs a square matrix"));
    }
    let n = a.rows();
    let (d, off, qt) = householder_tridiagonal(a, true);
    // `data[col * n + row]` must equal q[row][col], which is q^T row-major.
    let mut block = ColumnBlock {
        rows: n,
        data: qt.expect("accumulated").as_slice().to_vec(),
    };
    let values = tql2(&d, &off, &mut block)?;
    let order = ascending_order(&values);
    let vectors = block.into_sorted_rows(&order);
    Ok((order.iter().map(|&i| values[i]).collect(), vectors))
}

/// Ascending eigenvalues of a dense symmetric matrix.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::invalid("matrix", "eigenvalues need a square matrix"));
    }
    let (d, off, _) = householder_tridiagonal(a, false);
    let mut block = ColumnBlock::from_row_selection(d.len(), &[]);
    let mut values = tql2(&d, &off, &mut block)?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}
