//! Euclidean-time oracles for the equal-time thermal kernel.
//!
//! On the thermal circle of circumference `beta`, the equal-time kernel of
//! the operator `-d^2/dtau^2 + A` is
//! `(1/beta) sum_n (omega_n^2 + A)^-1` with `omega_n = 2 pi n / beta`, which
//! sums to `coth(beta sqrt(A) / 2) / (2 sqrt(A))`. This module evaluates the
//! frequency sum with an analytic tail, and inverts the full lattice operator
//! on `S^1 x torus` for comparison with the spectral kernel.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{SpatialOperator, Structure};
use crate::linalg::{Cholesky, Matrix};
use crate::math::{self, PI};

fn check(lambda: f64, beta: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("lambda", "must be positive"));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid("beta", "must be positive"));
    }
    Ok(())
}

/// Truncated sum `(1/beta) sum_{|n| <= n_max} (omega_n^2 + lambda)^-1`.
pub fn matsubara_partial_sum(lambda: f64, beta: f64, n_max: usize) -> Result<f64> {
    check(lambda, beta)?;
    let c = (2.0 * PI / beta) * (2.0 * PI / beta);
    // Add the smallest terms first.
    let mut s = 0.0;
    for n in (1..=n_max).rev() {
        let x = n as f64;
        s += 2.0 / (c * x * x + lambda);
    }
    Ok((s + 1.0 / lambda) / beta)
}

/// Euler-Maclaurin estimate of `(1/beta) sum_{|n| > n_max} (omega_n^2 + lambda)^-1`.
pub fn matsubara_tail(lambda: f64, beta: f64, n_max: usize) -> Result<f64> {
    check(lambda, beta)?;
    if n_max == 0 {
        return Err(Error::invalid("n_max", "tail expansion needs n_max >= 1"));
    }
    let c = (2.0 * PI / beta) * (2.0 * PI / beta);
    let x = n_max as f64;
    let g = |x: f64| 1.0 / (c * x * x + lambda);
    let q = c * x * x + lambda;
    let g1 = -2.0 * c * x / (q * q);
    let g3 = 24.0 * c * c * x * (lambda - c * x * x) / (q * q * q * q);
    let integral = (PI / 2.0 - math::atan(x * math::sqrt(c / lambda))) / math::sqrt(c * lambda);
    // sum_{n > N} g(n) = int_N^inf g - g(N)/2 - g'(N)/12 + g'''(N)/720 - ...
    let one_side = integral - g(x) / 2.0 - g1 / 12.0 + g3 / 720.0;
    Ok(2.0 * one_side / beta)
}

/// Frequency sum including the analytic tail.
pub fn matsubara_equal_time(lambda: f64, beta: f64, n_max: usize) -> Result<f64> {
    Ok(matsubara_partial_sum(lambda, beta, n_max)? + matsubara_tail(lambda, beta, n_max)?)
}

/// Closed form `coth(beta sqrt(lambda) / 2) / (2 sqrt(lambda))`.
pub fn thermal_mode_value(lambda: f64, beta: f64) -> Result<f64> {
    check(lambda, beta)?;
    let w = math::sqrt(lambda);
    Ok(math::coth(beta * w / 2.0) / (2.0 * w))
}

/// Equal-time block of the inverse of `-D_tau^2 (x) I + I (x) A` on a
/// periodic Euclidean-time lattice with `n_tau` slices of spacing
/// `beta / n_tau`, as a kernel with respect to the spatial measure.
///
/// The spatial operator must carry a uniform measure (a torus). The
/// returned matrix is `dim x dim`.
pub fn lattice_equal_time_kernel(op: &SpatialOperator, beta: f64, n_tau: usize) -> Result<Matrix> {
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", "must be positive"));
    }
    if n_tau < 3 {
        return Err(Error::invalid("n_tau", "at least 3 time slices are required"));
    }
    if !matches!(op.structure(), Structure::Torus { .. }) {
        return Err(Error::Unsupported("the Euclidean lattice oracle needs a torus"));
    }
    let n = op.dim();
    let dim = n * n_tau;
    if dim > 5000 {
        return Err(Error::ResourceCap { dim, cap: 5000 });
    }
    let a = beta / n_tau as f64;
    let inv_a2 = 1.0 / (a * a);
    let s = op.to_dense();
    let mut k4 = Matrix::zeros(dim, dim);
    for t in 0..n_tau {
        let up = (t + 1) % n_tau;
        let down = (t + n_tau - 1) % n_tau;
        for i in 0..n {
            let row = t * n + i;
            k4[(row, row)] += 2.0 * inv_a2;
            k4[(row, up * n + i)] -= inv_a2;
            k4[(row, down * n + i)] -= inv_a2;
            for j in 0..n {
                let v = s[(i, j)];
                if v != 0.0 {
                    k4[(row, t * n + j)] += v;
                }
            }
        }
    }
    let chol = Cholesky::new(&k4)?;
    let mut rhs = Matrix::zeros(dim, n);
    for i in 0..n {
        rhs[(i, i)] = 1.0;
    }
    let cols = chol.solve_columns(&rhs);
    let cell = a * op.measure()[0];
    let out: Vec<f64> = (0..n * n).map(|idx| cols[(idx / n, idx % n)] / cell).collect();
    Ok(Matrix::from_fn(n, n, |i, j| 0.5 * (out[i * n + j] + out[j * n + i])))
}
