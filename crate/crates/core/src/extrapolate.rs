//! Extrapolation and small least-squares fits.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Smallest error bar attached to any extrapolated value.
pub fn error_floor(value: f64) -> f64 {
    16.0 * f64::EPSILON * math::abs(value) + f64::MIN_POSITIVE
}

/// Result of a Richardson extrapolation in `h^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolated {
    pub value: f64,
    /// `|R_last - R_previous|` plus a rounding floor.
    pub error: f64,
    /// Raw increments shrink under refinement.
    pub converged: bool,
}

/// Eliminates the `h^2` term from values computed at decreasing spacings.
///
/// With one level the raw value is returned with the rounding floor as its
/// error; with two levels the error is the size of the correction; with three
/// or more it is the change between the last two extrapolants.
pub fn richardson(spacings: &[f64], values: &[f64]) -> Result<Extrapolated> {
    if spacings.len() != values.len() || values.is_empty() {
        return Err(Error::invalid("values", "one value per spacing is required"));
    }
    if spacings.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("spacings", "must be strictly decreasing"));
    }
    let n = values.len();
    if n == 1 {
        return Ok(Extrapolated {
            value: values[0],
            error: error_floor(values[0]),
            converged: true,
        });
    }
    let pair = |i: usize| {
        let (h1, h2) = (spacings[i] * spacings[i], spacings[i + 1] * spacings[i + 1]);
        (h1 * values[i + 1] - h2 * values[i]) / (h1 - h2)
    };
    let last = pair(n - 2);
    if n == 2 {
        return Ok(Extrapolated {
            value: last,
            error: math::abs(last - values[1]) + error_floor(last),
            converged: true,
        });
    }
    let prev = pair(n - 3);
    let d1 = math::abs(values[n - 2] - values[n - 3]);
    let d2 = math::abs(values[n - 1] - values[n - 2]);
    Ok(Extrapolated {
        value: last,
        error: math::abs(last - prev) + error_floor(last),
        converged: d2 <= d1,
    })
}

/// Value at `x = 0` of the interpolating polynomial through `(xs, ys)`.
pub fn lagrange_at_zero(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::invalid("points", "need matching, non-empty abscissae and ordinates"));
    }
    let mut total = 0.0;
    for (i, (xi, yi)) in xs.iter().zip(ys).enumerate() {
        let mut w = 1.0;
        for (j, xj) in xs.iter().enumerate() {
            if i != j {
                if xj == xi {
                    return Err(Error::invalid("points", "abscissae must be distinct"));
                }
                w *= xj / (xj - xi);
            }
        }
        total += w * yi;
    }
    Ok(total)
}

/// Least-squares polynomial fit `y = sum_k c_k x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    pub coefficients: Vec<f64>,
    /// Standard errors of the coefficients from the residual scatter.
    pub standard_errors: Vec<f64>,
    pub rms_residual: f64,
}

/// Fits a polynomial of the given degree by modified Gram-Schmidt QR.
///
/// Fails with `IllConditionedFit` when there are fewer samples than
/// unknowns plus one, or when the design matrix is numerically singular.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<PolyFit> {
    let m = xs.len();
    let p = degree + 1;
    if ys.len() != m {
        return Err(Error::invalid("points", "need matching abscissae and ordinates"));
    }
    if m < p + 1 {
        return Err(Error::IllConditionedFit("fewer samples than fit parameters plus one"));
    }
    // Columns of the design matrix, scaled to keep them comparable.
    let scale = xs.iter().fold(0.0f64, |a, x| a.max(math::abs(*x))).max(f64::MIN_POSITIVE);
    let mut q: Vec<Vec<f64>> = (0..p)
        .map(|k| xs.iter().map(|x| math::powi(x / scale, k as i32)).collect())
        .collect();
    let mut r = alloc::vec![alloc::vec![0.0; p]; p];
    for k in 0..p {
        for j in 0..k {
            let d: f64 = (0..m).map(|i| q[j][i] * q[k][i]).sum();
            r[j][k] = d;
            for i in 0..m {
                q[k][i] -= d * q[j][i];
            }
        }
        let norm = math::sqrt(q[k].iter().map(|v| v * v).sum());
        if norm < 1e-10 * math::sqrt(m as f64) {
            return Err(Error::IllConditionedFit("design matrix is numerically singular"));
        }
        r[k][k] = norm;
        q[k].iter_mut().for_each(|v| *v /= norm);
    }
    let qty: Vec<f64> = (0..p).map(|k| (0..m).map(|i| q[k][i] * ys[i]).sum()).collect();
    let mut c = alloc::vec![0.0; p];
    for k in (0..p).rev() {
        let mut v = qty[k];
        for j in k + 1..p {
            v -= r[k][j] * c[j];
        }
        c[k] = v / r[k][k];
    }
    let residuals: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| y - (0..p).map(|k| c[k] * math::powi(x / scale, k as i32)).sum::<f64>())
        .collect();
    let ss: f64 = residuals.iter().map(|v| v * v).sum();
    let sigma2 = ss / (m - p) as f64;
    // Diagonal of (R^T R)^-1 = R^-1 R^-T.
    let mut rinv = alloc::vec![alloc::vec![0.0; p]; p];
    for k in 0..p {
        rinv[k][k] = 1.0 / r[k][k];
        for j in (0..k).rev() {
            let s: f64 = (j + 1..=k).map(|l| r[j][l] * rinv[l][k]).sum();
            rinv[j][k] = -s / r[j][j];
        }
    }
    let coefficients: Vec<f64> = c.iter().enumerate().map(|(k, v)| v / math::powi(scale, k as i32)).collect();
    let standard_errors = (0..p)
        .map(|k| {
            let var: f64 = (k..p).map(|l| rinv[k][l] * rinv[k][l]).sum::<f64>() * sigma2;
            math::sqrt(var) / math::powi(scale, k as i32)
        })
        .collect();
    Ok(PolyFit {
        coefficients,
        standard_errors,
        rms_residual: math::sqrt(ss / m as f64),
    })
}
