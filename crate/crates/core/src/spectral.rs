//! Eigendecompositions and spectral-function kernels.
//!
//! All equal-time kernels have the form `K(x, y) = sum_i psi_i(x) psi_i(y) g(lambda_i)`
//! with measure-orthonormal eigenfunctions `psi_i` and `omega_i = sqrt(lambda_i)`:
//!
//! | kernel   | `g(lambda)`                         |
//! |----------|-------------------------------------|
//! | ground   | `1 / (2 omega)`                     |
//! | thermal  | `coth(beta omega / 2) / (2 omega)`  |
//! | excess   | `F_beta(omega) / omega`             |
//! | Green    | `1 / lambda`                        |
//!
//! Sums run over modes in ascending eigenvalue order, so results do not
//! depend on how callers schedule the work.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{SpatialOperator, Structure};
use crate::linalg::{symmetric_eigen, tridiagonal_eigen, Matrix};
use crate::math::{self, PI};

/// Largest dimension decomposed with full eigenvectors.
pub const DENSE_LIMIT: usize = 5000;
/// Largest tridiagonal dimension decomposed with full eigenvectors.
pub const TRIDIAGONAL_FULL_LIMIT: usize = 2000;

/// Eigenfunction values available from a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeTable {
    /// `values[(k, j)] = psi_j(nodes[k])`.
    Explicit { nodes: Vec<usize>, values: Matrix },
    /// Plane waves on an `n^3` torus of total volume `volume`; `waves[j]`
    /// is the integer wave vector of eigenvalue `j`.
    Fourier {
        n: usize,
        volume: f64,
        waves: Vec<[usize; 3]>,
    },
}

/// Eigenvalues and measure-orthonormal eigenfunctions of an operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub modes: ModeTable,
    /// `max |A v - lambda v| / lambda` over the checked modes.
    pub residual: f64,
    /// `max |<psi_i, psi_j>_M - delta_ij|` when full eigenfunctions are known.
    pub orthonormality: Option<f64>,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Nodes whose eigenfunction values are known (`None` means every node).
    pub fn nodes(&self) -> Option<&[usize]> {
        match &self.modes {
            ModeTable::Explicit { nodes, .. } => Some(nodes),
            ModeTable::Fourier { .. } => None,
        }
    }

    /// Angular frequencies `omega_i = sqrt(lambda_i)`.
    pub fn frequencies(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| math::sqrt(*l)).collect()
    }
}

/// Full decomposition: plane waves for constant-potential tori, dense or
/// tridiagonal QL otherwise.
pub fn decompose(op: &SpatialOperator) -> Result<SpectralDecomposition> {
    let all: Vec<usize> = (0..op.dim()).collect();
    match op.structure() {
        Structure::Torus { .. } if op.fourier_data().is_some() => fourier(op),
        Structure::Torus { .. } => dense(op),
        Structure::Tridiagonal { .. } => {
            if op.dim() > TRIDIAGONAL_FULL_LIMIT {
                return Err(Error::ResourceCap {
                    dim: op.dim(),
                    cap: TRIDIAGONAL_FULL_LIMIT,
                });
            }
            decompose_at(op, &all)
        }
    }
}

/// Decomposition keeping eigenfunction values only at `nodes`.
///
/// Tridiagonal operators accumulate the QL rotations into the requested
/// rows alone, at `O(n^2 |nodes|)` cost.
pub fn decompose_at(op: &SpatialOperator, nodes: &[usize]) -> Result<SpectralDecomposition> {
    if let Some(&bad) = nodes.iter().find(|&&i| i >= op.dim()) {
        return Err(Error::MissingNode(bad));
    }
    match op.structure() {
        Structure::Torus { .. } => {
            let full = decompose(op)?;
            Ok(match full.modes {
                ModeTable::Fourier { .. } => full,
                ModeTable::Explicit { values, .. } => SpectralDecomposition {
                    modes: ModeTable::Explicit {
                        nodes: nodes.to_vec(),
                        values: Matrix::from_fn(nodes.len(), values.cols(), |k, j| values[(nodes[k], j)]),
                    },
                    ..full
                },
            })
        }
        Structure::Tridiagonal { .. } => {
            let Structure::Tridiagonal { diag, off } = op.unscaled_structure() else {
                return Err(Error::Unsupported("rescaling changed the operator structure"));
            };
            let mut eig = tridiagonal_eigen(diag, off, nodes)?;
            let base_values = eig.eigenvalues.clone();
            let inv = stencil_factor(op);
            eig.eigenvalues.iter_mut().for_each(|l| *l *= inv);
            if !(eig.eigenvalues[0] > 0.0) {
                return Err(Error::NotPositive {
                    pivot: 0,
                    value: eig.eigenvalues[0],
                });
            }
            let m = op.measure();
            let values = Matrix::from_fn(nodes.len(), eig.eigenvalues.len(), |k, j| {
                eig.vectors[(k, j)] / math::sqrt(m[nodes[k]])
            });
            let full = nodes.len() == op.dim() && nodes.iter().enumerate().all(|(k, &i)| k == i);
            let (residual, orthonormality) = if full {
                let v = Matrix::from_fn(op.dim(), op.dim(), |i, j| eig.vectors[(i, j)]);
                (explicit_residual(op, &eig.eigenvalues, &v), Some(orthonormality_defect(&v)))
            } else {
                (inverse_iteration_residual(diag, off, &base_values), None)
            };
            Ok(SpectralDecomposition {
                eigenvalues: eig.eigenvalues,
                modes: ModeTable::Explicit {
                    nodes: nodes.to_vec(),
                    values,
                },
                residual,
                orthonormality,
            })
        }
    }
}

fn dense(op: &SpatialOperator) -> Result<SpectralDecomposition> {
    if op.dim() > DENSE_LIMIT {
        return Err(Error::ResourceCap {
            dim: op.dim(),
            cap: DENSE_LIMIT,
        });
    }
    let (values, vectors) = symmetric_eigen(&op.to_dense())?;
    if !(values[0] > 0.0) {
        return Err(Error::NotPositive {
            pivot: 0,
            value: values[0],
        });
    }
    let residual = explicit_residual(op, &values, &vectors);
    let orthonormality = Some(orthonormality_defect(&vectors));
    let m = op.measure();
    let psi = Matrix::from_fn(vectors.rows(), vectors.cols(), |i, j| vectors[(i, j)] / math::sqrt(m[i]));
    Ok(SpectralDecomposition {
        eigenvalues: values,
        modes: ModeTable::Explicit {
            nodes: (0..op.dim()).collect(),
            values: psi,
        },
        residual,
        orthonormality,
    })
}

/// `max_j |S v_j - lambda_j v_j| / lambda_j` for unit vectors `v_j` (columns).
fn explicit_residual(op: &SpatialOperator, values: &[f64], vectors: &Matrix) -> f64 {
    let n = vectors.rows();
    let mut worst = 0.0f64;
    let mut col = alloc::vec![0.0; n];
    for (j, lambda) in values.iter().enumerate() {
        for (i, c) in col.iter_mut().enumerate() {
            *c = vectors[(i, j)];
        }
        let sv = op.apply_symmetric(&col);
        let r = sv
            .iter()
            .zip(&col)
            .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
            .sum::<f64>();
        worst = worst.max(math::sqrt(r) / lambda.abs());
    }
    worst
}

/// Largest deviation of `V^T V` from the identity, checked on up to 64
/// columns against all others.
fn orthonormality_defect(vectors: &Matrix) -> f64 {
    let n = vectors.rows();
    let k = vectors.cols();
    let step = (k / 64).max(1);
    let t = vectors.transpose();
    let mut worst = 0.0f64;
    for a in (0..k).step_by(step) {
        let ca = t.row(a);
        for b in 0..k {
            let cb = t.row(b);
            let dot: f64 = (0..n).map(|i| ca[i] * cb[i]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            worst = worst.max(math::abs(dot - want));
        }
    }
    worst
}

/// Residual of the lowest eigenpairs recomputed by shifted inverse iteration.
fn inverse_iteration_residual(diag: &[f64], off: &[f64], values: &[f64]) -> f64 {
    let n = diag.len();
    let mut worst = 0.0f64;
    for &lambda in values.iter().take(3) {
        let shift = lambda * (1.0 + 1e-9);
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * math::sin(i as f64)).collect();
        for _ in 0..3 {
            x = solve_shifted_tridiagonal(diag, off, shift, &x);
            let norm = math::sqrt(x.iter().map(|v| v * v).sum());
            x.iter_mut().for_each(|v| *v /= norm);
        }
        let mut r = 0.0;
        for i in 0..n {
            let mut v = (diag[i] - lambda) * x[i];
            if i > 0 {
                v += off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += off[i] * x[i + 1];
            }
            r += v * v;
        }
        worst = worst.max(math::sqrt(r) / lambda);
    }
    worst
}

/// Solves `(T - shift I) x = b` by Gaussian elimination with partial pivoting.
fn solve_shifted_tridiagonal(diag: &[f64], off: &[f64], shift: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // Rows hold up to three non-zeros after pivoting: a[i], c[i], e[i].
    let mut a: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut c: Vec<f64> = off.to_vec();
    c.push(0.0);
    let mut e = alloc::vec![0.0; n];
    let mut sub: Vec<f64> = off.to_vec();
    let mut x = b.to_vec();
    for i in 0..n.saturating_sub(1) {
        if math::abs(sub[i]) > math::abs(a[i]) {
            // Swap rows i and i+1.
            let (ai, ci, ei, xi) = (a[i], c[i], e[i], x[i]);
            a[i] = sub[i];
            c[i] = a[i + 1];
            e[i] = c[i + 1];
            x[i] = x[i + 1];
            sub[i] = ai;
            a[i + 1] = ci;
            c[i + 1] = ei;
            x[i + 1] = xi;
        }
        let piv = if a[i] == 0.0 { 1e-300 } else { a[i] };
        let f = sub[i] / piv;
        a[i + 1] -= f * c[i];
        c[i + 1] -= f * e[i];
        x[i + 1] -= f * x[i];
    }
    for i in (0..n).rev() {
        let mut v = x[i];
        if i + 1 < n {
            v -= c[i] * x[i + 1];
        }
        if i + 2 < n {
            v -= e[i] * x[i + 2];
        }
        let piv = if a[i] == 0.0 { 1e-300 } else { a[i] };
        x[i] = v / piv;
    }
    x
}

/// `1 / c^2` for an operator rescaled by `c`.
fn stencil_factor(op: &SpatialOperator) -> f64 {
    if op.scale() == 1.0 {
        1.0
    } else {
        1.0 / (op.scale() * op.scale())
    }
}

fn fourier(op: &SpatialOperator) -> Result<SpectralDecomposition> {
    let (n, coupling, extra) = match op.unscaled_structure() {
        Structure::Torus { n, coupling, extra } if extra.iter().all(|v| *v == extra[0]) => (*n, *coupling, extra[0]),
        _ => return Err(Error::Unsupported("torus potential is not constant")),
    };
    let inv = stencil_factor(op);
    let sin2: Vec<f64> = (0..n)
        .map(|k| {
            let s = math::sin(PI * k as f64 / n as f64);
            4.0 * coupling * s * s
        })
        .collect();
    let mut modes: Vec<(f64, [usize; 3])> = Vec::with_capacity(n * n * n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                modes.push(((extra + sin2[a] + sin2[b] + sin2[c]) * inv, [a, b, c]));
            }
        }
    }
    modes.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    if !(modes[0].0 > 0.0) {
        return Err(Error::NotPositive {
            pivot: 0,
            value: modes[0].0,
        });
    }
    let volume: f64 = op.measure().iter().sum();
    let eigenvalues: Vec<f64> = modes.iter().map(|m| m.0).collect();
    let waves: Vec<[usize; 3]> = modes.iter().map(|m| m.1).collect();
    // Check the analytic pairs against the assembled stencil on a few modes.
    let mut residual = 0.0f64;
    let probes = [0, eigenvalues.len() / 3, eigenvalues.len() - 1];
    for &j in &probes {
        let v: Vec<f64> = (0..n * n * n)
            .map(|idx| {
                let (x, y, z) = (idx / (n * n), (idx / n) % n, idx % n);
                let w = waves[j];
                math::cos(2.0 * PI * ((w[0] * x + w[1] * y + w[2] * z) % n) as f64 / n as f64)
            })
            .collect();
        let norm = math::sqrt(v.iter().map(|a| a * a).sum());
        let sv = op.apply_symmetric(&v);
        let r: f64 = sv.iter().zip(&v).map(|(a, b)| (a - eigenvalues[j] * b) * (a - eigenvalues[j] * b)).sum();
        residual = residual.max(math::sqrt(r) / norm / eigenvalues[j]);
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        modes: ModeTable::Fourier { n, volume, waves },
        residual,
        orthonormality: Some(0.0),
    })
}

/// Planck occupation `F_beta(k) = 1 / (exp(beta k) - 1)`.
pub fn bose_factor(beta: f64, k: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid("beta", "must be positive and finite"));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::invalid("k", "energy must be positive and finite"));
    }
    Ok(bose(beta * k))
}

/// `1 / (e^x - 1)` for `x > 0`.
pub(crate) fn bose(x: f64) -> f64 {
    if x < 1e-5 {
        1.0 / x - 0.5 + x / 12.0
    } else if x > 700.0 {
        math::exp(-x)
    } else {
        1.0 / math::expm1(x)
    }
}

/// Which spectral function a kernel evaluates.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralFunction {
    Ground,
    Thermal { beta: f64 },
    Excess { beta: f64 },
    Green,
    /// Ground plus `n_i / omega_i`; `occupations` follow the eigenvalue order.
    Perturbed { occupations: Vec<f64> },
    /// `n_i / omega_i` alone, the excess of a perturbed state.
    Occupied { occupations: Vec<f64> },
}

impl SpectralFunction {
    fn validate(&self, modes: usize) -> Result<()> {
        match self {
            SpectralFunction::Thermal { beta } | SpectralFunction::Excess { beta } => {
                if !(*beta > 0.0) || !beta.is_finite() {
                    return Err(Error::invalid("beta", "must be positive and finite"));
                }
            }
            SpectralFunction::Perturbed { occupations } | SpectralFunction::Occupied { occupations } => {
                if occupations.len() != modes {
                    return Err(Error::invalid("occupations", "one occupation per mode is required"));
                }
                if occupations.iter().any(|n| !(*n >= 0.0) || !n.is_finite()) {
                    return Err(Error::invalid("occupations", "must be finite and non-negative"));
                }
            }
            SpectralFunction::Ground | SpectralFunction::Green => {}
        }
        Ok(())
    }

    /// `g(lambda_i)` for mode `i`.
    fn weight(&self, i: usize, lambda: f64) -> f64 {
        let omega = math::sqrt(lambda);
        match self {
            SpectralFunction::Ground => 0.5 / omega,
            SpectralFunction::Thermal { beta } => 0.5 / omega + bose(beta * omega) / omega,
            SpectralFunction::Excess { beta } => bose(beta * omega) / omega,
            SpectralFunction::Green => 1.0 / lambda,
            SpectralFunction::Perturbed { occupations } => 0.5 / omega + occupations[i] / omega,
            SpectralFunction::Occupied { occupations } => occupations[i] / omega,
        }
    }

    pub fn tag(&self) -> KernelTag {
        match self {
            SpectralFunction::Ground => KernelTag::Ground,
            SpectralFunction::Thermal { beta } => KernelTag::Thermal(*beta),
            SpectralFunction::Excess { beta } => KernelTag::Excess(*beta),
            SpectralFunction::Green => KernelTag::Green,
            SpectralFunction::Perturbed { .. } => KernelTag::Perturbed,
            SpectralFunction::Occupied { .. } => KernelTag::Occupied,
        }
    }
}

/// Which spectral function produced a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelTag {
    Ground,
    Thermal(f64),
    Excess(f64),
    Green,
    Perturbed,
    Occupied,
}

/// A kernel restricted to a set of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub nodes: Vec<usize>,
    /// `values[(a, b)] = K(nodes[a], nodes[b])`.
    pub values: Matrix,
    pub tag: KernelTag,
}

impl KernelMatrix {
    pub fn diagonal(&self) -> Vec<f64> {
        self.values.diagonal()
    }

    /// `K(x, y)` for two nodes of the restriction.
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let a = self.nodes.iter().position(|&n| n == x)?;
        let b = self.nodes.iter().position(|&n| n == y)?;
        Some(self.values[(a, b)])
    }
}

fn fourier_kernel_entry(n: usize, volume: f64, waves: &[[usize; 3]], weights: &[f64], d: [usize; 3]) -> f64 {
    let mut sum = 0.0;
    for (w, g) in waves.iter().zip(weights) {
        let phase = (w[0] * d[0] + w[1] * d[1] + w[2] * d[2]) % n;
        sum += g * math::cos(2.0 * PI * phase as f64 / n as f64);
    }
    sum / volume
}

fn weights(dec: &SpectralDecomposition, f: &SpectralFunction) -> Result<Vec<f64>> {
    f.validate(dec.len())?;
    Ok(dec
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, l)| f.weight(i, *l))
        .collect())
}

/// Kernel diagonal `K(x, x)` at the given nodes.
pub fn kernel_diagonal(dec: &SpectralDecomposition, f: &SpectralFunction, nodes: &[usize]) -> Result<Vec<f64>> {
    let g = weights(dec, f)?;
    match &dec.modes {
        ModeTable::Fourier { n, volume, .. } => {
            let value: f64 = g.iter().sum::<f64>() / volume;
            if let Some(&bad) = nodes.iter().find(|&&i| i >= n * n * n) {
                return Err(Error::MissingNode(bad));
            }
            Ok(alloc::vec![value; nodes.len()])
        }
        ModeTable::Explicit { nodes: known, values } => nodes
            .iter()
            .map(|x| {
                let a = known.iter().position(|k| k == x).ok_or(Error::MissingNode(*x))?;
                let row = values.row(a);
                Ok(row.iter().zip(&g).map(|(p, w)| p * p * w).sum())
            })
            .collect(),
    }
}

/// Kernel on every node known to the decomposition (all nodes for plane waves).
pub fn kernel(dec: &SpectralDecomposition, f: &SpectralFunction) -> Result<KernelMatrix> {
    let nodes: Vec<usize> = match &dec.modes {
        ModeTable::Explicit { nodes, .. } => nodes.clone(),
        ModeTable::Fourier { n, .. } => (0..n * n * n).collect(),
    };
    kernel_at(dec, f, &nodes)
}

/// Kernel restricted to `nodes`.
pub fn kernel_at(dec: &SpectralDecomposition, f: &SpectralFunction, nodes: &[usize]) -> Result<KernelMatrix> {
    let g = weights(dec, f)?;
    let k = nodes.len();
    let values = match &dec.modes {
        ModeTable::Fourier { n, volume, waves } => {
            let n = *n;
            if k > DENSE_LIMIT {
                return Err(Error::ResourceCap { dim: k, cap: DENSE_LIMIT });
            }
            if let Some(&bad) = nodes.iter().find(|&&i| i >= n * n * n) {
                return Err(Error::MissingNode(bad));
            }
            // Translation invariance: tabulate by displacement once.
            let mut table = alloc::vec![f64::NAN; n * n * n];
            let coord = |i: usize| [i / (n * n), (i / n) % n, i % n];
            let mut m = Matrix::zeros(k, k);
            for a in 0..k {
                let xa = coord(nodes[a]);
                for b in a..k {
                    let xb = coord(nodes[b]);
                    let d = [(xa[0] + n - xb[0]) % n, (xa[1] + n - xb[1]) % n, (xa[2] + n - xb[2]) % n];
                    let key = (d[0] * n + d[1]) * n + d[2];
                    if table[key].is_nan() {
                        table[key] = fourier_kernel_entry(n, *volume, waves, &g, d);
                    }
                    m[(a, b)] = table[key];
                    m[(b, a)] = table[key];
                }
            }
            m
        }
        ModeTable::Explicit { nodes: known, values } => {
            let idx: Vec<usize> = nodes
                .iter()
                .map(|x| known.iter().position(|kn| kn == x).ok_or(Error::MissingNode(*x)))
                .collect::<Result<_>>()?;
            let mut m = Matrix::zeros(k, k);
            for a in 0..k {
                let ra = values.row(idx[a]);
                for b in a..k {
                    let rb = values.row(idx[b]);
                    let v: f64 = ra.iter().zip(rb).zip(&g).map(|((p, q), w)| p * q * w).sum();
                    m[(a, b)] = v;
                    m[(b, a)] = v;
                }
            }
            m
        }
    };
    Ok(KernelMatrix {
        nodes: nodes.to_vec(),
        values,
        tag: f.tag(),
    })
}

/// `sum psi psi / (2 omega)`, the operator `A^(-1/2) / 2`.
pub fn ground_kernel(dec: &SpectralDecomposition) -> Result<KernelMatrix> {
    kernel(dec, &SpectralFunction::Ground)
}

/// `sum psi psi coth(beta omega / 2) / (2 omega)`.
pub fn thermal_kernel(dec: &SpectralDecomposition, beta: f64) -> Result<KernelMatrix> {
    kernel(dec, &SpectralFunction::Thermal { beta })
}

/// `sum psi psi F_beta(omega) / omega`.
pub fn excess_kernel(dec: &SpectralDecomposition, beta: f64) -> Result<KernelMatrix> {
    kernel(dec, &SpectralFunction::Excess { beta })
}

/// `sum psi psi / lambda`, the Green kernel `A^(-1)`.
pub fn green_kernel(dec: &SpectralDecomposition) -> Result<KernelMatrix> {
    kernel(dec, &SpectralFunction::Green)
}
