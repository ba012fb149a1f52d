//! Discretized spatial Klein-Gordon operators.
//!
//! Every operator `A` is self-adjoint with respect to a diagonal lattice
//! measure `M`. The stored matrix is the symmetrized form
//! `S = M^(1/2) A M^(-1/2)`, so eigenvectors `v` of `S` give
//! measure-orthonormal eigenfunctions `psi = M^(-1/2) v`.
//!
//! Three families are provided:
//!
//! * periodic tori with a 7-point stencil (uniform measure `h^3`);
//! * radial conformal models in the `u = r phi` form with Dirichlet ends
//!   (measure `dr`), whose kernels convert back through `G_u / (4 pi r r')`;
//! * the two-chart quartic shell in the weighted `phi` form, plus its flat
//!   ball reference.

mod quartic;
mod radial;
mod torus;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{ConformalFactorModel, ShellPotential};
use crate::linalg::Matrix;
use crate::math;

pub use quartic::{assemble_quartic_reference, assemble_radial_quartic, QUARTIC_MATCH_FACTOR};
pub use radial::{assemble_conjugated_flat, assemble_radial_conformal, assemble_radial_flat};
pub use torus::assemble_torus;

/// Largest matrix dimension accepted by `refine` unless overridden.
pub const DEFAULT_DIMENSION_CAP: usize = 200_000;

/// Periodic cube `[0, L)^3` with `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    pub side: f64,
    pub points_per_axis: usize,
}

impl TorusGrid {
    pub fn new(side: f64, points_per_axis: usize) -> Result<Self> {
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::invalid("side", "must be positive"));
        }
        if points_per_axis < 4 {
            return Err(Error::invalid("points_per_axis", "at least 4 points per axis are required"));
        }
        Ok(TorusGrid { side, points_per_axis })
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.points_per_axis as f64
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.points_per_axis == 0
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        let n = self.points_per_axis;
        (x * n + y) * n + z
    }

    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.points_per_axis;
        (idx / (n * n), (idx / n) % n, idx % n)
    }
}

/// Outer boundary treatment of a radial grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialBoundary {
    /// `u = 0` at `r = 0` and at `r = r_max`.
    Dirichlet,
    /// Inner chart `[0, r_max]` glued to the inverted outer chart at `r_max`.
    TwoChart,
}

/// Uniform radial grid `r_i = i r_max / N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    pub r_max: f64,
    pub points: usize,
    pub boundary: RadialBoundary,
}

impl RadialGrid {
    pub fn new(r_max: f64, points: usize, boundary: RadialBoundary) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::invalid("r_max", "must be positive"));
        }
        if points < 8 {
            return Err(Error::invalid("points", "at least 8 radial points are required"));
        }
        Ok(RadialGrid { r_max, points, boundary })
    }

    pub fn dirichlet(r_max: f64, points: usize) -> Result<Self> {
        Self::new(r_max, points, RadialBoundary::Dirichlet)
    }

    pub fn two_chart(r_match: f64, points: usize) -> Result<Self> {
        Self::new(r_match, points, RadialBoundary::TwoChart)
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / self.points as f64
    }
}

/// Grid description attached to an operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    Torus(TorusGrid),
    Radial(RadialGrid),
}

/// Potential on a torus.
#[derive(Debug, Clone, PartialEq)]
pub enum TorusPotential {
    Constant(f64),
    /// One sample per lattice point; cannot be refined.
    Samples(Vec<f64>),
}

/// Which radial conformal operator to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConformalOperator {
    /// `Omega^-1 (-d^2/dr^2) Omega^-1 + (xi - 1/8) R`.
    Model,
    /// `-d^2/dr^2`, the flat reference.
    FlatReference,
    /// `Omega^-1 (-d^2/dr^2) Omega^-1` without curvature term.
    Conjugated,
}

/// Everything needed to reassemble an operator at another resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum Recipe {
    Torus {
        grid: TorusGrid,
        potential: TorusPotential,
        mass: f64,
    },
    RadialConformal {
        grid: RadialGrid,
        model: ConformalFactorModel,
        xi: f64,
        operator: ConformalOperator,
    },
    Quartic {
        grid: RadialGrid,
        potential: ShellPotential,
        xi: f64,
    },
    QuarticReference {
        spacing: f64,
        nodes: usize,
        nu: f64,
    },
}

impl Recipe {
    /// Same model with `factor` times more points.
    pub fn refined(&self, factor: usize) -> Result<Recipe> {
        if factor < 2 {
            return Err(Error::invalid("factor", "refinement factor must be at least 2"));
        }
        self.with_points(self.points() * factor)
    }

    /// Resolution parameter: points per axis, radial points, or reference nodes.
    pub fn points(&self) -> usize {
        match self {
            Recipe::Torus { grid, .. } => grid.points_per_axis,
            Recipe::RadialConformal { grid, .. } | Recipe::Quartic { grid, .. } => grid.points,
            Recipe::QuarticReference { nodes, .. } => *nodes,
        }
    }

    /// Same model and extent with a different number of points.
    pub fn with_points(&self, points: usize) -> Result<Recipe> {
        Ok(match self {
            Recipe::Torus { grid, potential, mass } => {
                if let TorusPotential::Samples(_) = potential {
                    if points != grid.points_per_axis {
                        return Err(Error::Unsupported("sampled torus potentials cannot be resampled"));
                    }
                }
                Recipe::Torus {
                    grid: TorusGrid::new(grid.side, points)?,
                    potential: potential.clone(),
                    mass: *mass,
                }
            }
            Recipe::RadialConformal { grid, model, xi, operator } => Recipe::RadialConformal {
                grid: RadialGrid::new(grid.r_max, points, grid.boundary)?,
                model: model.clone(),
                xi: *xi,
                operator: *operator,
            },
            Recipe::Quartic { grid, potential, xi } => Recipe::Quartic {
                grid: RadialGrid::new(grid.r_max, points, grid.boundary)?,
                potential: potential.clone(),
                xi: *xi,
            },
            Recipe::QuarticReference { spacing, nodes, nu } => Recipe::QuarticReference {
                spacing: spacing * *nodes as f64 / points as f64,
                nodes: points,
                nu: *nu,
            },
        })
    }

    /// Matrix dimension the recipe assembles to.
    pub fn dimension(&self) -> usize {
        match self {
            Recipe::Torus { grid, .. } => grid.len(),
            Recipe::RadialConformal { grid, .. } => grid.points - 1,
            Recipe::Quartic { grid, .. } => 2 * grid.points + 1,
            Recipe::QuarticReference { nodes, .. } => *nodes,
        }
    }

    pub fn assemble(&self) -> Result<SpatialOperator> {
        match self {
            Recipe::Torus { grid, potential, mass } => {
                let samples = match potential {
                    TorusPotential::Constant(v) => alloc::vec![*v; grid.len()],
                    TorusPotential::Samples(s) => s.clone(),
                };
                let mut op = assemble_torus(*grid, &samples, *mass)?;
                op.recipe = self.clone();
                Ok(op)
            }
            Recipe::RadialConformal { grid, model, xi, operator } => match operator {
                ConformalOperator::Model => assemble_radial_conformal(*grid, model, *xi),
                ConformalOperator::FlatReference => assemble_radial_flat(*grid, model),
                ConformalOperator::Conjugated => assemble_conjugated_flat(*grid, model),
            },
            Recipe::Quartic { grid, potential, xi } => assemble_radial_quartic(*grid, potential, *xi),
            Recipe::QuarticReference { spacing, nodes, nu } => assemble_quartic_reference(*spacing, *nodes, *nu),
        }
    }
}

/// Symmetrized matrix storage.
#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    /// `S = coupling (6 I - adjacency) + diag(extra)` on an `n^3` torus.
    Torus { n: usize, coupling: f64, extra: Vec<f64> },
    /// Symmetric tridiagonal `S` with `off[i] = S[i][i+1]`.
    Tridiagonal { diag: Vec<f64>, off: Vec<f64> },
}

/// How the stored kernel maps to the field two-point function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelForm {
    /// The kernel is already the field kernel.
    Direct,
    /// `u = r phi`: field kernel is `K(r, r') / (4 pi r r')`.
    RadialU,
}

/// Evaluation location for Wick-square estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalPoint {
    /// Centre of spherical symmetry, reached by extrapolation in `u` form.
    Center,
    /// A lattice unknown.
    Node(usize),
}

/// A measure-symmetric, positive definite discretized operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialOperator {
    pub(crate) structure: Structure,
    pub(crate) measure: Vec<f64>,
    pub(crate) grid: Grid,
    /// Radial coordinate per unknown (empty for tori).
    pub(crate) radii: Vec<f64>,
    /// Diagonal potential term per unknown (`V + m^2`, `(xi - 1/8) R` or `xi R`).
    pub(crate) potential: Vec<f64>,
    pub(crate) flat: Vec<bool>,
    pub(crate) form: KernelForm,
    pub(crate) recipe: Recipe,
    pub(crate) scale: f64,
    /// Stencil before any metric rescaling, kept so that spectra of rescaled
    /// operators follow from the unscaled ones exactly.
    pub(crate) unscaled: Option<alloc::boxed::Box<Structure>>,
}

impl SpatialOperator {
    pub fn dim(&self) -> usize {
        self.measure.len()
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// Stencil on the unscaled metric; `structure() = unscaled_structure() / scale()^2`.
    pub fn unscaled_structure(&self) -> &Structure {
        self.unscaled.as_deref().unwrap_or(&self.structure)
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Grid spacing in physical units (including any metric rescaling).
    pub fn spacing(&self) -> f64 {
        self.scale
            * match &self.grid {
                Grid::Torus(g) => g.spacing(),
                Grid::Radial(g) => g.spacing(),
            }
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn form(&self) -> KernelForm {
        self.form
    }

    pub fn recipe(&self) -> &Recipe {
        &self.recipe
    }

    /// Metric scale `c` (lengths multiplied by `c`).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_flat_at(&self, node: usize) -> bool {
        self.flat.get(node).copied().unwrap_or(false)
    }

    /// Unknown index sitting at radial node `k` (`r = k h`) of the inner chart.
    pub fn radial_node(&self, k: usize) -> Result<usize> {
        let idx = match (&self.grid, self.form) {
            (Grid::Radial(_), KernelForm::RadialU) => k.checked_sub(1).ok_or(Error::MissingNode(k))?,
            (Grid::Radial(_), KernelForm::Direct) => k,
            (Grid::Torus(_), _) => return Err(Error::Unsupported("torus operators have no radial nodes")),
        };
        if idx >= self.dim() {
            return Err(Error::MissingNode(k));
        }
        Ok(idx)
    }

    /// Constant potential on a torus, which allows the Fourier decomposition.
    pub fn fourier_data(&self) -> Option<(usize, f64, f64)> {
        match &self.structure {
            Structure::Torus { n, coupling, extra } => {
                let first = *extra.first()?;
                if extra.iter().all(|&v| v == first) {
                    Some((*n, *coupling, first))
                } else {
                    None
                }
            }
            Structure::Tridiagonal { .. } => None,
        }
    }

    /// `y = S x` for the symmetrized matrix.
    pub fn apply_symmetric(&self, x: &[f64]) -> Vec<f64> {
        match &self.structure {
            Structure::Torus { n, coupling, extra } => {
                let n = *n;
                let mut y = alloc::vec![0.0; x.len()];
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let idx = (i * n + j) * n + k;
                            let nb = [
                                (((i + 1) % n) * n + j) * n + k,
                                (((i + n - 1) % n) * n + j) * n + k,
                                (i * n + (j + 1) % n) * n + k,
                                (i * n + (j + n - 1) % n) * n + k,
                                (i * n + j) * n + (k + 1) % n,
                                (i * n + j) * n + (k + n - 1) % n,
                            ];
                            let s: f64 = nb.iter().map(|&m| x[m]).sum();
                            y[idx] = coupling * (6.0 * x[idx] - s) + extra[idx] * x[idx];
                        }
                    }
                }
                y
            }
            Structure::Tridiagonal { diag, off } => {
                let n = diag.len();
                (0..n)
                    .map(|i| {
                        let mut v = diag[i] * x[i];
                        if i > 0 {
                            v += off[i - 1] * x[i - 1];
                        }
                        if i + 1 < n {
                            v += off[i] * x[i + 1];
                        }
                        v
                    })
                    .collect()
            }
        }
    }

    /// `<f, A f>_M` for a function sampled on the unknowns.
    pub fn quadratic_form(&self, f: &[f64]) -> f64 {
        let g: Vec<f64> = f.iter().zip(&self.measure).map(|(v, m)| v * math::sqrt(*m)).collect();
        let sg = self.apply_symmetric(&g);
        g.iter().zip(&sg).map(|(a, b)| a * b).sum()
    }

    /// Symmetrized matrix as a dense matrix.
    pub fn to_dense(&self) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Non-zero entries `(row, col, value)` of the symmetrized matrix.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        match &self.structure {
            Structure::Torus { n, coupling, extra } => {
                let n = *n;
                for idx in 0..n * n * n {
                    let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
                    out.push((idx, idx, 6.0 * coupling + extra[idx]));
                    let nb = [
                        (((i + 1) % n) * n + j) * n + k,
                        (((i + n - 1) % n) * n + j) * n + k,
                        (i * n + (j + 1) % n) * n + k,
                        (i * n + (j + n - 1) % n) * n + k,
                        (i * n + j) * n + (k + 1) % n,
                        (i * n + j) * n + (k + n - 1) % n,
                    ];
                    for m in nb {
                        out.push((idx, m, -coupling));
                    }
                }
            }
            Structure::Tridiagonal { diag, off } => {
                for (i, d) in diag.iter().enumerate() {
                    if i > 0 {
                        out.push((i, i - 1, off[i - 1]));
                    }
                    out.push((i, i, *d));
                    if i < off.len() {
                        out.push((i, i + 1, off[i]));
                    }
                }
            }
        }
        out
    }

    /// Triplet text dump: a header line, then `row col value` per entry.
    pub fn triplet_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# dim {} entries {}", self.dim(), self.triplets().len());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{i} {j} {v:.17e}");
        }
        s
    }

    /// Relative asymmetry `max |S_ij - S_ji| / max |S_ij|`.
    pub fn relative_asymmetry(&self) -> f64 {
        match &self.structure {
            Structure::Tridiagonal { .. } => 0.0,
            Structure::Torus { .. } => {
                if self.dim() > 5000 {
                    // The stencil is symmetric by construction.
                    return 0.0;
                }
                self.to_dense().relative_asymmetry()
            }
        }
    }

    /// Same operator on the metric `c^2 h`: matrix `/ c^2`, measure `* c^3` (`* c` for radial `u` grids).
    pub fn rescaled(&self, c: f64) -> Result<SpatialOperator> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::invalid("c", "scale must be positive"));
        }
        let inv = 1.0 / (c * c);
        let mut out = self.clone();
        out.unscaled = Some(alloc::boxed::Box::new(self.unscaled_structure().clone()));
        out.structure = match &self.structure {
            Structure::Torus { n, coupling, extra } => Structure::Torus {
                n: *n,
                coupling: coupling * inv,
                extra: extra.iter().map(|v| v * inv).collect(),
            },
            Structure::Tridiagonal { diag, off } => Structure::Tridiagonal {
                diag: diag.iter().map(|v| v * inv).collect(),
                off: off.iter().map(|v| v * inv).collect(),
            },
        };
        // Radial `u` operators carry a one-dimensional measure.
        let factor = match self.form {
            KernelForm::Direct => c * c * c,
            KernelForm::RadialU => c,
        };
        out.measure.iter_mut().for_each(|m| *m *= factor);
        out.radii.iter_mut().for_each(|r| *r *= c);
        out.potential.iter_mut().for_each(|v| *v *= inv);
        out.scale = self.scale * c;
        Ok(out)
    }

    /// Checks positivity without a full decomposition.
    ///
    /// Tridiagonal operators use the `LDL^T` pivots; tori use the smallest
    /// Fourier eigenvalue when the potential is constant and a Cholesky
    /// factorization otherwise.
    pub fn check_positive(&self) -> Result<()> {
        match &self.structure {
            Structure::Tridiagonal { diag, off } => tridiagonal_pivots_positive(diag, off),
            Structure::Torus { .. } => {
                if let Some((_, _, extra)) = self.fourier_data() {
                    if extra > 0.0 {
                        return Ok(());
                    }
                    return Err(Error::NotPositive { pivot: 0, value: extra });
                }
                crate::linalg::Cholesky::new(&self.to_dense()).map(|_| ())
            }
        }
    }
}

/// Positivity of a symmetric tridiagonal matrix through its `LDL^T` pivots.
pub fn tridiagonal_pivots_positive(diag: &[f64], off: &[f64]) -> Result<()> {
    let mut pivot = 0.0;
    for (i, d) in diag.iter().enumerate() {
        pivot = if i == 0 { *d } else { d - off[i - 1] * off[i - 1] / pivot };
        if !(pivot > 0.0) {
            return Err(Error::NotPositive { pivot: i, value: pivot });
        }
    }
    Ok(())
}

/// Same model with `factor` times more points, capped at the default dimension.
pub fn refine(op: &SpatialOperator, factor: usize) -> Result<SpatialOperator> {
    refine_capped(op, factor, DEFAULT_DIMENSION_CAP)
}

/// Same model with `factor` times more points; fails above `cap` unknowns.
pub fn refine_capped(op: &SpatialOperator, factor: usize, cap: usize) -> Result<SpatialOperator> {
    build_capped(op, op.recipe.refined(factor)?, cap)
}

/// Same model and extent with `points` points; fails above `cap` unknowns.
pub fn resample_capped(op: &SpatialOperator, points: usize, cap: usize) -> Result<SpatialOperator> {
    if points == op.recipe.points() {
        return Ok(op.clone());
    }
    build_capped(op, op.recipe.with_points(points)?, cap)
}

fn build_capped(op: &SpatialOperator, recipe: Recipe, cap: usize) -> Result<SpatialOperator> {
    let dim = recipe.dimension();
    if dim > cap {
        return Err(Error::ResourceCap { dim, cap });
    }
    let fresh = recipe.assemble()?;
    if op.scale == 1.0 {
        Ok(fresh)
    } else {
        fresh.rescaled(op.scale)
    }
}

/// Flat-region membership at distance `> 2 h` from the curved shell.
pub(crate) fn flat_flags(radii: &[f64], spacing: f64, inner: f64, outer: Option<f64>) -> Vec<bool> {
    radii
        .iter()
        .map(|&r| r < inner - 2.0 * spacing || outer.is_some_and(|o| r > o + 2.0 * spacing))
        .collect()
}
