//! Stationary states, renormalized Wick squares and local temperatures.
//!
//! The Wick square at a flat point is the coincidence limit of the state
//! kernel of the model minus the ground kernel of a flat reference operator
//! on the same lattice. Lattice short-distance artifacts cancel in the
//! difference; what remains is extrapolated to zero spacing (Richardson in
//! `h^2`) and, for radial `u = r phi` grids, to the centre (interpolation in
//! `r^2` through the nodes at `2h`, `3h`, `4h`).

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::extrapolate::{error_floor, lagrange_at_zero, polyfit, richardson};
use crate::lattice::{resample_capped, EvalPoint, Grid, KernelForm, Recipe, SpatialOperator, DEFAULT_DIMENSION_CAP};
use crate::math::{self, PI};
use crate::spectral::{decompose_at, kernel_at, kernel_diagonal, KernelMatrix, SpectralDecomposition, SpectralFunction};

/// A stationary quasi-free state.
#[derive(Debug, Clone, PartialEq)]
pub enum StationaryState {
    Ground,
    Kms { beta: f64 },
    /// Ground state with extra occupations `n_i >= 0`, one per mode in
    /// ascending eigenvalue order.
    Perturbed { occupations: Vec<f64> },
}

impl StationaryState {
    pub fn validate(&self) -> Result<()> {
        match self {
            StationaryState::Ground => Ok(()),
            StationaryState::Kms { beta } => {
                if *beta > 0.0 && beta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("beta", "must be positive and finite"))
                }
            }
            StationaryState::Perturbed { occupations } => {
                if occupations.iter().all(|n| *n >= 0.0 && n.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::invalid("occupations", "must be finite and non-negative"))
                }
            }
        }
    }

    /// Spectral function of the full two-point kernel.
    pub fn spectral_function(&self) -> SpectralFunction {
        match self {
            StationaryState::Ground => SpectralFunction::Ground,
            StationaryState::Kms { beta } => SpectralFunction::Thermal { beta: *beta },
            StationaryState::Perturbed { occupations } => SpectralFunction::Perturbed {
                occupations: occupations.clone(),
            },
        }
    }

    /// Spectral function of the kernel minus the ground kernel.
    pub fn excess_function(&self) -> Result<SpectralFunction> {
        match self {
            StationaryState::Ground => Err(Error::invalid("state", "the ground state has no excess")),
            StationaryState::Kms { beta } => Ok(SpectralFunction::Excess { beta: *beta }),
            StationaryState::Perturbed { occupations } => Ok(SpectralFunction::Occupied {
                occupations: occupations.clone(),
            }),
        }
    }
}

/// Full state kernel on every node known to the decomposition.
pub fn state_kernel(state: &StationaryState, dec: &SpectralDecomposition) -> Result<KernelMatrix> {
    state.validate()?;
    crate::spectral::kernel(dec, &state.spectral_function())
}

/// A Wick-square value with its extrapolation error.
#[derive(Debug, Clone, PartialEq)]
pub struct WickEstimate {
    pub value: f64,
    /// Always positive.
    pub error: f64,
    /// Spacings of the refinement levels, coarse to fine.
    pub spacings: Vec<f64>,
    /// Per-level values before the `h^2` extrapolation.
    pub level_values: Vec<f64>,
    pub point: EvalPoint,
    /// Per-level increments shrink under refinement.
    pub converged: bool,
}

impl WickEstimate {
    /// `value` lies below `-factor * error`.
    pub fn is_negative_beyond(&self, factor: f64) -> bool {
        self.value < -factor * self.error
    }

    /// `value >= -error`.
    pub fn is_nonnegative_within_error(&self) -> bool {
        self.value >= -self.error
    }
}

/// Local temperature `T = sqrt(12 w)`, defined only for `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemperatureReading {
    Defined(f64),
    Undefined(f64),
}

impl TemperatureReading {
    pub fn is_defined(&self) -> bool {
        matches!(self, TemperatureReading::Defined(_))
    }

    pub fn temperature(&self) -> Option<f64> {
        match self {
            TemperatureReading::Defined(t) => Some(*t),
            TemperatureReading::Undefined(_) => None,
        }
    }
}

pub fn local_temperature(w: &WickEstimate) -> TemperatureReading {
    temperature_from_value(w.value)
}

pub fn temperature_from_value(w: f64) -> TemperatureReading {
    if w >= 0.0 {
        TemperatureReading::Defined(math::sqrt(12.0 * w))
    } else {
        TemperatureReading::Undefined(w)
    }
}

/// Resolutions of the refinement levels, coarse to fine.
#[derive(Debug, Clone, PartialEq)]
pub enum Refinement {
    /// Integer multiples of the given operator's points.
    Factors(Vec<usize>),
    /// Absolute point counts (points per axis on a torus, radial points
    /// otherwise); the given operator only supplies the model.
    Points(Vec<usize>),
}

impl Refinement {
    fn validate(&self) -> Result<()> {
        let v = match self {
            Refinement::Factors(v) | Refinement::Points(v) => v,
        };
        if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("levels", "refinement levels must be positive and strictly increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        match self {
            Refinement::Factors(v) | Refinement::Points(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point counts for an operator whose resolution is `base`.
    pub fn points(&self, base: usize) -> Vec<usize> {
        match self {
            Refinement::Factors(v) => v.iter().map(|f| f * base).collect(),
            Refinement::Points(v) => v.clone(),
        }
    }
}

/// Refinement schedule for Wick-square extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct WickOptions {
    pub levels: Refinement,
    pub dimension_cap: usize,
}

impl Default for WickOptions {
    fn default() -> Self {
        WickOptions {
            levels: Refinement::Factors(alloc::vec![1, 2, 4]),
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

impl WickOptions {
    pub fn single() -> Self {
        WickOptions {
            levels: Refinement::Factors(alloc::vec![1]),
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }

    pub fn points(levels: Vec<usize>) -> Self {
        WickOptions {
            levels: Refinement::Points(levels),
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

fn at_points(op: &SpatialOperator, points: usize, cap: usize) -> Result<SpatialOperator> {
    resample_capped(op, points, cap)
}

/// Nodes and weights that turn kernel diagonals into a value at the point.
#[derive(Debug, Clone, PartialEq)]
struct PointPlan {
    nodes: Vec<usize>,
    weights: Vec<f64>,
}

fn point_plan(op: &SpatialOperator, point: EvalPoint, require_flat: bool) -> Result<PointPlan> {
    let (nodes, weights) = match (point, op.form()) {
        (EvalPoint::Node(i), KernelForm::Direct) => {
            if i >= op.dim() {
                return Err(Error::MissingNode(i));
            }
            (alloc::vec![i], alloc::vec![1.0])
        }
        (EvalPoint::Node(i), KernelForm::RadialU) => {
            if i >= op.dim() {
                return Err(Error::MissingNode(i));
            }
            let r = op.radii()[i];
            (alloc::vec![i], alloc::vec![1.0 / (4.0 * PI * r * r)])
        }
        (EvalPoint::Center, KernelForm::Direct) => match op.grid() {
            Grid::Radial(_) => (alloc::vec![op.radial_node(0)?], alloc::vec![1.0]),
            Grid::Torus(_) => return Err(Error::Unsupported("a torus has no centre of symmetry")),
        },
        (EvalPoint::Center, KernelForm::RadialU) => {
            let nodes: Vec<usize> = (2..=4).map(|k| op.radial_node(k)).collect::<Result<_>>()?;
            let r2: Vec<f64> = nodes.iter().map(|&i| op.radii()[i] * op.radii()[i]).collect();
            let mut weights = Vec::with_capacity(3);
            for k in 0..3 {
                let mut unit = [0.0; 3];
                unit[k] = 1.0;
                weights.push(lagrange_at_zero(&r2, &unit)? / (4.0 * PI * r2[k]));
            }
            (nodes, weights)
        }
    };
    if require_flat && nodes.iter().any(|&i| !op.is_flat_at(i)) {
        return Err(Error::OutsideFlatRegion);
    }
    Ok(PointPlan { nodes, weights })
}

fn plan_value(plan: &PointPlan, dec: &SpectralDecomposition, f: &SpectralFunction) -> Result<f64> {
    let diag = kernel_diagonal(dec, f, &plan.nodes)?;
    Ok(plan.weights.iter().zip(&diag).map(|(w, d)| w * d).sum())
}

/// Ground-state kernel of a Dirichlet flat ball minus the free kernel at its
/// centre, `-1 / (48 R^2)` for proper radius `R`; zero for other references.
pub fn reference_offset(op: &SpatialOperator) -> f64 {
    match op.recipe() {
        Recipe::QuarticReference { nodes, nu, .. } => {
            let r_proper = nu * nu * (*nodes as f64) * op.spacing();
            -1.0 / (48.0 * r_proper * r_proper)
        }
        _ => 0.0,
    }
}

struct Level {
    spacing: f64,
    model_plan: PointPlan,
    model_dec: SpectralDecomposition,
    reference: Option<(PointPlan, SpectralDecomposition)>,
    offset: f64,
}

/// Decompositions of a model and its reference on every refinement level,
/// reusable across states.
pub struct RelativeWick {
    point: EvalPoint,
    levels: Vec<Level>,
}

impl RelativeWick {
    pub fn prepare(
        model: &SpatialOperator,
        reference: &SpatialOperator,
        point: EvalPoint,
        options: &WickOptions,
    ) -> Result<RelativeWick> {
        options.levels.validate()?;
        if model.form() != reference.form() {
            return Err(Error::GridMismatch("model and reference use different kernel forms"));
        }
        let (hm, hr) = (model.spacing(), reference.spacing());
        if math::abs(hm - hr) > 1e-12 * hm {
            return Err(Error::GridMismatch("model and reference need the same spacing"));
        }
        let same = model == reference;
        let base = model.recipe().points();
        let model_points = options.levels.points(base);
        let reference_base = reference.recipe().points();
        let reference_points = model_points
            .iter()
            .map(|&p| {
                if (p * reference_base).is_multiple_of(base) {
                    Ok(p * reference_base / base)
                } else {
                    Err(Error::GridMismatch("reference resolution is not commensurate with the model levels"))
                }
            })
            .collect::<Result<Vec<usize>>>()?;
        let mut levels = Vec::with_capacity(options.levels.len());
        for (&pm, &pr) in model_points.iter().zip(&reference_points) {
            let m = at_points(model, pm, options.dimension_cap)?;
            let model_plan = point_plan(&m, point, true)?;
            let model_dec = decompose_at(&m, &model_plan.nodes)?;
            let (reference, offset) = if same {
                (None, 0.0)
            } else {
                let r = at_points(reference, pr, options.dimension_cap)?;
                if math::abs(r.spacing() - m.spacing()) > 1e-12 * m.spacing() {
                    return Err(Error::GridMismatch("model and reference need the same spacing"));
                }
                let plan = point_plan(&r, point, true)?;
                if plan.nodes.iter().zip(&model_plan.nodes).any(|(a, b)| {
                    let (ra, rb) = (r.radii().get(*a), m.radii().get(*b));
                    ra.zip(rb).is_some_and(|(x, y)| math::abs(x - y) > 1e-12 * x.max(*y))
                }) {
                    return Err(Error::GridMismatch("evaluation nodes differ between model and reference"));
                }
                let dec = decompose_at(&r, &plan.nodes)?;
                (Some((plan, dec)), reference_offset(&r))
            };
            levels.push(Level {
                spacing: m.spacing(),
                model_plan,
                model_dec,
                reference,
                offset,
            });
        }
        Ok(RelativeWick { point, levels })
    }

    pub fn point(&self) -> EvalPoint {
        self.point
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.spacing).collect()
    }

    /// Per-level values of `f_model - f_reference` at the point.
    fn level_values(&self, model_f: &SpectralFunction, reference_f: &SpectralFunction) -> Result<Vec<f64>> {
        self.levels
            .iter()
            .map(|l| {
                let m = plan_value(&l.model_plan, &l.model_dec, model_f)?;
                let r = match &l.reference {
                    None => plan_value(&l.model_plan, &l.model_dec, reference_f)?,
                    Some((plan, dec)) => {
                        if l.offset != 0.0 && *reference_f != SpectralFunction::Ground {
                            return Err(Error::Unsupported("ball reference correction is known for the ground state only"));
                        }
                        plan_value(plan, dec, reference_f)? - l.offset
                    }
                };
                Ok(m - r)
            })
            .collect()
    }

    fn finish(&self, values: Vec<f64>) -> Result<WickEstimate> {
        let spacings = self.spacings();
        let ex = richardson(&spacings, &values)?;
        Ok(WickEstimate {
            value: ex.value,
            error: ex.error,
            spacings,
            level_values: values,
            point: self.point,
            converged: ex.converged,
        })
    }

    /// `w` for `state` on the model against `reference_state` on the reference.
    pub fn estimate(&self, state: &StationaryState, reference_state: &StationaryState) -> Result<WickEstimate> {
        state.validate()?;
        reference_state.validate()?;
        let values = self.level_values(&state.spectral_function(), &reference_state.spectral_function())?;
        self.finish(values)
    }

    /// Excess of `state` over the model's own ground state, per level.
    pub fn excess_levels(&self, state: &StationaryState) -> Result<Vec<f64>> {
        let f = state.excess_function()?;
        self.levels
            .iter()
            .map(|l| plan_value(&l.model_plan, &l.model_dec, &f))
            .collect()
    }
}

/// Renormalized Wick square by same-lattice differencing against `reference`.
pub fn wick_square_relative(
    model: &SpatialOperator,
    reference: &SpatialOperator,
    state: &StationaryState,
    reference_state: &StationaryState,
    point: EvalPoint,
    options: &WickOptions,
) -> Result<WickEstimate> {
    RelativeWick::prepare(model, reference, point, options)?.estimate(state, reference_state)
}

/// Diagonal of the excess kernel at the point; no reference needed.
pub fn wick_excess(
    op: &SpatialOperator,
    dec: &SpectralDecomposition,
    state: &StationaryState,
    point: EvalPoint,
) -> Result<WickEstimate> {
    state.validate()?;
    let f = state.excess_function()?;
    let plan = point_plan(op, point, false)?;
    let value = plan_value(&plan, dec, &f)?;
    Ok(WickEstimate {
        value,
        error: error_floor(value),
        spacings: alloc::vec![op.spacing()],
        level_values: alloc::vec![value],
        point,
        converged: true,
    })
}

/// Outcome of the monotonicity, Lipschitz and tail checks on a sweep.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepChecks {
    pub strictly_decreasing: bool,
    pub monotonicity_violations: usize,
    pub lipschitz_violations: usize,
    pub lipschitz_pairs: usize,
    /// Largest `|w(b) - w(b0)| / bound`; at most one when the bound holds.
    pub worst_lipschitz_ratio: f64,
    pub tail_violations: usize,
    pub tail_pairs: usize,
    /// Largest `(w(b) - w_inf) / ((b0 / b)(w(b0) - w_inf))`.
    pub worst_tail_ratio: f64,
}

impl SweepChecks {
    pub fn passed(&self) -> bool {
        self.strictly_decreasing && self.lipschitz_violations == 0 && self.tail_violations == 0
    }

    pub fn merge(&mut self, other: &SweepChecks) {
        self.strictly_decreasing &= other.strictly_decreasing;
        self.monotonicity_violations += other.monotonicity_violations;
        self.lipschitz_violations += other.lipschitz_violations;
        self.lipschitz_pairs += other.lipschitz_pairs;
        self.worst_lipschitz_ratio = self.worst_lipschitz_ratio.max(other.worst_lipschitz_ratio);
        self.tail_violations += other.tail_violations;
        self.tail_pairs += other.tail_pairs;
        self.worst_tail_ratio = self.worst_tail_ratio.max(other.worst_tail_ratio);
    }
}

/// Checks a sequence of excess values `e(beta) = w(beta) - w_inf`.
///
/// `quarter[i]` is the excess at `betas[i] / 4`. Rounding slack is
/// `1e-12` of the largest excess involved.
pub fn check_sweep(betas: &[f64], excess: &[f64], quarter: &[f64]) -> SweepChecks {
    let n = betas.len();
    let mut c = SweepChecks {
        strictly_decreasing: true,
        ..SweepChecks::default()
    };
    let slack = 1e-12 * quarter.iter().chain(excess).fold(0.0f64, |a, v| a.max(math::abs(*v)));
    for i in 0..n.saturating_sub(1) {
        if !(excess[i + 1] < excess[i]) {
            c.strictly_decreasing = false;
            c.monotonicity_violations += 1;
        }
    }
    for i in 0..n {
        let b0 = betas[i];
        for j in 0..n {
            if j == i {
                continue;
            }
            let b = betas[j];
            if b >= b0 / 2.0 {
                let bound = 2.0 / b0 * math::abs(b - b0) * quarter[i];
                let diff = math::abs(excess[j] - excess[i]);
                c.lipschitz_pairs += 1;
                if bound > 0.0 {
                    c.worst_lipschitz_ratio = c.worst_lipschitz_ratio.max(diff / bound);
                }
                if diff > bound + slack {
                    c.lipschitz_violations += 1;
                }
            }
            if b > b0 {
                let bound = b0 / b * excess[i];
                c.tail_pairs += 1;
                if bound > 0.0 {
                    c.worst_tail_ratio = c.worst_tail_ratio.max(excess[j] / bound);
                }
                if excess[j] > bound + slack {
                    c.tail_violations += 1;
                }
            }
        }
    }
    c
}

/// One row of a beta sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub beta: f64,
    pub estimate: WickEstimate,
    pub temperature: TemperatureReading,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSweep {
    pub entries: Vec<SweepEntry>,
    /// The `beta -> infinity` value.
    pub ground: WickEstimate,
    /// Checks on the per-level lattice values (exact inequalities there).
    pub checks: SweepChecks,
}

/// KMS states over an increasing grid of `beta` against the reference ground state.
pub fn beta_sweep(prepared: &RelativeWick, betas: &[f64]) -> Result<BetaSweep> {
    if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
        return Err(Error::invalid("betas", "must be positive and finite"));
    }
    if betas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("betas", "must be strictly increasing"));
    }
    let ground = prepared.estimate(&StationaryState::Ground, &StationaryState::Ground)?;
    let mut entries = Vec::with_capacity(betas.len());
    let mut excess_by_level: Vec<Vec<f64>> = alloc::vec![Vec::new(); prepared.levels.len()];
    let mut quarter_by_level: Vec<Vec<f64>> = alloc::vec![Vec::new(); prepared.levels.len()];
    for &beta in betas {
        let state = StationaryState::Kms { beta };
        let estimate = prepared.estimate(&state, &StationaryState::Ground)?;
        let ex = prepared.excess_levels(&state)?;
        let q = prepared.excess_levels(&StationaryState::Kms { beta: beta / 4.0 })?;
        for (l, (e, qq)) in ex.iter().zip(&q).enumerate() {
            excess_by_level[l].push(*e);
            quarter_by_level[l].push(*qq);
        }
        entries.push(SweepEntry {
            beta,
            temperature: local_temperature(&estimate),
            estimate,
        });
    }
    let mut checks = SweepChecks {
        strictly_decreasing: true,
        ..SweepChecks::default()
    };
    for (e, q) in excess_by_level.iter().zip(&quarter_by_level) {
        checks.merge(&check_sweep(betas, e, q));
    }
    Ok(BetaSweep { entries, ground, checks })
}

/// Result of the constant-lapse scaling identity check.
#[derive(Debug, Clone, PartialEq)]
pub struct LapseCheck {
    pub c: f64,
    pub w: f64,
    pub w_scaled: f64,
    /// `|c^2 w' - w| / |w|`.
    pub residual: f64,
}

/// Compares `w(beta)` with `c^2 w'(c beta)` on the metric rescaled by `c^2`.
pub fn lapse_rescale_check(
    model: &SpatialOperator,
    reference: &SpatialOperator,
    c: f64,
    beta: f64,
    point: EvalPoint,
    options: &WickOptions,
) -> Result<LapseCheck> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid("c", "must be positive"));
    }
    let state = StationaryState::Kms { beta };
    let w = wick_square_relative(model, reference, &state, &StationaryState::Ground, point, options)?.value;
    let (ms, rs) = (model.rescaled(c)?, reference.rescaled(c)?);
    let scaled_state = StationaryState::Kms { beta: c * beta };
    let w_scaled = wick_square_relative(&ms, &rs, &scaled_state, &StationaryState::Ground, point, options)?.value;
    let residual = if w == 0.0 {
        math::abs(c * c * w_scaled)
    } else {
        math::abs(c * c * w_scaled - w) / math::abs(w)
    };
    Ok(LapseCheck { c, w, w_scaled, residual })
}

/// Options for the asymptotic-coefficient estimate of `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFitOptions {
    /// Fit window in proper distance from the centre.
    pub window: (f64, f64),
    pub levels: Vec<usize>,
    /// Polynomial degree in the separation.
    pub degree: usize,
    /// Largest number of separations sampled in the window.
    pub samples: usize,
    pub dimension_cap: usize,
}

impl MassFitOptions {
    pub fn new(window: (f64, f64)) -> Self {
        MassFitOptions {
            window,
            levels: alloc::vec![1, 2, 4],
            degree: 1,
            samples: 24,
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

/// Estimate of `w` from the short-distance expansion
/// `4 pi^2 G(x, 0) = rho^-2 + 4 pi^2 w + O(rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFit {
    pub w_fit: f64,
    pub fit_error: f64,
    /// Proper separations used in the fit.
    pub separations: Vec<f64>,
    /// Extrapolated `4 pi^2 G - rho^-2` at each separation.
    pub samples: Vec<f64>,
    pub sample_errors: Vec<f64>,
    pub rms_residual: f64,
}

/// Proper length per coordinate length in the flat core of a radial model.
fn proper_factor(op: &SpatialOperator) -> Result<f64> {
    match op.recipe() {
        Recipe::Quartic { potential, .. } => Ok(potential.nu() * potential.nu()),
        Recipe::QuarticReference { nu, .. } => Ok(nu * nu),
        Recipe::RadialConformal { .. } => Ok(1.0),
        Recipe::Torus { .. } => Err(Error::Unsupported("the mass-coefficient fit needs a radial model")),
    }
}

/// `4 pi^2 G(r_k, 0) - rho_k^-2` at the sample nodes of one level.
fn level_samples(op: &SpatialOperator, f: &SpectralFunction, base_nodes: &[usize], factor: usize, p: f64) -> Result<Vec<f64>> {
    let sample_idx: Vec<usize> = base_nodes
        .iter()
        .map(|k| op.radial_node(k * factor))
        .collect::<Result<_>>()?;
    let (near, near_weights): (Vec<usize>, Vec<f64>) = match op.form() {
        KernelForm::Direct => (alloc::vec![op.radial_node(0)?], alloc::vec![1.0]),
        KernelForm::RadialU => {
            let nodes: Vec<usize> = (2..=4).map(|k| op.radial_node(k)).collect::<Result<_>>()?;
            let r2: Vec<f64> = nodes.iter().map(|&i| op.radii()[i] * op.radii()[i]).collect();
            let mut w = Vec::new();
            for k in 0..3 {
                let mut unit = [0.0; 3];
                unit[k] = 1.0;
                w.push(lagrange_at_zero(&r2, &unit)?);
            }
            (nodes, w)
        }
    };
    let mut rows = near.clone();
    rows.extend(&sample_idx);
    let dec = decompose_at(op, &rows)?;
    let k = kernel_at(&dec, f, &rows)?;
    let nn = near.len();
    Ok(sample_idx
        .iter()
        .enumerate()
        .map(|(s, &i)| {
            let r = op.radii()[i];
            let g = match op.form() {
                KernelForm::Direct => k.values[(nn + s, 0)],
                KernelForm::RadialU => (0..nn)
                    .map(|m| {
                        let rp = op.radii()[near[m]];
                        near_weights[m] * k.values[(nn + s, m)] / (4.0 * PI * r * rp)
                    })
                    .sum(),
            };
            let rho = p * r;
            4.0 * PI * PI * g - 1.0 / (rho * rho)
        })
        .collect())
}

/// Fits the short-distance expansion of `G(x, centre)` in a window of the
/// flat core and returns the constant term as an estimate of `w`.
///
/// `fit_error` adds the statistical error of the intercept, the propagated
/// refinement error of the samples, and the shift of the intercept when the
/// polynomial degree is raised by one.
pub fn mass_coefficient_estimate(
    model: &SpatialOperator,
    state: &StationaryState,
    options: &MassFitOptions,
) -> Result<MassFit> {
    state.validate()?;
    if options.levels.is_empty() || options.levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("levels", "refinement factors must be strictly increasing"));
    }
    let p = proper_factor(model)?;
    let h0 = model.spacing();
    let (lo, hi) = options.window;
    if !(lo > 0.0) || !(hi > lo) {
        return Err(Error::invalid("window", "need 0 < lower < upper"));
    }
    if hi < 1.5 * lo {
        return Err(Error::IllConditionedFit("fit window too narrow"));
    }
    if lo < 3.0 * h0 * p {
        return Err(Error::IllConditionedFit("window starts closer than three grid spacings"));
    }
    let max_k = libm::floor((hi / p) / h0) as usize;
    let min_k = libm::ceil((lo / p) / h0) as usize;
    for k in min_k..=max_k {
        let i = model.radial_node(k)?;
        if !model.is_flat_at(i) {
            return Err(Error::OutsideFlatRegion);
        }
    }
    let count = max_k + 1 - min_k;
    let want = options.samples.min(count);
    if want < options.degree + 3 {
        return Err(Error::IllConditionedFit("too few separations in the window"));
    }
    let base_nodes: Vec<usize> = (0..want)
        .map(|s| min_k + (s * (count - 1)) / (want - 1).max(1))
        .collect();
    let f = state.spectral_function();
    let mut per_level: Vec<Vec<f64>> = Vec::new();
    let mut spacings = Vec::new();
    for &factor in &options.levels {
        let op = at_points(model, factor * model.recipe().points(), options.dimension_cap)?;
        spacings.push(op.spacing());
        per_level.push(level_samples(&op, &f, &base_nodes, factor, p)?);
    }
    let mut samples = Vec::with_capacity(want);
    let mut sample_errors = Vec::with_capacity(want);
    for s in 0..want {
        let vals: Vec<f64> = per_level.iter().map(|v| v[s]).collect();
        let ex = richardson(&spacings, &vals)?;
        samples.push(ex.value);
        sample_errors.push(ex.error);
    }
    let separations: Vec<f64> = base_nodes
        .iter()
        .map(|&k| p * model.radii()[model.radial_node(k).unwrap_or(0)])
        .collect();
    let fit = polyfit(&separations, &samples, options.degree)?;
    // Sensitivity of the intercept to each sample.
    let mut propagated = 0.0;
    for s in 0..want {
        let mut unit = alloc::vec![0.0; want];
        unit[s] = 1.0;
        let c0 = polyfit(&separations, &unit, options.degree)?.coefficients[0];
        propagated += math::abs(c0) * sample_errors[s];
    }
    let model_shift = match polyfit(&separations, &samples, options.degree + 1) {
        Ok(higher) => math::abs(higher.coefficients[0] - fit.coefficients[0]),
        Err(_) => 0.0,
    };
    let scale = 4.0 * PI * PI;
    let w_fit = fit.coefficients[0] / scale;
    let fit_error = (fit.standard_errors[0] + propagated + model_shift) / scale + error_floor(w_fit);
    Ok(MassFit {
        w_fit,
        fit_error,
        separations,
        samples,
        sample_errors,
        rms_residual: fit.rms_residual,
    })
}
