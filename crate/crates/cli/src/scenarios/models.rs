//! Operators built from a scenario configuration.

use wickthermo_core::geometry::{ConformalFactorModel, ConformalVariant, ShellDensity, ShellPotential, ShellProfile};
use wickthermo_core::lattice::{
    assemble_quartic_reference, assemble_radial_conformal, assemble_radial_flat, assemble_radial_quartic,
    assemble_torus, EvalPoint, RadialGrid, SpatialOperator, TorusGrid,
};
use wickthermo_core::thermal::{RelativeWick, StationaryState, WickEstimate, WickOptions};
use wickthermo_core::Error as CoreError;

use crate::config::{ModelKind, PointSpec, Profile, ScenarioConfig};
use crate::error::Result;

pub fn shell_potential(config: &ScenarioConfig) -> Result<ShellPotential> {
    let g = &config.geometry;
    let profile = match g.profile {
        Profile::Uniform => ShellProfile::Uniform,
        Profile::SmoothBump => ShellProfile::SmoothBump,
    };
    Ok(ShellPotential::new(ShellDensity::with_total_mass(g.r_inner, g.r_outer, g.mu, profile)?))
}

/// Constant-potential torus with `points` per axis.
pub fn torus_operator(config: &ScenarioConfig, points: usize) -> Result<SpatialOperator> {
    let dim = points.pow(3);
    let cap = config.dimension_cap();
    if dim > cap {
        return Err(CoreError::ResourceCap { dim, cap }.into());
    }
    let grid = TorusGrid::new(config.geometry.side, points)?;
    Ok(assemble_torus(grid, &vec![0.0; dim], config.mass())?)
}

/// Model and reference operators at the finest level.
///
/// `stretch` multiplies the wall radius and the point counts together, so
/// the spacing is unchanged. A torus is its own reference.
pub fn build_pair(config: &ScenarioConfig, xi: f64, stretch: usize) -> Result<(SpatialOperator, SpatialOperator)> {
    let points = config.points() * stretch;
    let variant = match config.model() {
        ModelKind::Torus => {
            let op = torus_operator(config, config.points())?;
            return Ok((op.clone(), op));
        }
        ModelKind::QuarticShell => {
            let potential = shell_potential(config)?;
            let model = assemble_radial_quartic(RadialGrid::two_chart(config.r_match(), points)?, &potential, xi)?;
            let reference =
                assemble_quartic_reference(model.spacing(), config.reference_points() * stretch, potential.nu())?;
            return Ok((model, reference));
        }
        ModelKind::Unit => ConformalVariant::Unit,
        ModelKind::ExpNewton => ConformalVariant::ExpNewton,
        ModelKind::AffineNewton => ConformalVariant::AffineNewton,
    };
    let model = ConformalFactorModel::new(variant, shell_potential(config)?);
    let grid = RadialGrid::dirichlet(config.r_max() * stretch as f64, points)?;
    Ok((assemble_radial_conformal(grid, &model, xi)?, assemble_radial_flat(grid, &model)?))
}

/// Refinement levels (scaled by `stretch`) with the configured cap.
pub fn wick_options(config: &ScenarioConfig, stretch: usize) -> WickOptions {
    let mut options = WickOptions::points(config.levels().iter().map(|p| p * stretch).collect());
    options.dimension_cap = config.dimension_cap();
    options
}

pub fn eval_point(config: &ScenarioConfig) -> EvalPoint {
    match config.point() {
        PointSpec::Center => EvalPoint::Center,
        PointSpec::Node(k) => EvalPoint::Node(k),
    }
}

/// A prepared estimator plus, optionally, the same model with the wall
/// radius doubled at the same spacing.
pub(crate) struct WallPair {
    pub base: RelativeWick,
    pub doubled: Option<RelativeWick>,
}

/// An estimate whose error includes the shift under wall doubling.
pub(crate) struct WallEstimate {
    pub estimate: WickEstimate,
    /// Value with the wall doubled.
    pub doubled: Option<f64>,
    /// Extrapolation error plus the wall shift.
    pub error: f64,
}

impl WallPair {
    pub fn prepare(config: &ScenarioConfig, xi: f64) -> Result<Self> {
        let prepare = |stretch: usize| -> Result<RelativeWick> {
            let (model, reference) = build_pair(config, xi, stretch)?;
            Ok(RelativeWick::prepare(&model, &reference, eval_point(config), &wick_options(config, stretch))?)
        };
        let base = prepare(1)?;
        // The quartic model is closed by its second chart and has no wall.
        let walled = config.model().is_radial() && config.model() != ModelKind::QuarticShell;
        let doubled = if config.checks.rmax_doubling && walled {
            Some(prepare(2)?)
        } else {
            None
        };
        Ok(WallPair { base, doubled })
    }

    pub fn estimate(&self, state: &StationaryState) -> Result<WallEstimate> {
        let estimate = self.base.estimate(state, &StationaryState::Ground)?;
        let doubled = match &self.doubled {
            Some(d) => Some(d.estimate(state, &StationaryState::Ground)?.value),
            None => None,
        };
        let error = estimate.error + doubled.map_or(0.0, |v| (v - estimate.value).abs());
        Ok(WallEstimate {
            estimate,
            doubled,
            error,
        })
    }

    /// Finest-level excess of `state` over the model's ground state.
    pub fn finest_excess(&self, state: &StationaryState) -> Result<f64> {
        let levels = self.base.excess_levels(state)?;
        Ok(*levels.last().expect("at least one level"))
    }
}
