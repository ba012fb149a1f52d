//! Radial conformal models in the `u = r phi` form.
//!
//! For `h = Omega^2 delta` the operator `-Laplace_h + xi R` is unitarily
//! equivalent (conjugation by `Omega^(3/2)`) to
//! `Omega^-1 (-Laplace) Omega^-1 + (xi - 1/8) R` on flat `L^2`. Its s-wave in
//! the `u = r phi` variable is `D L D + (xi - 1/8) R` with `D = diag(1/Omega)`
//! and `L = tridiag(-1, 2, -1) / h^2` with Dirichlet ends.

use alloc::vec::Vec;

use super::{
    flat_flags, tridiagonal_pivots_positive, ConformalOperator, Grid, KernelForm, RadialBoundary, RadialGrid,
    Recipe, SpatialOperator, Structure,
};
use crate::error::{Error, Result};
use crate::geometry::{ConformalFactorModel, ConformalVariant, DEFAULT_MIN_SHELL_POINTS};

fn check_grid(grid: &RadialGrid, model: &ConformalFactorModel) -> Result<()> {
    if grid.boundary != RadialBoundary::Dirichlet {
        return Err(Error::invalid("grid", "conformal models need a Dirichlet radial grid"));
    }
    let d = model.potential().density();
    if grid.r_max <= d.r_outer() {
        return Err(Error::invalid("r_max", "must lie outside the shell"));
    }
    if model.variant() != ConformalVariant::Unit {
        let h = grid.spacing();
        let found = (1..grid.points)
            .map(|i| i as f64 * h)
            .filter(|&r| r >= d.r_inner() && r <= d.r_outer())
            .count();
        if found < DEFAULT_MIN_SHELL_POINTS {
            return Err(Error::UnresolvedShell {
                found,
                required: DEFAULT_MIN_SHELL_POINTS,
            });
        }
    }
    Ok(())
}

fn build(grid: RadialGrid, model: &ConformalFactorModel, xi: f64, operator: ConformalOperator) -> Result<SpatialOperator> {
    check_grid(&grid, model)?;
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let radii: Vec<f64> = (1..grid.points).map(|i| i as f64 * h).collect();
    let n = radii.len();
    let d: Vec<f64> = match operator {
        ConformalOperator::FlatReference => alloc::vec![1.0; n],
        _ => radii.iter().map(|&r| 1.0 / model.omega(r)).collect(),
    };
    let potential: Vec<f64> = match operator {
        ConformalOperator::Model => radii.iter().map(|&r| (xi - 0.125) * model.scalar_curvature(r)).collect(),
        _ => alloc::vec![0.0; n],
    };
    let diag: Vec<f64> = (0..n).map(|i| 2.0 * inv_h2 * d[i] * d[i] + potential[i]).collect();
    let off: Vec<f64> = (0..n - 1).map(|i| -inv_h2 * d[i] * d[i + 1]).collect();
    tridiagonal_pivots_positive(&diag, &off)?;
    let flat = match operator {
        ConformalOperator::FlatReference => alloc::vec![true; n],
        _ if model.variant() == ConformalVariant::Unit => alloc::vec![true; n],
        _ => flat_flags(&radii, h, model.potential().density().r_inner(), None),
    };
    Ok(SpatialOperator {
        structure: Structure::Tridiagonal { diag, off },
        measure: alloc::vec![h; n],
        grid: Grid::Radial(grid),
        radii,
        potential,
        flat,
        form: KernelForm::RadialU,
        recipe: Recipe::RadialConformal {
            grid,
            model: model.clone(),
            xi,
            operator,
        },
        scale: 1.0,
        unscaled: None,
    })
}

/// `Omega^-1 (-d^2/dr^2) Omega^-1 + (xi - 1/8) R` on `u = r phi`, Dirichlet at both ends.
pub fn assemble_radial_conformal(grid: RadialGrid, model: &ConformalFactorModel, xi: f64) -> Result<SpatialOperator> {
    if !xi.is_finite() {
        return Err(Error::invalid("xi", "must be finite"));
    }
    build(grid, model, xi, ConformalOperator::Model)
}

/// Flat `-d^2/dr^2` on the same grid; the reference for the Wick square at flat points.
pub fn assemble_radial_flat(grid: RadialGrid, model: &ConformalFactorModel) -> Result<SpatialOperator> {
    build(grid, model, 0.0, ConformalOperator::FlatReference)
}

/// `Omega^-1 (-d^2/dr^2) Omega^-1` on the same grid.
pub fn assemble_conjugated_flat(grid: RadialGrid, model: &ConformalFactorModel) -> Result<SpatialOperator> {
    build(grid, model, 0.0, ConformalOperator::Conjugated)
}
