//! Periodic cubic lattices.

use alloc::vec::Vec;

use super::{Grid, KernelForm, Recipe, SpatialOperator, Structure, TorusGrid, TorusPotential};
use crate::error::{Error, Result};

/// `-Laplace + V + m^2` with the 7-point periodic stencil and measure `h^3`.
///
/// `potential` holds one non-negative sample per lattice point in
/// `TorusGrid::index` order.
pub fn assemble_torus(grid: TorusGrid, potential: &[f64], mass: f64) -> Result<SpatialOperator> {
    let n = grid.len();
    if potential.len() != n {
        return Err(Error::invalid("potential", "one sample per lattice point is required"));
    }
    if potential.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid("potential", "samples must be finite and non-negative"));
    }
    if !(mass >= 0.0) || !mass.is_finite() {
        return Err(Error::invalid("mass", "must be finite and non-negative"));
    }
    let m2 = mass * mass;
    if m2 == 0.0 && potential.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroMode("massless torus without potential has a constant zero mode"));
    }
    let h = grid.spacing();
    let extra: Vec<f64> = potential.iter().map(|v| v + m2).collect();
    let first = potential[0];
    let recipe_potential = if potential.iter().all(|v| *v == first) {
        TorusPotential::Constant(first)
    } else {
        TorusPotential::Samples(potential.to_vec())
    };
    Ok(SpatialOperator {
        structure: Structure::Torus {
            n: grid.points_per_axis,
            coupling: 1.0 / (h * h),
            extra: extra.clone(),
        },
        measure: alloc::vec![h * h * h; n],
        grid: Grid::Torus(grid),
        radii: Vec::new(),
        potential: extra,
        flat: alloc::vec![true; n],
        form: KernelForm::Direct,
        recipe: Recipe::Torus {
            grid,
            potential: recipe_potential,
            mass,
        },
        scale: 1.0,
        unscaled: None,
    })
}
