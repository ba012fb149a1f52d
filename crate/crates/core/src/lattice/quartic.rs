//! The compactified quartic shell `h = U^4 delta` on two charts.
//!
//! The inner chart covers `r in [0, r_match]` with nodes `r_i = i h`,
//! `i = 0..=N`. Outside the shell `U = mu / r`, and the inversion
//! `s = mu^2 / r` turns `h` into the flat metric, so the outer chart is a flat
//! ball `s in [0, s_match]` with `s_match = mu^2 / r_match` and nodes
//! `s_j = j s_match / N`, `j = 0..N`. The node at `r_match` is shared.
//!
//! Both charts use a vertex-centred finite-volume discretization of the
//! s-wave quadratic form `4 pi int (U^2 r^2 phi'^2 + xi R U^6 r^2 phi^2) dr`:
//! cell masses `4 pi U^6 (r_+^3 - r_-^3) / 3`, midpoint conductances
//! `4 pi U^2 r_mid^2 / h`. Continuity of the value and of the
//! metric-weighted flux at the match are built in. Unknowns are ordered along
//! the chain (inner chart outward, then outer chart inward), which makes the
//! symmetrized matrix tridiagonal.

use alloc::vec::Vec;

use super::{
    flat_flags, tridiagonal_pivots_positive, Grid, KernelForm, RadialBoundary, RadialGrid, Recipe, SpatialOperator,
    Structure,
};
use crate::error::{Error, Result};
use crate::geometry::{ShellPotential, DEFAULT_MIN_SHELL_POINTS};
use crate::math::{self, PI};

/// `r_match = QUARTIC_MATCH_FACTOR * r_outer`.
pub const QUARTIC_MATCH_FACTOR: f64 = 2.0;

fn shell_volume(lo: f64, hi: f64) -> f64 {
    4.0 * PI * (hi * hi * hi - lo * lo * lo) / 3.0
}

/// Symmetrize a finite-volume chain with masses and conductances.
///
/// `links[i]` connects unknowns `i` and `i + 1`; `boundary` is an extra
/// conductance to a Dirichlet node after the last unknown.
fn chain(masses: &[f64], links: &[f64], boundary: f64, potential: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = masses.len();
    let mut diag: Vec<f64> = potential.to_vec();
    for (i, c) in links.iter().enumerate() {
        diag[i] += c / masses[i];
        diag[i + 1] += c / masses[i + 1];
    }
    diag[n - 1] += boundary / masses[n - 1];
    let off = links
        .iter()
        .enumerate()
        .map(|(i, c)| -c / math::sqrt(masses[i] * masses[i + 1]))
        .collect();
    (diag, off)
}

/// `-Laplace_h + xi R` for `h = U^4 delta` on the two-chart compactification.
///
/// `grid.r_max` is the matching radius and must be at least
/// `QUARTIC_MATCH_FACTOR * r_outer`.
pub fn assemble_radial_quartic(grid: RadialGrid, potential: &ShellPotential, xi: f64) -> Result<SpatialOperator> {
    if grid.boundary != RadialBoundary::TwoChart {
        return Err(Error::invalid("grid", "the quartic shell needs a two-chart grid"));
    }
    if !(xi > 0.0) || xi > 1.0 / 6.0 {
        return Err(Error::invalid(
            "xi",
            "coupling must lie in (0, 1/6]; xi = 0 leaves a constant zero mode on the compact manifold",
        ));
    }
    let density = potential.density();
    let r_match = grid.r_max;
    if r_match < QUARTIC_MATCH_FACTOR * density.r_outer() * (1.0 - 1e-12) {
        return Err(Error::invalid("r_max", "matching radius must be at least twice the outer shell radius"));
    }
    let n = grid.points;
    let h = grid.spacing();
    let found = (0..=n)
        .map(|i| i as f64 * h)
        .filter(|&r| r >= density.r_inner() && r <= density.r_outer())
        .count();
    if found < DEFAULT_MIN_SHELL_POINTS {
        return Err(Error::UnresolvedShell {
            found,
            required: DEFAULT_MIN_SHELL_POINTS,
        });
    }
    let mu = potential.mu();
    let s_match = mu * mu / r_match;
    let hs = s_match / n as f64;
    let u = |r: f64| potential.eval(r);

    let mut masses = Vec::with_capacity(2 * n + 1);
    let mut radii = Vec::with_capacity(2 * n + 1);
    let mut pot = Vec::with_capacity(2 * n + 1);
    for i in 0..=n {
        let r = i as f64 * h;
        let lo = (r - 0.5 * h).max(0.0);
        let hi = if i == n { r } else { r + 0.5 * h };
        let mut m = 0.0;
        // Split each cell at the shell seams so the mass integrand stays smooth.
        let seams = [density.r_inner(), density.r_outer()];
        let mut a = lo;
        for cut in seams.iter().copied().filter(|c| *c > lo && *c < hi).chain(core::iter::once(hi)) {
            m += math::powi(u(0.5 * (a + cut)), 6) * shell_volume(a, cut);
            a = cut;
        }
        if i == n {
            m += shell_volume(s_match - 0.5 * hs, s_match);
        }
        masses.push(m);
        radii.push(r);
        pot.push(xi * potential_curvature(potential, r));
    }
    for j in (0..n).rev() {
        let s = j as f64 * hs;
        masses.push(shell_volume((s - 0.5 * hs).max(0.0), s + 0.5 * hs));
        radii.push(if j == 0 { f64::INFINITY } else { mu * mu / s });
        pot.push(0.0);
    }
    let mut links = Vec::with_capacity(2 * n);
    for i in 0..n {
        let rm = (i as f64 + 0.5) * h;
        let um = u(rm);
        links.push(4.0 * PI * um * um * rm * rm / h);
    }
    for j in (0..n).rev() {
        let sm = (j as f64 + 0.5) * hs;
        links.push(4.0 * PI * sm * sm / hs);
    }
    let (diag, off) = chain(&masses, &links, 0.0, &pot);
    tridiagonal_pivots_positive(&diag, &off)?;
    let flat = flat_flags(&radii, h, density.r_inner(), Some(density.r_outer()));
    Ok(SpatialOperator {
        structure: Structure::Tridiagonal { diag, off },
        measure: masses,
        grid: Grid::Radial(grid),
        radii,
        potential: pot,
        flat,
        form: KernelForm::Direct,
        recipe: Recipe::Quartic {
            grid,
            potential: potential.clone(),
            xi,
        },
        scale: 1.0,
        unscaled: None,
    })
}

fn potential_curvature(potential: &ShellPotential, r: f64) -> f64 {
    32.0 * PI * potential.density().density(r) / math::powi(potential.eval(r), 5)
}

/// Flat ball with metric `nu^4 delta`, spacing `h`, Dirichlet at `r = nodes * h`.
///
/// Near the centre it coincides node by node with the quartic model of the
/// same spacing, which makes it the same-lattice reference for the Wick
/// square at the centre.
pub fn assemble_quartic_reference(spacing: f64, nodes: usize, nu: f64) -> Result<SpatialOperator> {
    if !(spacing > 0.0) {
        return Err(Error::invalid("spacing", "must be positive"));
    }
    if !(nu > 0.0) {
        return Err(Error::invalid("nu", "must be positive"));
    }
    if nodes < 8 {
        return Err(Error::invalid("nodes", "at least 8 nodes are required"));
    }
    let h = spacing;
    let nu2 = nu * nu;
    let nu6 = nu2 * nu2 * nu2;
    let radii: Vec<f64> = (0..nodes).map(|i| i as f64 * h).collect();
    let masses: Vec<f64> = radii
        .iter()
        .map(|&r| nu6 * shell_volume((r - 0.5 * h).max(0.0), r + 0.5 * h))
        .collect();
    let links: Vec<f64> = (0..nodes - 1)
        .map(|i| {
            let rm = (i as f64 + 0.5) * h;
            4.0 * PI * nu2 * rm * rm / h
        })
        .collect();
    let rb = (nodes as f64 - 0.5) * h;
    let boundary = 4.0 * PI * nu2 * rb * rb / h;
    let pot = alloc::vec![0.0; nodes];
    let (diag, off) = chain(&masses, &links, boundary, &pot);
    tridiagonal_pivots_positive(&diag, &off)?;
    let grid = RadialGrid::dirichlet(nodes as f64 * h, nodes)?;
    Ok(SpatialOperator {
        structure: Structure::Tridiagonal { diag, off },
        measure: masses,
        grid: Grid::Radial(grid),
        radii,
        potential: pot,
        flat: alloc::vec![true; nodes],
        form: KernelForm::Direct,
        recipe: Recipe::QuarticReference {
            spacing,
            nodes,
            nu,
        },
        scale: 1.0,
        unscaled: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ShellDensity, ShellProfile};
    use crate::lattice::refine;
    use crate::linalg::tridiagonal_eigen;

    fn shell() -> ShellPotential {
        ShellPotential::new(ShellDensity::with_total_mass(1.0, 2.0, 1.0, ShellProfile::SmoothBump).unwrap())
    }

    fn eigenvalues(op: &SpatialOperator, count: usize) -> Vec<f64> {
        match op.structure() {
            Structure::Tridiagonal { diag, off } => {
                tridiagonal_eigen(diag, off, &[]).unwrap().eigenvalues[..count].to_vec()
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn rejects_invalid_couplings_and_grids() {
        let g = RadialGrid::two_chart(4.0, 200).unwrap();
        assert!(assemble_radial_quartic(g, &shell(), 0.0).is_err());
        assert!(assemble_radial_quartic(g, &shell(), 0.2).is_err());
        assert!(assemble_radial_quartic(g, &shell(), 1.0 / 6.0).is_ok());
        assert!(assemble_radial_quartic(RadialGrid::two_chart(3.0, 200).unwrap(), &shell(), 0.05).is_err());
        assert!(assemble_radial_quartic(RadialGrid::dirichlet(4.0, 200).unwrap(), &shell(), 0.05).is_err());
        assert!(matches!(
            assemble_radial_quartic(RadialGrid::two_chart(4.0, 40).unwrap(), &shell(), 0.05),
            Err(Error::UnresolvedShell { .. })
        ));
    }

    #[test]
    fn smallest_eigenvalue_is_positive() {
        let op = assemble_radial_quartic(RadialGrid::two_chart(4.0, 400).unwrap(), &shell(), 0.05).unwrap();
        assert_eq!(op.dim(), 801);
        let ev = eigenvalues(&op, 1);
        assert!(ev[0] > 0.0, "{ev:?}");
        op.check_positive().unwrap();
    }

    #[test]
    fn eigenvalues_converge_at_second_order() {
        let coarse = assemble_radial_quartic(RadialGrid::two_chart(4.0, 200).unwrap(), &shell(), 0.05).unwrap();
        let mid = refine(&coarse, 2).unwrap();
        let fine = refine(&mid, 2).unwrap();
        let (a, b, c) = (eigenvalues(&coarse, 4), eigenvalues(&mid, 4), eigenvalues(&fine, 4));
        for k in 0..4 {
            let ratio = (a[k] - b[k]) / (b[k] - c[k]);
            assert!(ratio > 3.5 && ratio < 4.5, "mode {k}: ratio {ratio}");
        }
    }

    #[test]
    fn volume_matches_the_compact_manifold() {
        // Total volume is int U^6 d^3x over the inner chart plus the flat ball of radius s_match.
        let p = shell();
        let op = assemble_radial_quartic(RadialGrid::two_chart(4.0, 800).unwrap(), &p, 0.05).unwrap();
        let total: f64 = op.measure().iter().sum();
        let n = 200_000;
        let h = 4.0 / n as f64;
        let inner: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                4.0 * PI * r * r * p.eval(r).powi(6) * h
            })
            .sum();
        let s_match = p.mu() * p.mu() / 4.0;
        let want = inner + 4.0 * PI * s_match.powi(3) / 3.0;
        assert!((total - want).abs() < 1e-4 * want, "{total} vs {want}");
    }

    #[test]
    fn flat_ball_reference_reproduces_bessel_spectrum() {
        // Dirichlet ball of proper radius nu^2 R: lambda_k = (k pi / (nu^2 R))^2.
        let nu = 0.7;
        let mut errs = Vec::new();
        for nodes in [200, 400] {
            let op = assemble_quartic_reference(5.0 / nodes as f64, nodes, nu).unwrap();
            let ev = eigenvalues(&op, 3);
            let rp = nu * nu * 5.0;
            let e = (0..3)
                .map(|k| ((ev[k] - ((k + 1) as f64 * PI / rp).powi(2)) / ev[k]).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[1] < 1e-4);
        assert!((errs[0] / errs[1] - 4.0).abs() < 0.3, "{errs:?}");
    }

    #[test]
    fn reference_coincides_with_model_near_centre() {
        let p = shell();
        let model = assemble_radial_quartic(RadialGrid::two_chart(4.0, 400).unwrap(), &p, 0.05).unwrap();
        let reference = assemble_quartic_reference(0.01, 1000, p.nu()).unwrap();
        let (Structure::Tridiagonal { diag: d1, off: o1 }, Structure::Tridiagonal { diag: d2, off: o2 }) =
            (model.structure(), reference.structure())
        else {
            unreachable!()
        };
        for i in 0..90 {
            assert!((d1[i] - d2[i]).abs() <= 1e-12 * d2[i].abs());
            assert!((o1[i] - o2[i]).abs() <= 1e-12 * o2[i].abs());
            assert!((model.measure()[i] - reference.measure()[i]).abs() <= 1e-12 * reference.measure()[i]);
        }
        assert!(model.is_flat_at(0) && model.is_flat_at(97) && !model.is_flat_at(99));
        assert!(model.is_flat_at(2 * 400));
    }
}
