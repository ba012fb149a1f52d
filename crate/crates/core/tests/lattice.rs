//! Operator assembly against discrete Fourier and Bessel-zero oracles.

use std::f64::consts::PI;

use proptest::prelude::*;
use wickthermo_core::geometry::*;
use wickthermo_core::lattice::*;
use wickthermo_core::linalg::{symmetric_eigenvalues, tridiagonal_eigen};
use wickthermo_core::Error;

/// `m^2 + sum_i (2/h)^2 sin^2(pi n_i / N)` over all wave vectors, sorted.
fn fourier_oracle(n: usize, side: f64, m: f64) -> Vec<f64> {
    let h = side / n as f64;
    let s = |k: usize| {
        let v = (PI * k as f64 / n as f64).sin() * 2.0 / h;
        v * v
    };
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                out.push(m * m + s(a) + s(b) + s(c));
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn eigenvalues(op: &SpatialOperator) -> Vec<f64> {
    match op.structure() {
        Structure::Tridiagonal { diag, off } => tridiagonal_eigen(diag, off, &[]).unwrap().eigenvalues,
        Structure::Torus { .. } => symmetric_eigenvalues(&op.to_dense()).unwrap(),
    }
}

#[test]
fn torus_spectrum_matches_discrete_fourier_oracle() {
    let op = assemble_torus(TorusGrid::new(1.0, 8).unwrap(), &[0.0; 512], 1.0).unwrap();
    let got = eigenvalues(&op);
    let want = fourier_oracle(8, 1.0, 1.0);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-10 * w.max(1.0));
    }
}

#[test]
fn constant_mode_gives_the_mass_gap() {
    let op = assemble_torus(TorusGrid::new(1.0, 4).unwrap(), &[0.0; 64], 1.0).unwrap();
    assert!((eigenvalues(&op)[0] - 1.0).abs() < 1e-12);
}

#[test]
fn zero_mode_is_rejected() {
    assert!(matches!(
        assemble_torus(TorusGrid::new(1.0, 4).unwrap(), &[0.0; 64], 0.0),
        Err(Error::ZeroMode(_))
    ));
    assert!(TorusGrid::new(1.0, 3).is_err());
}

#[test]
fn assembled_operators_are_symmetric_and_positive() {
    let pot = ShellPotential::new(ShellDensity::smooth(1.0, 2.0, 0.2).unwrap());
    let exp = ConformalFactorModel::new(ConformalVariant::ExpNewton, pot.clone());
    let ops = [
        assemble_torus(TorusGrid::new(1.0, 6).unwrap(), &[0.3; 216], 0.5).unwrap(),
        assemble_radial_conformal(RadialGrid::dirichlet(20.0, 400).unwrap(), &exp, 0.1).unwrap(),
        assemble_radial_quartic(RadialGrid::two_chart(4.0, 200).unwrap(), &pot, 0.05).unwrap(),
    ];
    for op in &ops {
        assert!(op.relative_asymmetry() <= 1e-12);
        assert!(op.check_positive().is_ok());
        assert!(eigenvalues(op)[0] > 0.0);
    }
}

#[test]
fn quartic_rejects_minimal_coupling_and_out_of_range_xi() {
    let pot = ShellPotential::new(ShellDensity::smooth(1.0, 2.0, 0.2).unwrap());
    let grid = RadialGrid::two_chart(4.0, 200).unwrap();
    assert!(assemble_radial_quartic(grid, &pot, 0.0).is_err());
    assert!(assemble_radial_quartic(grid, &pot, 0.2).is_err());
    assert!(assemble_radial_quartic(RadialGrid::dirichlet(4.0, 200).unwrap(), &pot, 0.05).is_err());
}

#[test]
fn flat_radial_operator_has_dirichlet_box_spectrum_at_second_order() {
    let unit = ConformalFactorModel::new(
        ConformalVariant::Unit,
        ShellPotential::new(ShellDensity::smooth(1.0, 2.0, 0.2).unwrap()),
    );
    let r_max = 10.0;
    let error = |n: usize| {
        let op = assemble_radial_conformal(RadialGrid::dirichlet(r_max, n).unwrap(), &unit, 0.3).unwrap();
        let ev = eigenvalues(&op);
        (0..5)
            .map(|k| {
                let exact = ((k + 1) as f64 * PI / r_max).powi(2);
                (ev[k] - exact).abs() / exact
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (error(200), error(400));
    assert!(e1 < 1e-3);
    assert!((e1 / e2 - 4.0).abs() < 0.05, "ratio {}", e1 / e2);
}

#[test]
fn refinement_converges_at_second_order() {
    let pot = ShellPotential::new(ShellDensity::smooth(1.0, 2.0, 0.2).unwrap());
    let exp = ConformalFactorModel::new(ConformalVariant::ExpNewton, pot);
    let op = assemble_radial_conformal(RadialGrid::dirichlet(20.0, 400).unwrap(), &exp, 0.05).unwrap();
    let l1 = eigenvalues(&op);
    let l2 = eigenvalues(&refine(&op, 2).unwrap());
    let l4 = eigenvalues(&refine(&op, 4).unwrap());
    for k in 0..5 {
        let ratio = (l1[k] - l2[k]) / (l2[k] - l4[k]);
        assert!((ratio - 4.0).abs() < 0.1, "mode {k}: ratio {ratio}");
    }
    assert!(refine(&op, 1).is_err());
}

#[test]
fn refinement_respects_the_dimension_cap() {
    let op = assemble_torus(TorusGrid::new(1.0, 8).unwrap(), &[0.0; 512], 1.0).unwrap();
    assert!(matches!(refine_capped(&op, 2, 1000), Err(Error::ResourceCap { dim: 4096, cap: 1000 })));
}

#[test]
fn total_measure_is_refinement_invariant_for_flat_models() {
    let torus = assemble_torus(TorusGrid::new(2.0, 4).unwrap(), &[0.0; 64], 1.0).unwrap();
    let total = |op: &SpatialOperator| op.measure().iter().sum::<f64>();
    let t8 = refine(&torus, 2).unwrap();
    assert!((total(&torus) - total(&t8)).abs() < 1e-12 * total(&torus));
    assert!((total(&torus) - 8.0).abs() < 1e-12);
}

#[test]
fn triplet_dump_lists_every_nonzero_once() {
    let op = assemble_torus(TorusGrid::new(1.0, 4).unwrap(), &[0.0; 64], 1.0).unwrap();
    let text = op.triplet_text();
    let lines = text.lines().filter(|l| !l.starts_with('#')).count();
    // Diagonal plus six neighbours per row.
    assert_eq!(lines, 64 * 7);
}

#[test]
fn exp_and_affine_orderings_against_the_conjugated_operator() {
    let pot = ShellPotential::new(ShellDensity::smooth(1.0, 2.0, 0.2).unwrap());
    let grid = RadialGrid::dirichlet(20.0, 400).unwrap();
    for (variant, sign) in [(ConformalVariant::ExpNewton, 1.0), (ConformalVariant::AffineNewton, -1.0)] {
        let m = ConformalFactorModel::new(variant, pot.clone());
        let a = assemble_radial_conformal(grid, &m, 0.0).unwrap();
        let b = assemble_conjugated_flat(grid, &m).unwrap();
        for seed in 0..20u64 {
            let f: Vec<f64> = (0..a.dim()).map(|i| ((i as u64 * 7919 + seed * 104729) % 1000) as f64 / 500.0 - 1.0).collect();
            let d = a.quadratic_form(&f) - b.quadratic_form(&f);
            assert!(sign * d >= -1e-12 * b.quadratic_form(&f).abs());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ordered_potentials_give_ordered_forms(
        v1 in proptest::collection::vec(0.0f64..2.0, 64),
        bump in proptest::collection::vec(0.0f64..2.0, 64),
        f in proptest::collection::vec(-1.0f64..1.0, 64),
    ) {
        let grid = TorusGrid::new(1.0, 4).unwrap();
        let v2: Vec<f64> = v1.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let a1 = assemble_torus(grid, &v1, 0.5).unwrap();
        let a2 = assemble_torus(grid, &v2, 0.5).unwrap();
        let d = a2.quadratic_form(&f) - a1.quadratic_form(&f);
        prop_assert!(d >= -1e-12 * a1.quadratic_form(&f).abs());
    }
}
