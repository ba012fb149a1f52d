//! States, Wick squares, sweeps, lapse scaling and the two-estimator
//! cross-check.

use proptest::prelude::*;
use wickthermo_core::geometry::*;
use wickthermo_core::lattice::*;
use wickthermo_core::spectral::*;
use wickthermo_core::thermal::*;
use wickthermo_core::Error;

fn torus(n: usize, m: f64) -> SpatialOperator {
    assemble_torus(TorusGrid::new(1.0, n).unwrap(), &vec![0.0; n * n * n], m).unwrap()
}

fn shell() -> ShellPotential {
    ShellPotential::new(ShellDensity::with_total_mass(1.0, 2.0, 1.0, ShellProfile::SmoothBump).unwrap())
}

fn conformal_pair(variant: ConformalVariant, xi: f64, r_max: f64, n: usize) -> (SpatialOperator, SpatialOperator) {
    let m = ConformalFactorModel::new(variant, shell());
    let grid = RadialGrid::dirichlet(r_max, n).unwrap();
    (assemble_radial_conformal(grid, &m, xi).unwrap(), assemble_radial_flat(grid, &m).unwrap())
}

#[test]
fn temperature_readings() {
    assert_eq!(temperature_from_value(1.0 / 12.0).temperature(), Some(1.0));
    assert_eq!(temperature_from_value(0.0).temperature(), Some(0.0));
    assert!(!temperature_from_value(-0.1).is_defined());
}

#[test]
fn perturbed_states_reduce_to_ground_and_kms() {
    let dec = decompose(&torus(4, 1.0)).unwrap();
    let ground = state_kernel(&StationaryState::Ground, &dec).unwrap().values;
    let empty = StationaryState::Perturbed { occupations: vec![0.0; dec.len()] };
    assert_eq!(state_kernel(&empty, &dec).unwrap().values.sub(&ground).max_abs(), 0.0);
    let beta = 1.3;
    let planck: Vec<f64> = dec.frequencies().iter().map(|w| bose_factor(beta, *w).unwrap()).collect();
    let p = state_kernel(&StationaryState::Perturbed { occupations: planck }, &dec).unwrap().values;
    let kms = state_kernel(&StationaryState::Kms { beta }, &dec).unwrap().values;
    assert!(p.sub(&kms).max_abs() <= 1e-13 * kms.max_abs());
}

#[test]
fn identical_model_and_reference_give_zero() {
    let op = torus(4, 1.0);
    let w = wick_square_relative(&op, &op, &StationaryState::Ground, &StationaryState::Ground, EvalPoint::Node(5), &WickOptions::single())
        .unwrap();
    assert_eq!(w.value, 0.0);
    assert!(w.error > 0.0);
}

#[test]
fn relative_kms_equals_excess() {
    let op = torus(6, 1.0);
    let dec = decompose(&op).unwrap();
    for node in [0usize, 100, 215] {
        let state = StationaryState::Kms { beta: 0.7 };
        let rel = wick_square_relative(&op, &op, &state, &StationaryState::Ground, EvalPoint::Node(node), &WickOptions::single())
            .unwrap();
        let ex = wick_excess(&op, &dec, &state, EvalPoint::Node(node)).unwrap();
        assert!((rel.value - ex.value).abs() <= 1e-12 * ex.value);
    }
}

#[test]
fn torus_excess_is_positive_and_decreasing_everywhere() {
    let op = torus(6, 1.0);
    let dec = decompose(&op).unwrap();
    let e1 = excess_kernel(&dec, 1.0).unwrap().diagonal();
    let e2 = excess_kernel(&dec, 2.0).unwrap().diagonal();
    assert!(e1.iter().all(|v| *v > 0.0));
    assert!(e1.iter().zip(&e2).all(|(a, b)| b < a));
    assert!(wick_excess(&op, &dec, &StationaryState::Ground, EvalPoint::Node(0)).is_err());
}

#[test]
fn torus_sweep_passes_all_bounds() {
    let op = torus(6, 1.0);
    let prepared = RelativeWick::prepare(&op, &op, EvalPoint::Node(0), &WickOptions::single()).unwrap();
    let betas: Vec<f64> = (0..25).map(|i| 0.25 * 32f64.powf(i as f64 / 24.0)).collect();
    let sweep = beta_sweep(&prepared, &betas).unwrap();
    assert!(sweep.checks.passed(), "{:?}", sweep.checks);
    assert!(sweep.checks.lipschitz_pairs > 0 && sweep.checks.tail_pairs > 0);
    let first = &sweep.entries[0];
    let last = sweep.entries.last().unwrap();
    assert!(last.estimate.value <= first.beta / last.beta * first.estimate.value);
    assert!(sweep.entries.iter().all(|e| e.temperature.is_defined()));
}

#[test]
fn sweep_rejects_unsorted_or_negative_betas() {
    let op = torus(4, 1.0);
    let prepared = RelativeWick::prepare(&op, &op, EvalPoint::Node(0), &WickOptions::single()).unwrap();
    assert!(beta_sweep(&prepared, &[1.0, 1.0]).is_err());
    assert!(beta_sweep(&prepared, &[-1.0, 1.0]).is_err());
}

#[test]
fn lapse_scaling_is_exact_on_torus_and_exp_model() {
    let t = torus(6, 1.0);
    let (a, b) = conformal_pair(ConformalVariant::ExpNewton, 0.0, 20.0, 400);
    for c in [0.5, 2.0, 10.0] {
        let check = lapse_rescale_check(&t, &t, c, 0.8, EvalPoint::Node(3), &WickOptions::single()).unwrap();
        assert!(check.residual <= 1e-10, "torus c={c}: {check:?}");
        let check = lapse_rescale_check(&a, &b, c, 0.8, EvalPoint::Center, &WickOptions::default()).unwrap();
        assert!(check.residual <= 1e-10, "exp c={c}: {check:?}");
    }
    assert!(lapse_rescale_check(&t, &t, 0.0, 1.0, EvalPoint::Node(0), &WickOptions::single()).is_err());
}

#[test]
fn points_outside_the_flat_region_are_rejected() {
    let (a, b) = conformal_pair(ConformalVariant::ExpNewton, 0.0, 20.0, 400);
    let g = StationaryState::Ground;
    // Node 74 sits at r = 1.5, inside the shell.
    assert!(matches!(
        wick_square_relative(&a, &b, &g, &g, EvalPoint::Node(74), &WickOptions::single()),
        Err(Error::OutsideFlatRegion)
    ));
}

#[test]
fn exp_newton_estimators_agree() {
    let (a, b) = conformal_pair(ConformalVariant::ExpNewton, 0.0, 40.0, 1000);
    let w = wick_square_relative(&a, &b, &StationaryState::Ground, &StationaryState::Ground, EvalPoint::Center, &WickOptions::default())
        .unwrap();
    let fit = mass_coefficient_estimate(&a, &StationaryState::Ground, &MassFitOptions::new((0.3, 0.8))).unwrap();
    assert!(w.value < 0.0);
    let gap = (w.value - fit.w_fit).abs();
    assert!(gap <= 0.1 * w.value.abs() || gap <= w.error + fit.fit_error, "{} vs {:?}", w.value, fit);
}

#[test]
fn flat_model_fit_recovers_the_wall_offset() {
    let unit = ConformalFactorModel::new(ConformalVariant::Unit, shell());
    let r_max = 40.0;
    let op = assemble_radial_flat(RadialGrid::dirichlet(r_max, 1000).unwrap(), &unit).unwrap();
    let fit = mass_coefficient_estimate(&op, &StationaryState::Ground, &MassFitOptions::new((0.3, 0.8))).unwrap();
    let wall = -1.0 / (48.0 * r_max * r_max);
    assert!((fit.w_fit - wall).abs() <= fit.fit_error, "{fit:?}");
}

#[test]
fn quartic_estimators_agree_and_are_nonnegative() {
    let pot = shell();
    let a = assemble_radial_quartic(RadialGrid::two_chart(4.0, 400).unwrap(), &pot, 0.05).unwrap();
    let b = assemble_quartic_reference(a.spacing(), 400, pot.nu()).unwrap();
    let nu2 = pot.nu() * pot.nu();
    for state in [StationaryState::Ground, StationaryState::Kms { beta: 2.0 }] {
        let w = wick_square_relative(&a, &b, &state, &StationaryState::Ground, EvalPoint::Center, &WickOptions::default()).unwrap();
        let fit = mass_coefficient_estimate(&a, &state, &MassFitOptions::new((0.3 * nu2, 0.8 * nu2))).unwrap();
        assert!(w.is_nonnegative_within_error());
        assert!(fit.w_fit >= -fit.fit_error);
        let gap = (w.value - fit.w_fit).abs();
        assert!(gap <= 0.1 * w.value.abs() || gap <= w.error + fit.fit_error, "{state:?}: {} vs {:?}", w.value, fit);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn perturbed_states_dominate_the_ground_state(occ in proptest::collection::vec(0.0f64..5.0, 64), f in proptest::collection::vec(-1.0f64..1.0, 64)) {
        let dec = decompose(&torus(4, 1.0)).unwrap();
        let state = StationaryState::Perturbed { occupations: occ };
        let diff = state_kernel(&state, &dec).unwrap().values.sub(&state_kernel(&StationaryState::Ground, &dec).unwrap().values);
        let q: f64 = diff.matvec(&f).iter().zip(&f).map(|(a, b)| a * b).sum();
        prop_assert!(q >= -1e-12 * diff.max_abs().max(1.0));
        prop_assert!(diff.diagonal().iter().all(|v| *v >= -1e-12));
    }
}
