use wickthermo_core::euclidean::{lattice_equal_time_kernel, matsubara_equal_time, matsubara_tail, thermal_mode_value};
use wickthermo_core::spectral::{decompose, ground_kernel, thermal_kernel};

use super::{torus_operator, Recorder};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::report::{CheckRecord, Report};

/// Single-mode `(lambda, beta)` pairs for the frequency-sum identity.
const MODES: [(f64, f64); 5] = [(1.0, 1.0), (0.3, 2.0), (4.0, 0.5), (1e-3, 10.0), (25.0, 0.1)];
/// Inverse temperature standing in for the ground-state limit.
const LARGE_BETA: f64 = 200.0;

/// Equal-time thermal kernel against the Matsubara sum and the Euclidean
/// lattice inverse on the beta circle.
pub fn run_reduction_oracle(config: &ScenarioConfig, seed: Option<u64>) -> Result<Report> {
    let mut rec = Recorder::new(config, seed);
    let claim = rec.claim();
    let tol = config.checks.tolerance;
    let terms = config.checks.matsubara_terms;

    let mut worst = 0.0f64;
    let mut worst_tail = 0.0f64;
    for (lambda, beta) in MODES {
        let sum = matsubara_equal_time(lambda, beta, terms)?;
        worst = worst.max((sum - thermal_mode_value(lambda, beta)?).abs());
        worst_tail = worst_tail.max(matsubara_tail(lambda, beta, terms)?.abs());
    }
    rec.push(
        CheckRecord::new("matsubara_single_mode", claim, worst, "<=", tol)
            .with_detail(format!("{} modes, {terms} terms, largest closed-form tail {worst_tail:.3e}", MODES.len())),
    );

    let op = torus_operator(config, config.points())?;
    rec.spacings.push(op.spacing());
    let beta = config.betas().first().copied().unwrap_or(2.0);
    let dec = decompose(&op)?;
    let spectral = thermal_kernel(&dec, beta)?.values;
    let scale = spectral.max_abs();
    let taus = config.tau_levels();
    let errors: Vec<f64> = taus
        .iter()
        .map(|&n_tau| Ok(lattice_equal_time_kernel(&op, beta, n_tau)?.sub(&spectral).max_abs() / scale))
        .collect::<Result<_>>()?;
    let orders: Vec<f64> = (1..taus.len())
        .map(|k| (errors[k - 1] / errors[k]).ln() / (taus[k] as f64 / taus[k - 1] as f64).ln())
        .collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let listing = taus
        .iter()
        .zip(&errors)
        .map(|(t, e)| format!("{t}: {e:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    rec.push(
        CheckRecord::new("euclidean_tau_order", claim, min_order, ">=", config.checks.tau_order)
            .with_detail(format!("relative max error by slice count: {listing}")),
    );
    rec.push(
        CheckRecord::new("euclidean_error_shrinks", claim, *errors.last().expect("levels"), "<", errors[0])
            .with_detail(format!("beta = {beta}, {} points per axis", config.points())),
    );

    let ground = ground_kernel(&dec)?.values;
    let cold = thermal_kernel(&dec, LARGE_BETA)?.values;
    let mode_gap = MODES
        .iter()
        .map(|&(lambda, _)| Ok((thermal_mode_value(lambda, LARGE_BETA * 10.0)? - 0.5 / lambda.sqrt()).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    rec.push(
        CheckRecord::new("large_beta_limit", claim, cold.sub(&ground).max_abs() / ground.max_abs(), "<=", tol)
            .with_detail(format!("thermal kernel at beta = {LARGE_BETA} against A^(-1/2) / 2")),
    );
    rec.push(CheckRecord::new("large_beta_single_mode", claim, mode_gap, "<=", tol));
    Ok(rec.finish())
}
