use wickthermo_core::lattice::EvalPoint;
use wickthermo_core::spectral::bose_factor;
use wickthermo_core::thermal::{RelativeWick, StationaryState};

use super::{torus_operator, wick_options, Recorder};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::report::{CheckRecord, Report, SweepRow, SweepTable};

/// Thermal Wick square on a flat torus against the massless continuum
/// value `1 / (12 beta^2)`, extrapolated over the configured refinements.
pub fn run_calibration(config: &ScenarioConfig, seed: Option<u64>) -> Result<Report> {
    let mut rec = Recorder::new(config, seed);
    let claim = rec.claim();
    let levels = config.levels();
    let coarse = torus_operator(config, levels[0])?;
    let prepared = RelativeWick::prepare(&coarse, &coarse, EvalPoint::Node(0), &wick_options(config, 1))?;
    rec.spacings = prepared.spacings();
    let (mass, side) = (config.mass(), config.geometry.side);
    let mut rows = Vec::new();
    for beta in config.betas() {
        let w = prepared.estimate(&StationaryState::Kms { beta }, &StationaryState::Ground)?;
        let target = 1.0 / (12.0 * beta * beta);
        let deviation = (w.value - target).abs() / target;
        // The constant mode has lambda = m^2 on every level.
        let constant_mode = bose_factor(beta, mass)? / mass / side.powi(3);
        let per_level = levels
            .iter()
            .zip(&w.level_values)
            .map(|(n, v)| format!("{n}: {v:.6}"))
            .collect::<Vec<_>>()
            .join(", ");
        rec.push(
            CheckRecord::new(format!("relative_deviation[beta={beta}]"), claim, deviation, "<=", config.checks.calibration)
                .with_detail(format!(
                    "w = {:.6} +- {:.2e} against {target:.6}; per level {per_level}; constant-mode part {constant_mode:.6}, remainder {:.6}",
                    w.value,
                    w.error,
                    w.value - constant_mode
                )),
        );
        let t = (12.0 * w.value).sqrt();
        rows.push(SweepRow::new(beta, w.value, w.error, (w.value >= 0.0).then_some(t)));
        rec.notes.push(format!(
            "beta = {beta}: local temperature {t:.6} against 1 / beta = {:.6}",
            1.0 / beta
        ));
    }
    rec.sweeps.push(SweepTable {
        label: "calibration".into(),
        rows,
    });
    Ok(rec.finish())
}
