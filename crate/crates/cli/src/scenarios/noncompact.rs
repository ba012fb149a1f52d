use wickthermo_core::thermal::{temperature_from_value, StationaryState};

use super::models::WallPair;
use super::{nonnegative_status, xi_label, Recorder};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::report::{CheckRecord, Report, Status, SweepRow, SweepTable};

/// Non-negativity of the Wick square at the centre of the affine model for
/// the ground state and each KMS state, with the local temperature.
pub fn run_positive_noncompact(config: &ScenarioConfig, seed: Option<u64>) -> Result<Report> {
    let mut rec = Recorder::new(config, seed);
    let claim = rec.claim();
    let factor = config.checks.sign_factor;
    for xi in config.xis() {
        let label = xi_label(xi);
        let pair = WallPair::prepare(config, xi)?;
        rec.spacings.push(*pair.base.spacings().last().expect("levels"));
        let mut states: Vec<(String, StationaryState, f64)> = Vec::new();
        if config.states.ground {
            states.push(("ground".into(), StationaryState::Ground, f64::INFINITY));
        }
        for beta in config.betas() {
            states.push((format!("beta={beta}"), StationaryState::Kms { beta }, beta));
        }
        let mut rows = Vec::new();
        for (name, state, beta) in states {
            let e = pair.estimate(&state)?;
            let w = e.estimate.value;
            rec.push(
                CheckRecord::new(format!("w_nonnegative[{label},{name}]"), claim, w, ">=", -e.error)
                    .with_status(nonnegative_status(w, e.error, factor)),
            );
            let t = temperature_from_value(w).temperature();
            rec.push(
                CheckRecord::new(
                    format!("temperature_defined[{label},{name}]"),
                    claim,
                    t.unwrap_or(f64::NAN),
                    ">=",
                    0.0,
                )
                .with_status(Status::from_bool(w < 0.0 || t.is_some())),
            );
            if beta.is_finite() {
                let excess = pair.finest_excess(&state)?;
                rec.push(CheckRecord::new(
                    format!("kms_exceeds_ground[{label},{name}]"),
                    claim,
                    excess,
                    ">",
                    0.0,
                ));
                rows.push(SweepRow::new(beta, w, e.error, t));
            } else {
                rec.notes.push(format!("{label}: ground-state w = {w:.16e} +- {:.3e}", e.error));
            }
        }
        if !rows.is_empty() {
            rec.sweeps.push(SweepTable { label, rows });
        }
    }
    Ok(rec.finish())
}
