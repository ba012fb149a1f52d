use wickthermo_core::thermal::{temperature_from_value, StationaryState};

use super::models::WallPair;
use super::{negative_status, xi_label, Recorder};
use crate::config::{ModelKind, ScenarioConfig};
use crate::error::Result;
use crate::report::{CheckRecord, Report, Status, SweepRow, SweepTable};

/// Ground-state Wick square at the centre of the exponential model.
///
/// A strict sign is asserted only when `|w| >= sign_factor * error`, where
/// the error includes the shift under wall doubling. The unit model, as
/// the configured model or as the optional control, must give zero.
pub fn run_counterexample(config: &ScenarioConfig, seed: Option<u64>) -> Result<Report> {
    let mut rec = Recorder::new(config, seed);
    let claim = rec.claim();
    let factor = config.checks.sign_factor;
    for xi in config.xis() {
        let label = xi_label(xi);
        let pair = WallPair::prepare(config, xi)?;
        rec.spacings.push(*pair.base.spacings().last().expect("levels"));
        let ground = pair.estimate(&StationaryState::Ground)?;
        let w = ground.estimate.value;
        if config.model() == ModelKind::Unit {
            rec.push(CheckRecord::new(format!("w_zero[{label}]"), claim, w.abs(), "<=", ground.error));
        } else {
            rec.push(
                CheckRecord::new(format!("w_negative[{label}]"), claim, w, "<=", -factor * ground.error)
                    .with_status(negative_status(w, ground.error, factor))
                    .with_detail(format!(
                        "extrapolation error {:.3e}, doubled-wall value {}",
                        ground.estimate.error,
                        ground.doubled.map_or("not run".into(), |v| format!("{v:.16e}"))
                    )),
            );
            if let Some(doubled) = ground.doubled {
                rec.push(
                    CheckRecord::new(format!("w_negative_doubled_wall[{label}]"), claim, doubled, "<", 0.0)
                        .with_status(negative_status(doubled, ground.error, factor)),
                );
            }
        }

        let mut rows = Vec::new();
        for beta in config.betas() {
            let state = StationaryState::Kms { beta };
            let kms = pair.estimate(&state)?;
            let excess = pair.finest_excess(&state)?;
            rec.push(
                CheckRecord::new(format!("kms_exceeds_ground[{label},beta={beta}]"), claim, excess, ">", 0.0)
                    .with_detail("finest-level w(beta) - w(infinity)"),
            );
            let t = temperature_from_value(kms.estimate.value).temperature();
            rows.push(SweepRow::new(beta, kms.estimate.value, kms.error, t));
        }
        if !rows.is_empty() {
            rec.sweeps.push(SweepTable { label: label.clone(), rows });
        }

        if config.checks.control && config.model() != ModelKind::Unit {
            let mut control = config.clone();
            control.geometry.model = Some(ModelKind::Unit);
            control.checks.rmax_doubling = false;
            let c = WallPair::prepare(&control, xi)?.estimate(&StationaryState::Ground)?;
            let check = CheckRecord::new(format!("unit_control[{label}]"), claim, c.estimate.value.abs(), "<=", c.error);
            let status = if check.status == Status::Pass { Status::Pass } else { Status::Fail };
            rec.push(check.with_status(status));
        }
    }
    Ok(rec.finish())
}
