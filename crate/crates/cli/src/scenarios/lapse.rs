use wickthermo_core::thermal::lapse_rescale_check;

use super::{build_pair, eval_point, wick_options, Recorder};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::report::{CheckRecord, Report};

/// `w'(c beta) = w(beta) / c^2` on the metric rescaled by `c^2`.
pub fn run_lapse_scaling(config: &ScenarioConfig, seed: Option<u64>) -> Result<Report> {
    let mut rec = Recorder::new(config, seed);
    let claim = rec.claim();
    let xi = config.xis()[0];
    let (model, reference) = build_pair(config, xi, 1)?;
    rec.spacings.push(model.spacing());
    let options = wick_options(config, 1);
    for beta in config.betas() {
        for &c in &config.checks.lapse_factors {
            let check = lapse_rescale_check(&model, &reference, c, beta, eval_point(config), &options)?;
            rec.push(
                CheckRecord::new(format!("relative_residual[c={c},beta={beta}]"), claim, check.residual, "<=", config.checks.tolerance)
                    .with_detail(format!("w = {:.16e}, c^2 w' = {:.16e}", check.w, c * c * check.w_scaled)),
            );
        }
    }
    Ok(rec.finish())
}
