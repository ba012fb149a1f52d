use wickthermo_core::spectral::{decompose, kernel_diagonal, SpectralFunction};
use wickthermo_core::thermal::{beta_sweep, check_sweep, RelativeWick, StationaryState, SweepChecks};

use super::{build_pair, eval_point, wick_options, Recorder};
use crate::config::{ModelKind, ScenarioConfig};
use crate::error::Result;
use crate::report::{CheckRecord, Report, SweepRow, SweepTable};

/// KMS sweep with the monotonicity, Lipschitz, tail and ground-limit checks.
///
/// On a torus the inequalities are checked at every lattice point; radial
/// models are checked at the configured point on every refinement level.
pub fn run_monotonicity(config: &ScenarioConfig, seed: Option<u64>) -> Result<Report> {
    let mut rec = Recorder::new(config, seed);
    let claim = rec.claim();
    let betas = config.betas();
    let xi = config.xis()[0];
    let (limit, reference) = (config.states.limit_beta, config.states.reference_beta);
    let (model, reference_op) = build_pair(config, xi, 1)?;
    let prepared = RelativeWick::prepare(&model, &reference_op, eval_point(config), &wick_options(config, 1))?;
    rec.spacings = prepared.spacings();
    let sweep = beta_sweep(&prepared, &betas)?;

    let (checks, points, limit_ratio) = if config.model() == ModelKind::Torus {
        let dec = decompose(&model)?;
        let nodes: Vec<usize> = (0..model.dim()).collect();
        let diag = |beta: f64| kernel_diagonal(&dec, &SpectralFunction::Excess { beta }, &nodes);
        let mut excess = vec![Vec::with_capacity(betas.len()); nodes.len()];
        let mut quarter = excess.clone();
        for &beta in &betas {
            for (x, (e, q)) in diag(beta)?.into_iter().zip(diag(beta / 4.0)?).enumerate() {
                excess[x].push(e);
                quarter[x].push(q);
            }
        }
        let mut checks = SweepChecks {
            strictly_decreasing: true,
            ..SweepChecks::default()
        };
        for (e, q) in excess.iter().zip(&quarter) {
            checks.merge(&check_sweep(&betas, e, q));
        }
        let ratio = diag(limit)?
            .iter()
            .zip(diag(reference)?)
            .map(|(l, r)| l / r)
            .fold(0.0f64, f64::max);
        (checks, nodes.len(), ratio)
    } else {
        let l = prepared.excess_levels(&StationaryState::Kms { beta: limit })?;
        let r = prepared.excess_levels(&StationaryState::Kms { beta: reference })?;
        let ratio = l.iter().zip(&r).map(|(a, b)| a / b).fold(0.0f64, f64::max);
        (sweep.checks.clone(), 1, ratio)
    };

    rec.push(
        CheckRecord::new("strictly_decreasing", claim, checks.monotonicity_violations as f64, "==", 0.0)
            .with_detail(format!("{points} points, {} beta values", betas.len())),
    );
    rec.push(
        CheckRecord::new("lipschitz_bound", claim, checks.lipschitz_violations as f64, "==", 0.0).with_detail(format!(
            "{} pairs, worst |dw| / bound = {:.6}",
            checks.lipschitz_pairs, checks.worst_lipschitz_ratio
        )),
    );
    rec.push(
        CheckRecord::new("tail_bound", claim, checks.tail_violations as f64, "==", 0.0).with_detail(format!(
            "{} pairs, worst w(beta) / ((beta0 / beta) w(beta0)) = {:.6}",
            checks.tail_pairs, checks.worst_tail_ratio
        )),
    );
    rec.push(
        CheckRecord::new("ground_limit_ratio", claim, limit_ratio, "<=", config.checks.ground_ratio)
            .with_detail(format!("w_excess({limit}) / w_excess({reference}), worst point")),
    );
    rec.push(
        CheckRecord::new("ground_limit_tail", claim, limit_ratio, "<=", reference / limit)
            .with_detail("the tail bound with beta0 / beta = reference / limit"),
    );

    let ground = sweep.ground.value;
    let rows = sweep
        .entries
        .iter()
        .map(|e| SweepRow::new(e.beta, e.estimate.value, e.estimate.error, e.temperature.temperature()))
        .collect();
    rec.sweeps.push(SweepTable {
        label: "sweep".into(),
        rows,
    });
    rec.notes.push(format!("ground-state value at the point: {ground:.16e}"));
    Ok(rec.finish())
}
