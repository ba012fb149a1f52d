//! Scenario runners. Each takes a validated configuration and returns a
//! report with one record per check.

mod calibration;
mod comparison;
mod compact;
mod counterexample;
mod lapse;
mod models;
mod monotonicity;
mod noncompact;
mod perturbed;
mod reduction;

use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub use calibration::run_calibration;
pub use comparison::run_comparison_properties;
pub use compact::run_positive_compact;
pub use counterexample::run_counterexample;
pub use lapse::run_lapse_scaling;
pub use models::{build_pair, eval_point, shell_potential, torus_operator, wick_options};
pub use monotonicity::run_monotonicity;
pub use noncompact::run_positive_noncompact;
pub use perturbed::run_perturbed_states;
pub use reduction::run_reduction_oracle;

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::Result;
use crate::report::{CheckRecord, Provenance, Report, Status, SweepTable};

/// Runs the scenario named by `config.kind`.
pub fn run_scenario(config: &ScenarioConfig, seed: Option<u64>) -> Result<Report> {
    match config.kind {
        ScenarioKind::Monotonicity => run_monotonicity(config, seed),
        ScenarioKind::Counterexample => run_counterexample(config, seed),
        ScenarioKind::PositiveNoncompact => run_positive_noncompact(config, seed),
        ScenarioKind::PositiveCompact => run_positive_compact(config, seed),
        ScenarioKind::Comparison => run_comparison_properties(config, seed),
        ScenarioKind::Reduction => run_reduction_oracle(config, seed),
        ScenarioKind::Calibration => run_calibration(config, seed),
        ScenarioKind::LapseScaling => run_lapse_scaling(config, seed),
        ScenarioKind::PerturbedStates => run_perturbed_states(config, seed),
    }
}

/// Status of a claim that `w < 0`.
///
/// Passing needs `|w| >= factor * error`; a value that is positive by the
/// same margin fails, and anything in between is inconclusive.
pub fn negative_status(w: f64, error: f64, factor: f64) -> Status {
    if w < 0.0 && -w >= factor * error {
        Status::Pass
    } else if w > 0.0 && w >= factor * error {
        Status::Fail
    } else {
        Status::Inconclusive
    }
}

/// Status of a claim that `w >= 0`.
///
/// `w >= -error` passes, `w <= -factor * error` fails, and values in
/// between are inconclusive.
pub fn nonnegative_status(w: f64, error: f64, factor: f64) -> Status {
    if w >= -error {
        Status::Pass
    } else if -w >= factor * error {
        Status::Fail
    } else {
        Status::Inconclusive
    }
}

/// Accumulates checks and tables while a scenario runs.
pub(crate) struct Recorder<'a> {
    config: &'a ScenarioConfig,
    seed: Option<u64>,
    start: Instant,
    pub checks: Vec<CheckRecord>,
    pub sweeps: Vec<SweepTable>,
    pub notes: Vec<String>,
    pub counterexamples: Vec<serde_json::Value>,
    pub spacings: Vec<f64>,
}

impl<'a> Recorder<'a> {
    pub fn new(config: &'a ScenarioConfig, seed: Option<u64>) -> Self {
        Recorder {
            config,
            seed,
            start: Instant::now(),
            checks: Vec::new(),
            sweeps: Vec::new(),
            notes: Vec::new(),
            counterexamples: Vec::new(),
            spacings: Vec::new(),
        }
    }

    pub fn claim(&self) -> &'static str {
        self.config.kind.claim()
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
    }

    pub fn finish(self) -> Report {
        Report {
            scenario: self.config.id.clone(),
            kind: self.config.kind,
            status: Report::overall(&self.checks),
            checks: self.checks,
            sweeps: self.sweeps,
            notes: self.notes,
            counterexamples: self.counterexamples,
            provenance: Provenance {
                config_hash: self.config.hash(self.seed),
                seed: self.seed,
                spacings: self.spacings,
                version: env!("CARGO_PKG_VERSION"),
            },
            runtime_seconds: crate::report::Num(self.start.elapsed().as_secs_f64()),
            generated_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// Label fragment for a coupling value, e.g. `xi=0.05`.
pub(crate) fn xi_label(xi: f64) -> String {
    format!("xi={xi}")
}
