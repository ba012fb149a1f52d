//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Each criterion runs a pinned configuration through the scenario runner
//! and, where a value can be computed another way, compares the report
//! against an independent mode sum. Exits nonzero when any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use wickthermo::{parse_config, run_scenario, Report, Status};

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Outcome {
            pass,
            summary: summary.into(),
            details: Vec::new(),
        }
    }

    fn detail(mut self, line: impl Into<String>) -> Self {
        self.details.push(line.into());
        self
    }
}

/// Parses a one-scenario configuration, runs it and times the run.
fn run(toml: &str) -> (Report, Duration) {
    let file = parse_config(toml).expect("acceptance configuration is valid");
    assert_eq!(file.scenarios.len(), 1);
    let start = Instant::now();
    let report = run_scenario(&file.scenarios[0], file.seed).expect("scenario runs");
    (report, start.elapsed())
}

fn all_pass(report: &Report) -> bool {
    !report.checks.is_empty() && report.checks.iter().all(|c| c.status == Status::Pass)
}

fn failing(report: &Report) -> Vec<String> {
    report
        .checks
        .iter()
        .filter(|c| c.status != Status::Pass)
        .map(|c| format!("{} {}: {:e} {} {:e}", c.status.label(), c.name, c.value.0, c.relation, c.bound.0))
        .collect()
}

fn check_value(report: &Report, name: &str) -> f64 {
    report.check(name).unwrap_or_else(|| panic!("check {name} missing")).value.0
}

/// Thermal excess `sum_k F(beta w_k) / w_k` at any point of the periodic
/// cubic lattice, with unit-normalized plane waves.
fn torus_excess_oracle(points: usize, side: f64, mass: f64, beta: f64) -> f64 {
    let h = side / points as f64;
    let axis: Vec<f64> = (0..points)
        .map(|k| 4.0 / (h * h) * (PI * k as f64 / points as f64).sin().powi(2))
        .collect();
    let mut sum = 0.0;
    for a in &axis {
        for b in &axis {
            for c in &axis {
                let w = (mass * mass + a + b + c).sqrt();
                sum += 1.0 / ((beta * w).exp_m1() * w);
            }
        }
    }
    sum / side.powi(3)
}

/// Truncated frequency sum `(1/beta) sum_n 1/(w_n^2 + w^2)` with the
/// leading `1/n^2` tail added back.
fn matsubara_oracle(w: f64, beta: f64, terms: usize) -> f64 {
    let mut sum = 1.0 / (w * w);
    for n in 1..=terms {
        let wn = 2.0 * PI * n as f64 / beta;
        sum += 2.0 / (wn * wn + w * w);
    }
    let tail = 2.0 * (beta / (2.0 * PI)).powi(2) / terms as f64;
    (sum + tail) / beta
}

fn criterion_1_and_2() -> (Outcome, Outcome) {
    let (report, elapsed) = run(r#"
        [[scenario]]
        id = "acceptance-monotonicity"
        kind = "monotonicity"
        geometry = { model = "torus", side = 1.0 }
        grid = { points = 16 }
        field = { mass = 1.0 }
        states = { beta_grid = { min = 0.25, max = 8.0, count = 25, spacing = "log" }, limit_beta = 64.0, reference_beta = 1.0 }
        checks = { ground_ratio = 1e-3 }
    "#);
    let rows = &report.sweeps[0].rows;
    let worst_oracle = rows
        .iter()
        .map(|r| {
            let o = torus_excess_oracle(16, 1.0, 1.0, r.beta.0);
            (r.w.0 - o).abs() / o
        })
        .fold(0.0f64, f64::max);
    let oracle_decreasing = rows
        .windows(2)
        .all(|p| torus_excess_oracle(16, 1.0, 1.0, p[1].beta.0) < torus_excess_oracle(16, 1.0, 1.0, p[0].beta.0));
    let checks_ok = ["strictly_decreasing", "lipschitz_bound", "tail_bound"]
        .iter()
        .all(|n| report.check(n).is_some_and(|c| c.status == Status::Pass));
    let pass1 = checks_ok && rows.len() == 25 && worst_oracle <= 1e-10 && oracle_decreasing && elapsed.as_secs_f64() < 120.0;
    let one = Outcome::new(
        pass1,
        format!(
            "monotonicity on 16^3: violations mono/lipschitz/tail = {}/{}/{}, runtime {:.1} s (< 120 s)",
            check_value(&report, "strictly_decreasing"),
            check_value(&report, "lipschitz_bound"),
            check_value(&report, "tail_bound"),
            elapsed.as_secs_f64()
        ),
    )
    .detail(format!("{} beta values, worst relative deviation from mode-sum oracle {worst_oracle:.2e}", rows.len()));

    let ratio = check_value(&report, "ground_limit_ratio");
    let oracle_ratio = torus_excess_oracle(16, 1.0, 1.0, 64.0) / torus_excess_oracle(16, 1.0, 1.0, 1.0);
    let agree = (ratio - oracle_ratio).abs() <= 1e-6 * oracle_ratio;
    let tail = report.check("ground_limit_tail").is_some_and(|c| c.status == Status::Pass);
    let pass2 = ratio <= 1e-3 && tail && agree;
    let two = Outcome::new(
        pass2,
        format!("ground-state limit: w(64) / w(1) = {ratio:.3e} (<= 1e-3, tail bound 1/64)"),
    )
    .detail(format!("mode-sum oracle ratio {oracle_ratio:.3e}"));
    (one, two)
}

fn criterion_3() -> Outcome {
    let beta = 0.1;
    let (report, elapsed) = run(r#"
        [[scenario]]
        id = "acceptance-calibration"
        kind = "calibration"
        geometry = { model = "torus", side = 1.0 }
        grid = { points = 32, levels = [16, 24, 32] }
        field = { mass = 0.05 }
        states = { betas = [0.1] }
        checks = { calibration = 0.02 }
    "#);
    let target = 1.0 / (12.0 * beta * beta);
    let w = report.sweeps[0].rows[0].w.0;
    let deviation = (w - target).abs() / target;

    // Finest-pair extrapolation of the oracle levels in h^2.
    let levels: Vec<(f64, f64)> = [16usize, 24, 32]
        .iter()
        .map(|&n| (1.0 / n as f64, torus_excess_oracle(n, 1.0, 0.05, beta)))
        .collect();
    let ((h1, v1), (h2, v2)) = (levels[1], levels[2]);
    let oracle = (h1 * h1 * v2 - h2 * h2 * v1) / (h1 * h1 - h2 * h2);
    let zero_mode = 1.0 / (0.05 * (beta * 0.05).exp_m1());

    let pass = deviation <= 0.02 && elapsed.as_secs_f64() < 300.0;
    Outcome::new(
        pass,
        format!(
            "high-temperature calibration: |w - 1/(12 beta^2)| / (1/(12 beta^2)) = {deviation:.4e} (<= 2e-2), runtime {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
    .detail(format!("w = {w:.6} against {target:.6}; independent extrapolation {oracle:.6}"))
    .detail(format!(
        "constant-mode term 1/(L^3 m (e^(beta m) - 1)) = {zero_mode:.6}; w minus it = {:.6}",
        w - zero_mode
    ))
}

fn criterion_4() -> Outcome {
    let mut pass = true;
    let mut values = Vec::new();
    let mut details = Vec::new();
    for xi in [0.0, 0.05, 0.1] {
        let (report, elapsed) = run(&format!(
            r#"
            [[scenario]]
            id = "acceptance-counterexample"
            kind = "counterexample"
            geometry = {{ model = "exp_newton", r_inner = 1.0, r_outer = 2.0, mu = 1.0, r_max = 80.0 }}
            grid = {{ points = 4000, levels = [2000, 3000, 4000] }}
            field = {{ xi = {xi:?} }}
            states = {{ betas = [1.0] }}
            checks = {{ sign_factor = 5.0, rmax_doubling = true, control = true }}
        "#
        ));
        let label = format!("xi={xi}");
        let w = check_value(&report, &format!("w_negative[{label}]"));
        let bound = report.check(&format!("w_negative[{label}]")).unwrap().bound.0;
        let doubled = check_value(&report, &format!("w_negative_doubled_wall[{label}]"));
        let ok = all_pass(&report) && elapsed.as_secs_f64() < 300.0;
        pass &= ok;
        values.push(format!("{w:.4e}"));
        details.push(format!(
            "xi = {xi}: w = {w:.6e}, 5 x error = {:.2e}, doubled wall {doubled:.6e}, runtime {:.1} s (< 300 s)",
            -bound,
            elapsed.as_secs_f64()
        ));
        details.extend(failing(&report));
    }
    let mut out = Outcome::new(pass, format!("counterexample: ground w(0) = {} for xi = 0, 0.05, 0.1", values.join(", ")));
    out.details = details;
    out
}

fn criterion_5() -> Outcome {
    let (report, elapsed) = run(r#"
        [[scenario]]
        id = "acceptance-noncompact"
        kind = "positive_noncompact"
        geometry = { model = "affine_newton", r_max = 80.0 }
        grid = { points = 4000, levels = [2000, 3000, 4000] }
        field = { xi = [0.0, 0.125] }
        states = { ground = true, betas = [1.0, 4.0] }
    "#);
    let w: Vec<f64> = report
        .checks
        .iter()
        .filter(|c| c.name.starts_with("w_nonnegative"))
        .map(|c| c.value.0)
        .collect();
    let nonnegative = w.iter().filter(|v| **v >= 0.0).count();
    let temperatures = report.checks.iter().filter(|c| c.name.starts_with("temperature_defined")).count();
    let pass = all_pass(&report) && w.len() == 6 && temperatures == nonnegative;
    let min = w.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = Outcome::new(
        pass,
        format!(
            "non-compact positivity: {} runs, min w(0) = {min:.4e}, {temperatures} temperatures for {nonnegative} non-negative values",
            w.len()
        ),
    )
    .detail(format!("runtime {:.1} s", elapsed.as_secs_f64()));
    out.details.extend(failing(&report));
    out
}

fn criterion_6() -> Outcome {
    let xi_high = 1.0 / 6.0 - 0.01;
    let (report, elapsed) = run(&format!(
        r#"
        [[scenario]]
        id = "acceptance-compact"
        kind = "positive_compact"
        geometry = {{ model = "quartic_shell", r_match = 4.0 }}
        grid = {{ points = 800, levels = [400, 600, 800], reference_points = 800 }}
        field = {{ xi = [0.05, {xi_high:?}] }}
        states = {{ ground = true, betas = [2.0] }}
        checks = {{ agreement = 0.1 }}
    "#
    ));
    let agreements: Vec<String> = report
        .checks
        .iter()
        .filter(|c| c.name.starts_with("estimators_agree"))
        .map(|c| format!("{:.2e}/{:.2e}", c.value.0, c.bound.0))
        .collect();
    let min = report
        .checks
        .iter()
        .filter(|c| c.name.starts_with("w_nonnegative"))
        .map(|c| c.value.0)
        .fold(f64::INFINITY, f64::min);
    let pass = all_pass(&report) && agreements.len() == 4;
    let mut out = Outcome::new(
        pass,
        format!("compact positivity: min w(center) = {min:.4e}, estimator gaps / allowed = {}", agreements.join(", ")),
    )
    .detail(format!("runtime {:.1} s", elapsed.as_secs_f64()));
    out.details.extend(failing(&report));
    out
}

fn criterion_7() -> Outcome {
    let (report, _) = run(r#"
        [[scenario]]
        id = "acceptance-reduction"
        kind = "reduction"
        geometry = { side = 4.0 }
        grid = { points = 4, tau_levels = [8, 16, 32] }
        field = { mass = 1.0 }
        states = { betas = [2.0] }
        checks = { tolerance = 1e-10, tau_order = 1.8 }
    "#);
    let identity = check_value(&report, "matsubara_single_mode");
    let order = check_value(&report, "euclidean_tau_order");
    let (w, beta) = (1.3, 2.0);
    let oracle = (matsubara_oracle(w, beta, 1_000_000) - 1.0 / (2.0 * w * (beta * w / 2.0).tanh())).abs();
    let pass = all_pass(&report) && identity <= 1e-10 && oracle <= 1e-10;
    let mut out = Outcome::new(
        pass,
        format!("reduction: single-mode identity residual {identity:.2e} (<= 1e-10), tau order {order:.3} over two refinements"),
    )
    .detail(format!("independent frequency sum at w = {w}, beta = {beta}: residual {oracle:.2e}"));
    out.details.extend(failing(&report));
    out
}

fn criterion_8() -> Outcome {
    let (report, elapsed) = run(r#"
        seed = 20240611
        [[scenario]]
        id = "acceptance-comparison"
        kind = "comparison"
        grid = { points = 8 }
        field = { mass = 1.0 }
        checks = { pairs = 100, tolerance = 1e-10 }
    "#);
    let pass = all_pass(&report) && elapsed.as_secs_f64() < 120.0;
    let mut out = Outcome::new(
        pass,
        format!(
            "comparison: 100 pairs on 8^3, min scaled eigenvalue {:.2e} (>= -1e-10), min entry {:.3e}, counterexamples {}, runtime {:.1} s (< 120 s)",
            check_value(&report, "inverse_ordering_psd"),
            check_value(&report, "kernel_entries_positive"),
            check_value(&report, "counterexamples"),
            elapsed.as_secs_f64()
        ),
    );
    out.details.extend(failing(&report));
    out
}

fn criterion_9() -> Outcome {
    let torus = r#"
        [[scenario]]
        id = "acceptance-lapse-torus"
        kind = "lapse_scaling"
        grid = { points = 6 }
        field = { mass = 1.0 }
        states = { betas = [0.8] }
        checks = { lapse_factors = [0.5, 2.0, 10.0], tolerance = 1e-10 }
    "#;
    let radial = r#"
        [[scenario]]
        id = "acceptance-lapse-exp"
        kind = "lapse_scaling"
        geometry = { model = "exp_newton", r_max = 80.0 }
        grid = { points = 4000, levels = [2000, 3000, 4000] }
        states = { betas = [1.0] }
        checks = { lapse_factors = [0.5, 2.0, 10.0], tolerance = 1e-10 }
    "#;
    let mut pass = true;
    let mut worst = Vec::new();
    let mut details = Vec::new();
    for (name, text) in [("torus", torus), ("exp-Newton", radial)] {
        let (report, _) = run(text);
        pass &= all_pass(&report) && report.checks.len() == 3;
        let w = report.checks.iter().map(|c| c.value.0).fold(0.0f64, f64::max);
        worst.push(format!("{name} {w:.2e}"));
        details.extend(failing(&report));
    }
    let mut out = Outcome::new(pass, format!("constant-lapse scaling, c in {{1/2, 2, 10}}: worst relative residual {} (<= 1e-10)", worst.join(", ")));
    out.details = details;
    out
}

fn criterion_10() -> Outcome {
    let (report, _) = run(r#"
        seed = 20240611
        [[scenario]]
        id = "acceptance-perturbed"
        kind = "perturbed_states"
        grid = { points = 6 }
        field = { mass = 1.0 }
        checks = { states = 50, tolerance = 1e-10 }
    "#);
    let pass = all_pass(&report);
    let mut out = Outcome::new(
        pass,
        format!(
            "perturbed states: 50 states, min scaled eigenvalue of the difference {:.2e}, violations {}",
            check_value(&report, "difference_psd"),
            check_value(&report, "violations")
        ),
    );
    out.details.extend(failing(&report));
    out
}

fn main() -> ExitCode {
    let (one, two) = criterion_1_and_2();
    let outcomes = [
        (1, one),
        (2, two),
        (3, criterion_3()),
        (4, criterion_4()),
        (5, criterion_5()),
        (6, criterion_6()),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9()),
        (10, criterion_10()),
    ];
    let mut failures = 0;
    for (n, o) in &outcomes {
        println!("{} criterion {n:>2}: {}", if o.pass { "PASS" } else { "FAIL" }, o.summary);
        for d in &o.details {
            println!("                 {d}");
        }
        failures += usize::from(!o.pass);
    }
    println!("{} of {} criteria pass", outcomes.len() - failures, outcomes.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
