use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use wickthermo_core::linalg::symmetric_eigenvalues;
use wickthermo_core::spectral::decompose;
use wickthermo_core::thermal::{state_kernel, StationaryState};

use super::{torus_operator, Recorder};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::report::{CheckRecord, Report};

/// Largest occupation number drawn per mode.
const OCCUPATION_SCALE: f64 = 3.0;

/// Seeded stationary states with non-negative occupations against the ground state.
pub fn run_perturbed_states(config: &ScenarioConfig, seed: Option<u64>) -> Result<Report> {
    let mut rec = Recorder::new(config, seed);
    let claim = rec.claim();
    let op = torus_operator(config, config.points())?;
    rec.spacings.push(op.spacing());
    let dec = decompose(&op)?;
    let ground = state_kernel(&StationaryState::Ground, &dec)?.values;
    let norm = *symmetric_eigenvalues(&ground)?.last().expect("non-empty");
    let ground_diag = ground.diagonal();
    let diag_scale = ground_diag.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = config.checks.tolerance;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));

    let (mut worst_eig, mut worst_diag, mut bad) = (f64::INFINITY, f64::INFINITY, 0usize);
    for i in 0..config.checks.states {
        // About a quarter of the modes stay empty.
        let occupations: Vec<f64> = (0..dec.len())
            .map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(0.0..OCCUPATION_SCALE) })
            .collect();
        let state = StationaryState::Perturbed { occupations };
        let diff = state_kernel(&state, &dec)?.values.sub(&ground);
        let eig = symmetric_eigenvalues(&diff)?[0] / norm;
        let gain = diff
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |a, v| a.min(*v))
            / diag_scale;
        worst_eig = worst_eig.min(eig);
        worst_diag = worst_diag.min(gain);
        if eig < -tol || gain < -tol {
            bad += 1;
            if let StationaryState::Perturbed { occupations } = &state {
                rec.counterexamples.push(json!({ "state": i, "occupations": occupations, "min_eigenvalue": eig }));
            }
        }
    }
    rec.push(
        CheckRecord::new("difference_psd", claim, worst_eig, ">=", -tol)
            .with_detail(format!("smallest eigenvalue of K_state - K_ground over |K_ground|, {} states", config.checks.states)),
    );
    rec.push(
        CheckRecord::new("pointwise_dominance", claim, worst_diag, ">=", -tol)
            .with_detail("smallest (w_state - w_ground)(x) over the largest ground value"),
    );
    rec.push(CheckRecord::new("violations", claim, bad as f64, "==", 0.0));
    Ok(rec.finish())
}
