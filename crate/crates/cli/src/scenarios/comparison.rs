use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use wickthermo_core::lattice::{assemble_torus, TorusGrid};
use wickthermo_core::linalg::{symmetric_eigenvalues, Cholesky, Matrix};

use super::Recorder;
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::report::{CheckRecord, Report};

/// Largest background potential value drawn per node.
const BACKGROUND_SCALE: f64 = 4.0;
/// Range of bump heights added to the background.
const BUMP_HEIGHT: (f64, f64) = (0.5, 8.0);

/// One random pair and what was measured on it.
struct PairOutcome {
    v1: Vec<f64>,
    v2: Vec<f64>,
    /// Smallest eigenvalue of `G1 - G2` divided by `|G1|`.
    relative_min_eigenvalue: f64,
    min_entry: f64,
    max_diagonal_gain: f64,
}

/// `V1 >= 0` uniform per node, `V2 = V1 +` a periodic Gaussian bump.
fn random_pair(n: usize, side: f64, seed: u64, index: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let v1: Vec<f64> = (0..n * n * n).map(|_| rng.gen_range(0.0..BACKGROUND_SCALE)).collect();
    let centre = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
    let height = rng.gen_range(BUMP_HEIGHT.0..BUMP_HEIGHT.1);
    let width = rng.gen_range(0.05..0.25) * side;
    let h = side / n as f64;
    let wrap = |a: usize, b: usize| {
        let d = a.abs_diff(b);
        d.min(n - d) as f64 * h
    };
    let v2 = v1
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let (x, y, z) = (idx / (n * n), (idx / n) % n, idx % n);
            let r2 = wrap(x, centre[0]).powi(2) + wrap(y, centre[1]).powi(2) + wrap(z, centre[2]).powi(2);
            v + height * (-r2 / (2.0 * width * width)).exp()
        })
        .collect();
    (v1, v2)
}

/// Green kernel `A^-1` with respect to the uniform torus measure.
fn green(grid: TorusGrid, potential: &[f64], mass: f64) -> Result<Matrix> {
    let op = assemble_torus(grid, potential, mass)?;
    let cell = op.measure()[0];
    Ok(Cholesky::new(&op.to_dense())?.inverse().scale(1.0 / cell))
}

fn measure_pair(grid: TorusGrid, mass: f64, v1: Vec<f64>, v2: Vec<f64>) -> Result<PairOutcome> {
    let g1 = green(grid, &v1, mass)?;
    let g2 = green(grid, &v2, mass)?;
    let diff = g1.sub(&g2);
    let norm = *symmetric_eigenvalues(&g1)?.last().expect("non-empty");
    let min_eig = symmetric_eigenvalues(&diff)?[0];
    let max_diagonal_gain = diff.diagonal().into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(PairOutcome {
        v1,
        v2,
        relative_min_eigenvalue: min_eig / norm,
        min_entry: g1.min_entry().min(g2.min_entry()),
        max_diagonal_gain,
    })
}

/// Operator ordering and kernel positivity over seeded random potential pairs.
pub fn run_comparison_properties(config: &ScenarioConfig, seed: Option<u64>) -> Result<Report> {
    let mut rec = Recorder::new(config, seed);
    let claim = rec.claim();
    let n = config.points();
    let side = config.geometry.side;
    let grid = TorusGrid::new(side, n)?;
    let mass = config.mass();
    let tol = config.checks.tolerance;
    let base_seed = seed.unwrap_or(0);
    rec.spacings.push(grid.spacing());

    let (v, _) = random_pair(n, side, base_seed, u64::MAX);
    let same = measure_pair(grid, mass, v.clone(), v)?;
    rec.push(CheckRecord::new(
        "identical_potentials_give_identical_kernels",
        claim,
        same.relative_min_eigenvalue.abs(),
        "==",
        0.0,
    ));

    let outcomes: Vec<PairOutcome> = (0..config.checks.pairs as u64)
        .into_par_iter()
        .map(|i| {
            let (v1, v2) = random_pair(n, side, base_seed, i);
            measure_pair(grid, mass, v1, v2)
        })
        .collect::<Result<_>>()?;

    let worst_eig = outcomes.iter().map(|o| o.relative_min_eigenvalue).fold(f64::INFINITY, f64::min);
    let min_entry = outcomes.iter().map(|o| o.min_entry).fold(f64::INFINITY, f64::min);
    let not_strict = outcomes.iter().filter(|o| !(o.max_diagonal_gain > 0.0)).count();
    let mut bad = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.relative_min_eigenvalue < -tol || !(o.min_entry > 0.0) || !(o.max_diagonal_gain > 0.0) {
            bad += 1;
            rec.counterexamples.push(json!({
                "pair": i,
                "seed": base_seed,
                "v1": o.v1,
                "v2": o.v2,
                "relative_min_eigenvalue": o.relative_min_eigenvalue,
                "min_entry": o.min_entry,
                "max_diagonal_gain": o.max_diagonal_gain,
            }));
        }
    }
    rec.push(
        CheckRecord::new("inverse_ordering_psd", claim, worst_eig, ">=", -tol)
            .with_detail(format!("smallest eigenvalue of G1 - G2 over |G1|, {} pairs", outcomes.len())),
    );
    rec.push(CheckRecord::new("kernel_entries_positive", claim, min_entry, ">", 0.0));
    rec.push(
        CheckRecord::new("diagonal_strictly_larger", claim, not_strict as f64, "==", 0.0)
            .with_detail("pairs where no point has (G1 - G2)(x, x) > 0"),
    );
    rec.push(CheckRecord::new("counterexamples", claim, bad as f64, "==", 0.0));
    Ok(rec.finish())
}
