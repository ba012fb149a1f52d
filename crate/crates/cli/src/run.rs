//! Scenario selection, parallel execution and report output.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{ConfigFile, ScenarioConfig};
use crate::error::{Error, Result};
use crate::report::{Report, Status};
use crate::scenarios::run_scenario;

/// What to run and where to write it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_path: String,
    /// Scenario ids; empty selects all.
    pub scenarios: Vec<String>,
    pub out_dir: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    pub seed: Option<u64>,
    /// Worker threads; `None` uses one per core.
    pub jobs: Option<usize>,
}

impl RunManifest {
    /// The selected scenarios, in configuration order.
    pub fn select<'a>(&self, config: &'a ConfigFile) -> Result<Vec<&'a ScenarioConfig>> {
        if let Some(missing) = self.scenarios.iter().find(|id| !config.scenarios.iter().any(|s| &s.id == *id)) {
            return Err(Error::UnknownScenario(missing.clone()));
        }
        Ok(config
            .scenarios
            .iter()
            .filter(|s| self.scenarios.is_empty() || self.scenarios.contains(&s.id))
            .collect())
    }

    /// Creates the output directory and checks that it accepts files.
    pub fn prepare_output(&self) -> Result<Option<&Path>> {
        let Some(dir) = self.out_dir.as_deref() else {
            return Ok(None);
        };
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let probe = dir.join(".wickthermo-write-test");
        std::fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
        std::fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))?;
        Ok(Some(dir))
    }
}

/// Seed for one scenario: the override, then the scenario's, then the file's.
pub fn effective_seed(manifest_seed: Option<u64>, file: &ConfigFile, scenario: &ScenarioConfig) -> Option<u64> {
    manifest_seed.or(scenario.seed).or(file.seed)
}

/// Runs the selected scenarios concurrently; reports keep configuration order.
pub fn execute(manifest: &RunManifest, config: &ConfigFile) -> Result<Vec<Report>> {
    let selected = manifest.select(config)?;
    let out = manifest.prepare_output()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = manifest.jobs {
        pool = pool.num_threads(jobs.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| Error::config("--jobs", e.to_string()))?;
    let reports: Vec<Report> = pool.install(|| {
        selected
            .par_iter()
            .map(|s| run_scenario(s, effective_seed(manifest.seed, config, s)))
            .collect::<Result<_>>()
    })?;
    if let Some(dir) = out {
        for (report, s) in reports.iter().zip(&selected) {
            report.write(dir, &s.stem(), s.output.csv, s.output.plot)?;
        }
    }
    Ok(reports)
}

/// Exit code: 0 all pass, 1 any failure, 2 inconclusive without failures.
pub fn exit_code(reports: &[Report]) -> i32 {
    match reports.iter().map(|r| r.status).max() {
        Some(Status::Fail) | None => 1,
        Some(Status::Inconclusive) => 2,
        Some(Status::Pass) => 0,
    }
}
