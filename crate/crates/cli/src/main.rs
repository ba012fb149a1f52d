use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wickthermo::config::{
    parse_config, BetaGrid, ConfigFile, GeometryConfig, GridConfig, ModelKind, OneOrMany, ScenarioConfig, Spacing,
    StatesConfig, DIMENSION_CAP_ENV,
};
use wickthermo::report::format_number;
use wickthermo::{execute, exit_code, load_config, Error, Report, RunManifest, ScenarioKind};

const USAGE_EXIT: u8 = 3;

/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

const SCHEMA_HINT: &str = "configuration: a TOML file with an optional top-level `seed` and [[scenario]] tables \
holding `id`, `kind` and the sections geometry, grid, field, states, checks, output; \
see docs/config-schema.md. Use `--config default` for the shipped configuration.";

#[derive(Debug, Parser)]
#[command(name = "wickthermo", version, about = "Wick squares and local temperatures of static scalar fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run scenarios and write their reports.
    Run {
        /// Configuration file, or `default` for the shipped one.
        #[arg(long, default_value = "default")]
        config: String,
        /// Scenario id to run; repeat to select several (all by default).
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        /// Directory for JSON, CSV and plot-data output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed overriding every seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Scenarios run concurrently on this many threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List the scenarios of a configuration, or every scenario kind.
    List {
        #[arg(long)]
        config: Option<String>,
    },
    /// Parse and validate a configuration without running it.
    Validate {
        #[arg(long, default_value = "default")]
        config: String,
    },
    /// Ad-hoc KMS sweep with the monotonicity checks.
    Sweep {
        #[arg(long, value_enum, default_value_t = SweepModel::Torus)]
        model: SweepModel,
        /// Points per torus axis or radial points of the finest level.
        #[arg(long)]
        points: Option<usize>,
        /// Torus side length.
        #[arg(long, default_value_t = 1.0)]
        side: f64,
        /// Torus mass.
        #[arg(long)]
        mass: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        xi: f64,
        /// Wall radius of radial models.
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long, default_value_t = 0.25)]
        beta_min: f64,
        #[arg(long, default_value_t = 8.0)]
        beta_max: f64,
        #[arg(long, default_value_t = 25)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepModel {
    Torus,
    Unit,
    ExpNewton,
    AffineNewton,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // Help and version requests.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            eprintln!("\n{SCHEMA_HINT}");
            return ExitCode::from(USAGE_EXIT);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let usage = matches!(e, Error::Config { .. } | Error::Syntax(_) | Error::UnknownScenario(_) | Error::Io { .. });
            if usage {
                eprintln!("\n{SCHEMA_HINT}");
                ExitCode::from(USAGE_EXIT)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn dispatch(command: Command) -> wickthermo::Result<u8> {
    match command {
        Command::Run {
            config,
            scenarios,
            out,
            seed,
            jobs,
        } => {
            let file = load_config(&config)?;
            let manifest = RunManifest {
                config_path: config,
                scenarios,
                out_dir: out,
                seed,
                jobs,
            };
            let reports = execute(&manifest, &file)?;
            reports.iter().for_each(print_report);
            Ok(exit_code(&reports) as u8)
        }
        Command::List { config } => {
            match config {
                Some(path) => {
                    let file = load_config(&path)?;
                    out!("{:<28} {:<20} claim", "id", "kind");
                    for s in &file.scenarios {
                        out!("{:<28} {:<20} {}", s.id, s.kind.name(), s.kind.claim());
                    }
                }
                None => {
                    out!("{:<20} claim", "kind");
                    for k in ScenarioKind::ALL {
                        out!("{:<20} {}", k.name(), k.claim());
                    }
                }
            }
            Ok(0)
        }
        Command::Validate { config } => {
            let file = load_config(&config)?;
            out!("{config}: {} scenarios valid", file.scenarios.len());
            if let Ok(v) = std::env::var(DIMENSION_CAP_ENV) {
                out!("dimension cap overridden by {DIMENSION_CAP_ENV}={v}");
            }
            Ok(0)
        }
        Command::Sweep {
            model,
            points,
            side,
            mass,
            xi,
            r_max,
            beta_min,
            beta_max,
            count,
            out,
        } => {
            let model = match model {
                SweepModel::Torus => ModelKind::Torus,
                SweepModel::Unit => ModelKind::Unit,
                SweepModel::ExpNewton => ModelKind::ExpNewton,
                SweepModel::AffineNewton => ModelKind::AffineNewton,
            };
            let text = toml::to_string(&ConfigFile {
                seed: None,
                scenarios: vec![ScenarioConfig {
                    id: "sweep".into(),
                    kind: ScenarioKind::Monotonicity,
                    seed: None,
                    geometry: GeometryConfig {
                        model: Some(model),
                        side,
                        r_max,
                        ..GeometryConfig::default()
                    },
                    grid: GridConfig {
                        points,
                        ..GridConfig::default()
                    },
                    field: wickthermo::config::FieldConfig {
                        mass,
                        xi: OneOrMany::One(xi),
                    },
                    states: StatesConfig {
                        beta_grid: Some(BetaGrid {
                            min: beta_min,
                            max: beta_max,
                            count,
                            spacing: Spacing::Log,
                        }),
                        ..StatesConfig::default()
                    },
                    checks: Default::default(),
                    output: Default::default(),
                }],
            })
            .map_err(|e| Error::config("sweep", e.to_string()))?;
            // Round-trip through the parser so flags get the same validation as files.
            let file = parse_config(&text)?;
            let manifest = RunManifest {
                config_path: "<flags>".into(),
                scenarios: Vec::new(),
                out_dir: out,
                seed: None,
                jobs: Some(1),
            };
            let reports = execute(&manifest, &file)?;
            for table in reports.iter().flat_map(|r| &r.sweeps) {
                out!("beta,w,w_error,temperature,defined_flag");
                for row in &table.rows {
                    out!(
                        "{},{},{},{},{}",
                        row.beta.text(),
                        row.w.text(),
                        row.w_error.text(),
                        row.temperature.text(),
                        u8::from(row.defined)
                    );
                }
            }
            reports.iter().for_each(print_report);
            Ok(exit_code(&reports) as u8)
        }
    }
}

fn print_report(report: &Report) {
    out!(
        "{:<12} {} ({}, {:.1} s)",
        report.status.label(),
        report.scenario,
        report.kind.name(),
        report.runtime_seconds.0
    );
    for c in &report.checks {
        out!(
            "  {:<12} {} = {} {} {}",
            c.status.label(),
            c.name,
            format_number(c.value.0),
            c.relation,
            format_number(c.bound.0)
        );
    }
}
