//! Configuration-driven scenarios for `wickthermo-core`.
//!
//! A configuration file lists scenarios; each runs a family of numerical
//! checks and produces a [`report::Report`] with one record per check,
//! written as JSON plus CSV and plot-data tables for beta sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod scenarios;

pub use config::{load_config, parse_config, ConfigFile, ScenarioConfig, ScenarioKind};
pub use error::{Error, Result};
pub use report::{CheckRecord, Report, Status};
pub use run::{execute, exit_code, RunManifest};
pub use scenarios::run_scenario;
