//! Scenario reports and their JSON, CSV and plot-data forms.
//!
//! Numbers are written in scientific notation with 17 significant digits,
//! which round-trips every `f64`, so reports from the same configuration
//! and seed differ only in `generated_at` and `runtime_seconds`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};

use crate::config::ScenarioKind;
use crate::error::{Error, Result};

/// An `f64` serialized with 17 significant digits (`null` when not finite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Num {
    pub fn text(self) -> String {
        format_number(self.0)
    }
}

/// `{:.16e}` form, or `nan`/`inf` for non-finite values.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = serde_json::value::RawValue::from_string(format_number(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

fn nums<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| Num(*x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::Fail => "FAIL",
        }
    }

    pub fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// One check: a measured value against a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// The claim or invariant the check belongs to.
    pub claim: String,
    pub value: Num,
    /// `value <relation> bound` is what passing means.
    pub relation: &'static str,
    pub bound: Num,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, claim: impl Into<String>, value: f64, relation: &'static str, bound: f64) -> Self {
        let status = Status::from_bool(match relation {
            "<=" => value <= bound,
            "<" => value < bound,
            ">=" => value >= bound,
            ">" => value > bound,
            "==" => value == bound,
            _ => false,
        });
        CheckRecord {
            name: name.into(),
            claim: claim.into(),
            value: Num(value),
            relation,
            bound: Num(bound),
            status,
            detail: None,
        }
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// One row of a per-beta table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: Num,
    pub w: Num,
    pub w_error: Num,
    /// Local temperature, `null` when undefined.
    pub temperature: Num,
    pub defined: bool,
}

impl SweepRow {
    pub fn new(beta: f64, w: f64, w_error: f64, temperature: Option<f64>) -> Self {
        SweepRow {
            beta: Num(beta),
            w: Num(w),
            w_error: Num(w_error),
            temperature: Num(temperature.unwrap_or(f64::NAN)),
            defined: temperature.is_some(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub label: String,
    pub rows: Vec<SweepRow>,
}

/// Data needed to reproduce a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: Option<u64>,
    /// Finest-level grid spacings used, one per model run.
    #[serde(serialize_with = "nums")]
    pub spacings: Vec<f64>,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub kind: ScenarioKind,
    pub status: Status,
    pub checks: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweeps: Vec<SweepTable>,
    /// Informational remarks that do not affect the status.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Inputs that violated a check, kept for reproduction.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub counterexamples: Vec<serde_json::Value>,
    pub provenance: Provenance,
    pub runtime_seconds: Num,
    /// Seconds since the Unix epoch.
    pub generated_at: u64,
}

impl Report {
    /// Worst status over all checks; an empty report is a failure.
    pub fn overall(checks: &[CheckRecord]) -> Status {
        checks.iter().map(|c| c.status).max().unwrap_or(Status::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `<stem>.json` plus one CSV and one plot-data file per sweep.
    pub fn write(&self, dir: &Path, stem: &str, csv: bool, plot: bool) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, self.to_json()? + "\n").map_err(|e| Error::io(&json, e))?;
        written.push(json);
        for table in &self.sweeps {
            if csv {
                let path = dir.join(format!("{stem}_{}.csv", table.label));
                write_csv(&path, table)?;
                written.push(path);
            }
            if plot {
                let path = dir.join(format!("{stem}_{}.dat", table.label));
                std::fs::write(&path, plot_data(table)).map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

/// Columns `beta, w, w_error, temperature, defined_flag`.
pub fn write_csv(path: &Path, table: &SweepTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["beta", "w", "w_error", "temperature", "defined_flag"])?;
    for r in &table.rows {
        w.write_record([
            r.beta.text(),
            r.w.text(),
            r.w_error.text(),
            r.temperature.text(),
            u8::from(r.defined).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Whitespace-separated `beta w T` rows; undefined temperatures are `nan`.
pub fn plot_data(table: &SweepTable) -> String {
    let mut s = String::from("# beta w T\n");
    for r in &table.rows {
        let _ = writeln!(s, "{} {} {}", r.beta.text(), r.w.text(), r.temperature.text());
    }
    s
}
