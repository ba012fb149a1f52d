//! Scenario configuration files.
//!
//! A configuration is a TOML document with an optional top-level `seed` and
//! one `[[scenario]]` table per experiment. Each scenario has the sections
//! `geometry`, `grid`, `field`, `states`, `checks` and `output`; every
//! section and key is optional except `id` and `kind`. Unknown keys are
//! rejected. See `docs/config-schema.md` for the full key list.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use wickthermo_core::lattice::{DEFAULT_DIMENSION_CAP, QUARTIC_MATCH_FACTOR};

use crate::error::{Error, Result};

/// Environment variable that overrides every matrix-dimension cap.
pub const DIMENSION_CAP_ENV: &str = "WICKTHERMO_DIMENSION_CAP";

/// The configuration shipped with the binary, selected by `--config default`.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(rename = "scenario", default)]
    pub scenarios: Vec<ScenarioConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Monotonicity,
    Counterexample,
    PositiveNoncompact,
    PositiveCompact,
    Comparison,
    Reduction,
    Calibration,
    LapseScaling,
    PerturbedStates,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 9] = [
        ScenarioKind::Monotonicity,
        ScenarioKind::Counterexample,
        ScenarioKind::PositiveNoncompact,
        ScenarioKind::PositiveCompact,
        ScenarioKind::Comparison,
        ScenarioKind::Reduction,
        ScenarioKind::Calibration,
        ScenarioKind::LapseScaling,
        ScenarioKind::PerturbedStates,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Monotonicity => "monotonicity",
            ScenarioKind::Counterexample => "counterexample",
            ScenarioKind::PositiveNoncompact => "positive_noncompact",
            ScenarioKind::PositiveCompact => "positive_compact",
            ScenarioKind::Comparison => "comparison",
            ScenarioKind::Reduction => "reduction",
            ScenarioKind::Calibration => "calibration",
            ScenarioKind::LapseScaling => "lapse_scaling",
            ScenarioKind::PerturbedStates => "perturbed_states",
        }
    }

    /// The claim a scenario of this kind checks.
    pub fn claim(self) -> &'static str {
        match self {
            ScenarioKind::Monotonicity => {
                "KMS Wick square decreases strictly in beta, obeys the Lipschitz and tail bounds, and tends to the ground value"
            }
            ScenarioKind::Counterexample => {
                "ground-state Wick square is negative at the centre of the exponential conformal model (xi < 1/8)"
            }
            ScenarioKind::PositiveNoncompact => {
                "Wick square is non-negative in the flat interior of the affine conformal model, so the local temperature is defined"
            }
            ScenarioKind::PositiveCompact => {
                "Wick square is non-negative at the centre of the quartic shell model for 0 < xi < 1/6; coincidence and asymptotic estimates agree"
            }
            ScenarioKind::Comparison => {
                "larger potentials give smaller Green operators, and Green kernels are entrywise positive"
            }
            ScenarioKind::Reduction => {
                "equal-time thermal kernel equals the Matsubara sum and the Euclidean lattice inverse on the beta circle"
            }
            ScenarioKind::Calibration => "flat-space local temperature equals 1/beta at high temperature",
            ScenarioKind::LapseScaling => "a constant lapse c maps w(beta) to w(c beta) c^2 exactly",
            ScenarioKind::PerturbedStates => {
                "stationary states with non-negative occupations dominate the ground state pointwise"
            }
        }
    }

    fn allows(self, model: ModelKind) -> bool {
        use ModelKind::*;
        match self {
            ScenarioKind::Monotonicity => true,
            ScenarioKind::Counterexample => matches!(model, ExpNewton | Unit),
            ScenarioKind::PositiveNoncompact => matches!(model, AffineNewton | Unit),
            ScenarioKind::PositiveCompact => model == QuarticShell,
            ScenarioKind::LapseScaling => matches!(model, Torus | ExpNewton | AffineNewton | Unit),
            ScenarioKind::Comparison
            | ScenarioKind::Reduction
            | ScenarioKind::Calibration
            | ScenarioKind::PerturbedStates => model == Torus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Torus,
    /// Flat radial ball (`Omega = 1`), a control.
    Unit,
    ExpNewton,
    AffineNewton,
    QuarticShell,
}

impl ModelKind {
    pub fn is_radial(self) -> bool {
        self != ModelKind::Torus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Uniform,
    SmoothBump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default)]
    pub states: StatesConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    /// Defaults to the natural model of the scenario kind.
    pub model: Option<ModelKind>,
    /// Torus side length.
    pub side: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    /// Total shell mass.
    pub mu: f64,
    pub profile: Profile,
    /// Dirichlet wall radius; defaults to `40 r_outer`.
    pub r_max: Option<f64>,
    /// Chart matching radius of the quartic model; defaults to `2 r_outer`.
    pub r_match: Option<f64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            model: None,
            side: 1.0,
            r_inner: 1.0,
            r_outer: 2.0,
            mu: 1.0,
            profile: Profile::SmoothBump,
            r_max: None,
            r_match: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Points per torus axis or radial points of the finest level.
    pub points: Option<usize>,
    /// Point counts of the refinement levels, finest last.
    pub levels: Option<Vec<usize>>,
    /// Nodes of the quartic model's flat reference ball; defaults to `points`.
    pub reference_points: Option<usize>,
    /// Euclidean-time slices for the lattice inversion oracle.
    pub tau_levels: Option<Vec<usize>>,
    pub dimension_cap: Option<usize>,
}

/// A single value or a list in the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    /// Torus mass; radial models are massless.
    pub mass: Option<f64>,
    /// Scalar curvature coupling, one value or a list.
    pub xi: OneOrMany,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            mass: None,
            xi: OneOrMany::One(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default = "log_spacing")]
    pub spacing: Spacing,
}

fn log_spacing() -> Spacing {
    Spacing::Log
}

impl BetaGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / last;
                if i + 1 == self.count {
                    return self.max;
                }
                match self.spacing {
                    Spacing::Log => self.min * (self.max / self.min).powf(t),
                    Spacing::Linear => self.min + (self.max - self.min) * t,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSpec {
    Center,
    Node(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatesConfig {
    /// Include the ground state where the scenario evaluates states.
    pub ground: bool,
    /// Explicit inverse temperatures of KMS states.
    pub betas: Option<Vec<f64>>,
    /// Generated inverse temperatures; used when `betas` is absent.
    pub beta_grid: Option<BetaGrid>,
    /// Large `beta` standing in for the ground-state limit.
    pub limit_beta: f64,
    /// `beta` the limit is compared against.
    pub reference_beta: f64,
    /// Evaluation point; the centre for radial models, node 0 on a torus.
    pub point: Option<PointSpec>,
}

impl Default for StatesConfig {
    fn default() -> Self {
        StatesConfig {
            ground: true,
            betas: None,
            beta_grid: None,
            limit_beta: 64.0,
            reference_beta: 1.0,
            point: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksConfig {
    /// A strict sign is asserted only when `|w| >= sign_factor * error`.
    pub sign_factor: f64,
    /// Relative agreement of the two compact-model estimators.
    pub agreement: f64,
    /// Relative tolerance of exact lattice identities.
    pub tolerance: f64,
    /// Largest relative deviation in the high-temperature calibration.
    pub calibration: f64,
    /// Largest `w_excess(limit_beta) / w_excess(reference_beta)`.
    pub ground_ratio: f64,
    /// Smallest observed order of the Euclidean-time discretization error.
    pub tau_order: f64,
    /// Random potential pairs in the comparison scenario.
    pub pairs: usize,
    /// Random occupation vectors in the perturbed-states scenario.
    pub states: usize,
    /// Lapse constants of the scaling check.
    pub lapse_factors: Vec<f64>,
    /// Repeat radial runs with the wall radius doubled at the same spacing.
    pub rmax_doubling: bool,
    /// Run the `Omega = 1` control alongside the counterexample.
    pub control: bool,
    /// Proper-distance window of the asymptotic fit; defaults to `(0.3, 0.8) nu^2`.
    pub fit_window: Option<[f64; 2]>,
    pub fit_degree: usize,
    /// Truncation of the Matsubara sums (the tail is added in closed form).
    pub matsubara_terms: usize,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            sign_factor: 5.0,
            agreement: 0.1,
            tolerance: 1e-10,
            calibration: 0.02,
            ground_ratio: 1e-3,
            tau_order: 1.8,
            pairs: 100,
            states: 50,
            lapse_factors: vec![0.5, 2.0, 10.0],
            rmax_doubling: true,
            control: false,
            fit_window: None,
            fit_degree: 1,
            matsubara_terms: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Write per-beta CSV tables.
    pub csv: bool,
    /// Write `beta w T` plot-data files.
    pub plot: bool,
    /// File stem; defaults to the scenario id.
    pub stem: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            csv: true,
            plot: true,
            stem: None,
        }
    }
}

impl ScenarioConfig {
    pub fn model(&self) -> ModelKind {
        self.geometry.model.unwrap_or(match self.kind {
            ScenarioKind::Counterexample => ModelKind::ExpNewton,
            ScenarioKind::PositiveNoncompact => ModelKind::AffineNewton,
            ScenarioKind::PositiveCompact => ModelKind::QuarticShell,
            _ => ModelKind::Torus,
        })
    }

    pub fn points(&self) -> usize {
        self.grid.points.unwrap_or(match self.model() {
            ModelKind::Torus => 16,
            ModelKind::QuarticShell => 800,
            _ => 4000,
        })
    }

    /// Refinement levels, finest last.
    pub fn levels(&self) -> Vec<usize> {
        self.grid.levels.clone().unwrap_or_else(|| {
            let p = self.points();
            match self.model() {
                ModelKind::Torus => vec![p],
                _ => vec![p / 2, 3 * p / 4, p],
            }
        })
    }

    pub fn reference_points(&self) -> usize {
        self.grid.reference_points.unwrap_or_else(|| self.points())
    }

    pub fn tau_levels(&self) -> Vec<usize> {
        self.grid.tau_levels.clone().unwrap_or_else(|| vec![8, 16, 32])
    }

    pub fn r_max(&self) -> f64 {
        self.geometry.r_max.unwrap_or(40.0 * self.geometry.r_outer)
    }

    pub fn r_match(&self) -> f64 {
        self.geometry.r_match.unwrap_or(QUARTIC_MATCH_FACTOR * self.geometry.r_outer)
    }

    pub fn mass(&self) -> f64 {
        self.field.mass.unwrap_or(if self.model() == ModelKind::Torus { 1.0 } else { 0.0 })
    }

    pub fn xis(&self) -> Vec<f64> {
        self.field.xi.values()
    }

    /// KMS inverse temperatures, increasing.
    pub fn betas(&self) -> Vec<f64> {
        if let Some(b) = &self.states.betas {
            return b.clone();
        }
        self.states.beta_grid.as_ref().map(BetaGrid::values).unwrap_or_default()
    }

    pub fn point(&self) -> PointSpec {
        self.states.point.unwrap_or(if self.model().is_radial() {
            PointSpec::Center
        } else {
            PointSpec::Node(0)
        })
    }

    pub fn fit_window(&self, nu: f64) -> (f64, f64) {
        let [a, b] = self.checks.fit_window.unwrap_or([0.3 * nu * nu, 0.8 * nu * nu]);
        (a, b)
    }

    /// Dimension cap: the environment override, then the config, then the default.
    pub fn dimension_cap(&self) -> usize {
        std::env::var(DIMENSION_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .or(self.grid.dimension_cap)
            .unwrap_or(DEFAULT_DIMENSION_CAP)
    }

    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.id.clone())
    }

    /// SHA-256 of the canonical JSON form together with the effective seed.
    pub fn hash(&self, seed: Option<u64>) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).expect("configs always serialize"));
        h.update(seed.unwrap_or(0).to_le_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every value, addressing problems as `scenario[i].section.key`.
    pub fn validate(&self, index: usize) -> Result<()> {
        let at = |key: &str| format!("scenario[{index}].{key}");
        let positive = |key: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(at(key), format!("must be positive and finite, got {v}")))
            }
        };
        if self.id.trim().is_empty() || self.id.contains(['/', '\\']) {
            return Err(Error::config(at("id"), "must be a non-empty name without path separators"));
        }
        let model = self.model();
        if !self.kind.allows(model) {
            return Err(Error::config(
                at("geometry.model"),
                format!("{model:?} is not available for scenario kind {}", self.kind.name()),
            ));
        }

        let g = &self.geometry;
        positive("geometry.side", g.side)?;
        positive("geometry.mu", g.mu)?;
        positive("geometry.r_inner", g.r_inner)?;
        if !(g.r_outer > g.r_inner) {
            return Err(Error::config(at("geometry.r_outer"), "must exceed r_inner"));
        }
        positive("geometry.r_max", self.r_max())?;
        if model.is_radial() && model != ModelKind::QuarticShell && self.r_max() <= g.r_outer {
            return Err(Error::config(at("geometry.r_max"), "must lie outside the shell"));
        }
        if model == ModelKind::QuarticShell && self.r_match() <= g.r_outer {
            return Err(Error::config(at("geometry.r_match"), "must lie outside the shell"));
        }

        let levels = self.levels();
        if levels.is_empty() || levels.iter().any(|&p| p < 2) {
            return Err(Error::config(at("grid.levels"), "levels must hold point counts of at least 2"));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(at("grid.levels"), "levels must increase"));
        }
        let extrapolates = matches!(
            self.kind,
            ScenarioKind::Counterexample
                | ScenarioKind::PositiveNoncompact
                | ScenarioKind::PositiveCompact
                | ScenarioKind::Calibration
        );
        if extrapolates && levels.len() < 3 {
            return Err(Error::config(at("grid.levels"), "extrapolation needs at least 3 levels"));
        }
        if model == ModelKind::Torus && (self.points() < 4 || levels.iter().any(|&p| p < 4)) {
            return Err(Error::config(at("grid.points"), "a torus needs at least 4 points per axis"));
        }
        if self.kind == ScenarioKind::Reduction {
            if self.points() > 8 {
                return Err(Error::config(at("grid.points"), "the Euclidean oracle allows at most 8 points per axis"));
            }
            let tau = self.tau_levels();
            if tau.len() < 3 || tau.iter().any(|&t| t < 3) || tau.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::config(
                    at("grid.tau_levels"),
                    "needs at least 3 increasing slice counts of at least 3",
                ));
            }
        }
        if self.dimension_cap() == 0 {
            return Err(Error::config(at("grid.dimension_cap"), "must be positive"));
        }

        let mass = self.mass();
        if model == ModelKind::Torus {
            positive("field.mass", mass)?;
        } else if mass != 0.0 {
            return Err(Error::config(at("field.mass"), "radial models are massless"));
        }
        let xis = self.xis();
        if xis.is_empty() {
            return Err(Error::config(at("field.xi"), "needs at least one value"));
        }
        for (i, &xi) in xis.iter().enumerate() {
            let key = at(&format!("field.xi[{i}]"));
            if !xi.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
            match self.kind {
                ScenarioKind::PositiveCompact if !(xi > 0.0 && xi < 1.0 / 6.0) => {
                    return Err(Error::config(
                        key,
                        format!("{xi} is outside the scalar curvature coupling range xi in (0, 1/6)"),
                    ))
                }
                ScenarioKind::PositiveNoncompact if !(0.0..=0.125).contains(&xi) => {
                    return Err(Error::config(key, format!("{xi} is outside [0, 1/8]")))
                }
                ScenarioKind::Counterexample if !(0.0..0.125).contains(&xi) => {
                    return Err(Error::config(key, format!("{xi} is outside [0, 1/8)")))
                }
                _ => {}
            }
        }

        let s = &self.states;
        if s.betas.is_some() && s.beta_grid.is_some() {
            return Err(Error::config(at("states"), "give either betas or beta_grid, not both"));
        }
        if let Some(betas) = &s.betas {
            for (i, b) in betas.iter().enumerate() {
                positive(&format!("states.betas[{i}]"), *b)?;
            }
        }
        if let Some(grid) = &s.beta_grid {
            positive("states.beta_grid.min", grid.min)?;
            positive("states.beta_grid.max", grid.max)?;
            if grid.count == 0 || (grid.count > 1 && !(grid.max > grid.min)) {
                return Err(Error::config(at("states.beta_grid"), "needs count >= 1 and max > min"));
            }
        }
        let betas = self.betas();
        if betas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(at("states.betas"), "must increase strictly"));
        }
        if self.kind == ScenarioKind::Monotonicity && betas.len() < 2 {
            return Err(Error::config(at("states.betas"), "a sweep needs at least two values"));
        }
        if matches!(self.kind, ScenarioKind::Calibration | ScenarioKind::LapseScaling) && betas.is_empty() {
            return Err(Error::config(at("states.betas"), "needs at least one value"));
        }
        positive("states.limit_beta", s.limit_beta)?;
        positive("states.reference_beta", s.reference_beta)?;
        if s.limit_beta <= s.reference_beta {
            return Err(Error::config(at("states.limit_beta"), "must exceed reference_beta"));
        }
        if let PointSpec::Node(k) = self.point() {
            if model == ModelKind::Torus && k >= self.points().pow(3) {
                return Err(Error::config(at("states.point"), format!("node {k} is outside the torus")));
            }
        }

        let c = &self.checks;
        for (key, v) in [
            ("checks.sign_factor", c.sign_factor),
            ("checks.agreement", c.agreement),
            ("checks.tolerance", c.tolerance),
            ("checks.calibration", c.calibration),
            ("checks.ground_ratio", c.ground_ratio),
            ("checks.tau_order", c.tau_order),
        ] {
            positive(key, v)?;
        }
        for (i, f) in c.lapse_factors.iter().enumerate() {
            positive(&format!("checks.lapse_factors[{i}]"), *f)?;
        }
        if self.kind == ScenarioKind::Comparison && c.pairs == 0 {
            return Err(Error::config(at("checks.pairs"), "must be positive"));
        }
        if self.kind == ScenarioKind::PerturbedStates && c.states == 0 {
            return Err(Error::config(at("checks.states"), "must be positive"));
        }
        if let Some([a, b]) = c.fit_window {
            if !(a > 0.0 && b > a) {
                return Err(Error::config(at("checks.fit_window"), "needs 0 < start < end"));
            }
        }
        if c.matsubara_terms == 0 {
            return Err(Error::config(at("checks.matsubara_terms"), "must be positive"));
        }
        if let Some(stem) = &self.output.stem {
            if stem.is_empty() || stem.contains(['/', '\\']) {
                return Err(Error::config(at("output.stem"), "must be a plain file name"));
            }
        }
        Ok(())
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let file: ConfigFile = toml::from_str(text)?;
    if file.scenarios.is_empty() {
        return Err(Error::config("scenario", "at least one [[scenario]] table is required"));
    }
    for (i, s) in file.scenarios.iter().enumerate() {
        s.validate(i)?;
        if file.scenarios[..i].iter().any(|o| o.id == s.id) {
            return Err(Error::config(format!("scenario[{i}].id"), format!("duplicate id `{}`", s.id)));
        }
    }
    Ok(file)
}

/// Reads a configuration file; the name `default` selects the shipped one.
pub fn load_config(path: &str) -> Result<ConfigFile> {
    if path == "default" {
        return parse_config(DEFAULT_CONFIG);
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
