//! Run configuration: TOML file, scenario presets, command-line overrides,
//! validation and the echo of every defaulted value.
//!
//! Values are layered in this order, later layers winning:
//! built-in defaults, the scenario preset, the file, `--override` pairs.

use std::fmt;
use std::path::Path;

use kscons_core::diagnostics::{DiagnosticsConfig, Kappas};
use kscons_core::solver::Scheme;
use kscons_core::{Exponent, GridSpec, SolverConfig, Topology};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::HarnessError;

/// Label attached to every value the user did not set.
pub const DEFAULT_PROVENANCE: &str = "config-default, not a paper value";
/// Label for values supplied by a scenario preset.
pub const PRESET_PROVENANCE: &str = "scenario-preset, not a paper value";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    #[default]
    ConstantDecay,
    HeatMode,
    Mms,
    #[serde(rename = "equilibrium_2d")]
    Equilibrium2d,
    #[serde(rename = "stress_3d")]
    Stress3d,
    ScalingTest,
    Custom,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::ConstantDecay => "constant_decay",
            ScenarioKind::HeatMode => "heat_mode",
            ScenarioKind::Mms => "mms",
            ScenarioKind::Equilibrium2d => "equilibrium_2d",
            ScenarioKind::Stress3d => "stress_3d",
            ScenarioKind::ScalingTest => "scaling_test",
            ScenarioKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyName {
    NeumannBox,
    PeriodicTorus,
}

impl From<TopologyName> for Topology {
    fn from(t: TopologyName) -> Self {
        match t {
            TopologyName::NeumannBox => Topology::NeumannBox,
            TopologyName::PeriodicTorus => Topology::PeriodicTorus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    ExplicitEuler,
    Imex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `mean`
    Constant,
    /// `mean + amplitude · cos(first mode along x)`
    Cosine,
    /// `mean + amplitude · exp(−|x − center|² / (2 width²))`
    Gaussian,
    /// `mean + amplitude · S / max|S|`, `S` a random sum of low modes.
    RandomSmooth,
}

/// A criterion exponent as written in the file: an integer, a decimal or
/// a string such as `"8/5"` or `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExponentValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ExponentValue {
    pub fn parse(&self) -> Result<Exponent, String> {
        let text = match self {
            ExponentValue::Int(v) => v.to_string(),
            ExponentValue::Float(v) => format!("{v}"),
            ExponentValue::Text(s) => s.clone(),
        };
        text.parse::<Exponent>().map_err(|e| format!("exponent {text:?}: {e}"))
    }
}

impl From<&str> for ExponentValue {
    fn from(s: &str) -> Self {
        ExponentValue::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub cells: Vec<usize>,
    pub extent: Vec<f64>,
    pub topology: TopologyName,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            dim: 2,
            cells: vec![32, 32],
            extent: vec![1.0, 1.0],
            topology: TopologyName::PeriodicTorus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub chi: f64,
    pub scheme: SchemeName,
    pub cfl_safety: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub positivity_floor: f64,
    pub upwind: bool,
    pub blowup_sup_threshold: f64,
    pub dt_blowup_factor: f64,
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            chi: d.chi,
            scheme: match d.scheme {
                Scheme::ExplicitEuler => SchemeName::ExplicitEuler,
                Scheme::Imex => SchemeName::Imex,
            },
            cfl_safety: d.cfl_safety,
            dt_min: d.dt_min,
            dt_max: d.dt_max,
            positivity_floor: d.positivity_floor,
            upwind: d.upwind,
            blowup_sup_threshold: d.blowup_sup_threshold,
            dt_blowup_factor: d.dt_blowup_factor,
            cg_tolerance: d.cg_tolerance,
            cg_max_iterations: d.cg_max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KappaSection {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl Default for KappaSection {
    fn default() -> Self {
        let k = Kappas::default();
        KappaSection {
            k1: k.k1,
            k2: k.k2,
            k3: k.k3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub n_profile: Profile,
    pub n_mean: f64,
    pub n_amplitude: f64,
    pub c_profile: Profile,
    pub c_mean: f64,
    pub c_amplitude: f64,
    /// Highest wavenumber per axis of `random_smooth`.
    pub modes: usize,
    /// Standard deviation of `gaussian`, in length units.
    pub width: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            n_profile: Profile::Constant,
            n_mean: 1.0,
            n_amplitude: 0.0,
            c_profile: Profile::Constant,
            c_mean: 1.0,
            c_amplitude: 0.0,
            modes: 3,
            width: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupSection {
    /// Write a blow-up report for the `n_sup` series.
    pub fit: bool,
    pub window_fraction: f64,
    pub max_residual: f64,
    pub classify_tol: f64,
    /// Non-degeneracy threshold.
    pub epsilon: f64,
}

impl Default for BlowupSection {
    fn default() -> Self {
        BlowupSection {
            fit: false,
            window_fraction: 0.25,
            max_residual: 0.05,
            classify_tol: 0.05,
            epsilon: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub lambda: usize,
    pub levels: usize,
}

impl Default for ScalingSection {
    fn default() -> Self {
        ScalingSection { lambda: 2, levels: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsSection {
    /// Spatial refinement levels, each doubling the cells.
    pub levels: usize,
    /// Temporal levels on the base grid, each halving `dt`.
    pub time_levels: usize,
    /// Coarsest fixed step of the temporal study.
    pub dt: f64,
}

impl Default for MmsSection {
    fn default() -> Self {
        MmsSection {
            levels: 3,
            time_levels: 3,
            dt: 2e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub t_end: f64,
    pub sample_every: usize,
    pub snapshot_every: usize,
    pub out_dir: String,
    pub seed: u64,
    /// Right-hand-side constant of the entropy inequality monitor.
    pub c_monitor: f64,
    /// Constant of the blow-up lower bound.
    pub c3: f64,
    /// `(s, r)` pairs of the space-time criterion accumulators.
    pub criterion_pairs: Vec<[ExponentValue; 2]>,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub kappas: KappaSection,
    pub initial: InitialSection,
    pub blowup: BlowupSection,
    pub scaling: ScalingSection,
    pub mms: MmsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioKind::ConstantDecay,
            t_end: 1.0,
            sample_every: 10,
            snapshot_every: 0,
            out_dir: "out".into(),
            seed: 0,
            c_monitor: 1e3,
            c3: 1.0,
            criterion_pairs: vec![
                ["inf".into(), ExponentValue::Int(1)],
                [ExponentValue::Int(2), ExponentValue::Int(4)],
                [ExponentValue::Int(3), ExponentValue::Int(2)],
                ["8/5".into(), "inf".into()],
            ],
            grid: GridSection::default(),
            solver: SolverSection::default(),
            kappas: KappaSection::default(),
            initial: InitialSection::default(),
            blowup: BlowupSection::default(),
            scaling: ScalingSection::default(),
            mms: MmsSection::default(),
        }
    }
}

/// One value the user did not set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefaultedValue {
    pub key: String,
    pub value: String,
    pub provenance: &'static str,
}

impl fmt::Display for DefaultedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}  # {}", self.key, self.value, self.provenance)
    }
}

/// Validated configuration plus the record of applied defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub defaulted: Vec<DefaultedValue>,
}

fn table(text: &str) -> Table {
    text.parse::<Table>().expect("preset tables are valid TOML")
}

/// Scenario-specific defaults layered above the built-in ones.
pub fn preset(kind: ScenarioKind) -> Table {
    match kind {
        ScenarioKind::ConstantDecay => table(
            r#"
            t_end = 1.0
            sample_every = 100
            [grid]
            dim = 2
            cells = [16, 16]
            extent = [1.0, 1.0]
            topology = "periodic_torus"
            [solver]
            dt_min = 1e-4
            dt_max = 1e-4
            [initial]
            n_profile = "constant"
            n_mean = 1.0
            c_profile = "constant"
            c_mean = 1.0
            "#,
        ),
        ScenarioKind::HeatMode => table(
            r#"
            t_end = 0.1
            sample_every = 100
            [grid]
            dim = 1
            cells = [64]
            extent = [1.0]
            topology = "neumann_box"
            [initial]
            n_profile = "constant"
            n_mean = 0.0
            c_profile = "cosine"
            c_mean = 0.0
            c_amplitude = 1.0
            "#,
        ),
        ScenarioKind::Mms => table(
            r#"
            t_end = 0.1
            sample_every = 100
            [grid]
            dim = 2
            cells = [32, 32]
            extent = [1.0, 1.0]
            topology = "periodic_torus"
            [solver]
            upwind = false
            "#,
        ),
        ScenarioKind::Equilibrium2d => table(
            r#"
            t_end = 50.0
            sample_every = 500
            [grid]
            dim = 2
            cells = [32, 32]
            extent = [1.0, 1.0]
            topology = "periodic_torus"
            [initial]
            n_profile = "random_smooth"
            n_mean = 1.0
            n_amplitude = 0.5
            c_profile = "random_smooth"
            c_mean = 1.0
            c_amplitude = 0.5
            "#,
        ),
        ScenarioKind::Stress3d => table(
            r#"
            t_end = 0.05
            sample_every = 20
            [grid]
            dim = 3
            cells = [12, 12, 12]
            extent = [1.0, 1.0, 1.0]
            topology = "neumann_box"
            [solver]
            chi = 10.0
            [initial]
            n_profile = "gaussian"
            n_mean = 1.0
            n_amplitude = 4.0
            c_profile = "gaussian"
            c_mean = 0.0
            c_amplitude = 5.0
            width = 0.15
            "#,
        ),
        ScenarioKind::ScalingTest => table(
            r#"
            t_end = 0.02
            sample_every = 50
            [grid]
            dim = 2
            cells = [16, 16]
            extent = [1.0, 1.0]
            topology = "periodic_torus"
            [initial]
            n_profile = "cosine"
            n_mean = 1.0
            n_amplitude = 0.5
            c_profile = "cosine"
            c_mean = 1.0
            c_amplitude = 0.3
            [solver]
            upwind = false
            [scaling]
            levels = 4
            "#,
        ),
        ScenarioKind::Custom => Table::new(),
    }
}

fn merge(base: &mut Table, over: &Table) {
    for (key, value) in over {
        match (base.get_mut(key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(key.clone(), value.clone());
            }
        }
    }
}

fn flatten(prefix: &str, table: &Table, out: &mut Vec<(String, Value)>) {
    for (key, value) in table {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match value {
            Value::Table(t) => flatten(&path, t, out),
            other => out.push((path, other.clone())),
        }
    }
}

fn lookup<'a>(table: &'a Table, path: &str) -> Option<&'a Value> {
    let mut parts = path.split('.');
    let mut current = table.get(parts.next()?)?;
    for part in parts {
        current = current.as_table()?.get(part)?;
    }
    Some(current)
}

/// Parses the right-hand side of `--override key=value` as a TOML value,
/// falling back to a bare string.
fn parse_override_value(text: &str) -> Value {
    format!("v = {text}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

/// Applies `key.path=value` pairs on top of a user table.
pub fn apply_overrides(user: &mut Table, overrides: &[String]) -> Result<(), HarnessError> {
    for item in overrides {
        let (path, raw) = item
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("override {item:?} is not key=value")))?;
        let path = path.trim();
        if path.is_empty() {
            return Err(HarnessError::Config(format!("override {item:?} has an empty key")));
        }
        let mut parts: Vec<&str> = path.split('.').collect();
        let last = parts.pop().unwrap_or_default();
        let mut target = &mut *user;
        for part in parts {
            let entry = target
                .entry(part.to_string())
                .or_insert_with(|| Value::Table(Table::new()));
            target = entry
                .as_table_mut()
                .ok_or_else(|| HarnessError::Config(format!("override {path:?}: {part} is not a section")))?;
        }
        target.insert(last.to_string(), parse_override_value(raw.trim()));
    }
    Ok(())
}

/// Builds a validated configuration from a parsed user table.
pub fn resolve(user: &Table) -> Result<LoadedConfig, HarnessError> {
    let kind = match user.get("scenario") {
        None => ScenarioKind::default(),
        Some(v) => v
            .clone()
            .try_into::<ScenarioKind>()
            .map_err(|e| HarnessError::Config(format!("field `scenario`: {e}")))?,
    };
    let mut merged = Table::try_from(RunConfig::default())
        .map_err(|e| HarnessError::Config(format!("default serialization: {e}")))?;
    let preset = preset(kind);
    merge(&mut merged, &preset);
    merge(&mut merged, user);
    let config: RunConfig = Value::Table(merged.clone())
        .try_into()
        .map_err(|e| HarnessError::Config(format!("{e}")))?;

    let mut all = Vec::new();
    flatten("", &merged, &mut all);
    let defaulted = all
        .into_iter()
        .filter(|(path, _)| lookup(user, path).is_none())
        .map(|(key, value)| DefaultedValue {
            provenance: if lookup(&preset, &key).is_some() {
                PRESET_PROVENANCE
            } else {
                DEFAULT_PROVENANCE
            },
            value: value.to_string(),
            key,
        })
        .collect();

    let violations = config.violations();
    if !violations.is_empty() {
        return Err(HarnessError::Validation(violations));
    }
    Ok(LoadedConfig { config, defaulted })
}

/// Parses TOML text (with line/column context on failure), applies
/// overrides and validates.
pub fn load_str(text: &str, overrides: &[String]) -> Result<LoadedConfig, HarnessError> {
    let mut user: Table = text
        .parse()
        .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
    apply_overrides(&mut user, overrides)?;
    resolve(&user)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<LoadedConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    load_str(&text, overrides).map_err(|e| match e {
        HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

impl RunConfig {
    /// Every validation failure, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let g = &self.grid;
        if !(1..=3).contains(&g.dim) {
            out.push(format!("grid.dim must be 1, 2 or 3 (got {})", g.dim));
        }
        if g.cells.len() != g.dim {
            out.push(format!("grid.cells needs {} entries (got {})", g.dim, g.cells.len()));
        }
        if g.extent.len() != g.dim {
            out.push(format!("grid.extent needs {} entries (got {})", g.dim, g.extent.len()));
        }
        if g.cells.iter().any(|&c| c < 4) {
            out.push("grid.cells must be at least 4 per axis".into());
        }
        if g.extent.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            out.push("grid.extent must be positive and finite".into());
        }
        for v in self.solver_config().violations() {
            out.push(format!("solver: {v}"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            out.push("t_end must be finite and nonnegative".into());
        }
        let k = &self.kappas;
        if !(k.k1 > 0.0 && k.k2 > 0.0 && k.k3 > 0.0) {
            out.push("kappas must all be positive".into());
        }
        if !(self.c_monitor >= 0.0 && self.c_monitor.is_finite()) {
            out.push("c_monitor must be finite and nonnegative".into());
        }
        if !(self.c3 > 0.0 && self.c3.is_finite()) {
            out.push("c3 must be positive and finite".into());
        }
        if self.criterion_pairs.is_empty() {
            out.push("criterion_pairs must not be empty".into());
        }
        for (i, [s, r]) in self.criterion_pairs.iter().enumerate() {
            match s.parse() {
                Ok(s) if !s.exceeds_three_halves() => {
                    out.push(format!("criterion_pairs[{i}]: s = {s} must exceed 3/2"))
                }
                Err(e) => out.push(format!("criterion_pairs[{i}]: {e}")),
                _ => {}
            }
            match r.parse() {
                Ok(r) if !r.at_least_one() => out.push(format!("criterion_pairs[{i}]: r = {r} must be at least 1")),
                Err(e) => out.push(format!("criterion_pairs[{i}]: {e}")),
                _ => {}
            }
        }
        let b = &self.blowup;
        if !(b.window_fraction > 0.0 && b.window_fraction <= 1.0) {
            out.push("blowup.window_fraction must lie in (0, 1]".into());
        }
        if !(b.max_residual > 0.0) || !(b.classify_tol >= 0.0) || b.epsilon.is_nan() || b.epsilon < 0.0 {
            out.push("blowup: max_residual > 0, classify_tol ≥ 0 and epsilon ≥ 0 are required".into());
        }
        let init = &self.initial;
        if !(init.width > 0.0) {
            out.push("initial.width must be positive".into());
        }
        if init.n_mean - init.n_amplitude.abs() * profile_reach(init.n_profile) < 0.0 {
            out.push("initial n profile can go negative (n_mean < |n_amplitude|)".into());
        }
        let signed_c_allowed = self.scenario == ScenarioKind::HeatMode;
        if !signed_c_allowed && init.c_mean - init.c_amplitude.abs() * profile_reach(init.c_profile) < 0.0 {
            out.push("initial c profile can go negative (c_mean < |c_amplitude|)".into());
        }
        let torus = g.topology == TopologyName::PeriodicTorus;
        match self.scenario {
            ScenarioKind::HeatMode if torus => out.push("heat_mode requires grid.topology = neumann_box".into()),
            ScenarioKind::Mms if !(torus && g.dim == 2) => out.push("mms requires a 2D periodic_torus".into()),
            ScenarioKind::Mms if self.mms.levels < 2 || self.mms.time_levels < 3 || !(self.mms.dt > 0.0) => {
                out.push("mms needs levels ≥ 2, time_levels ≥ 3 and dt > 0".into())
            }
            ScenarioKind::Equilibrium2d if !(torus && g.dim == 2) => {
                out.push("equilibrium_2d requires a 2D periodic_torus".into())
            }
            ScenarioKind::Stress3d if g.dim != 3 => out.push("stress_3d requires grid.dim = 3".into()),
            ScenarioKind::ScalingTest if !torus => {
                out.push("scaling_test requires grid.topology = periodic_torus".into())
            }
            ScenarioKind::ScalingTest if self.scaling.lambda == 0 || self.scaling.levels < 2 => {
                out.push("scaling_test needs scaling.lambda ≥ 1 and scaling.levels ≥ 2".into())
            }
            _ => {}
        }
        out
    }

    /// Parsed criterion pairs (valid after [`violations`](Self::violations) is empty).
    pub fn exponent_pairs(&self) -> Vec<(Exponent, Exponent)> {
        self.criterion_pairs
            .iter()
            .filter_map(|[s, r]| Some((s.parse().ok()?, r.parse().ok()?)))
            .collect()
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::new(&self.grid.cells, &self.grid.extent, self.grid.topology.into())
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            chi: s.chi,
            scheme: match s.scheme {
                SchemeName::ExplicitEuler => Scheme::ExplicitEuler,
                SchemeName::Imex => Scheme::Imex,
            },
            cfl_safety: s.cfl_safety,
            dt_min: s.dt_min,
            dt_max: s.dt_max,
            positivity_floor: s.positivity_floor,
            upwind: s.upwind,
            blowup_sup_threshold: s.blowup_sup_threshold,
            dt_blowup_factor: s.dt_blowup_factor,
            cg_tolerance: s.cg_tolerance,
            cg_max_iterations: s.cg_max_iterations,
        }
    }

    /// Diagnostics settings; `s` is the first criterion pair's exponent.
    pub fn diagnostics_config(&self) -> DiagnosticsConfig {
        DiagnosticsConfig {
            kappas: Kappas {
                k1: self.kappas.k1,
                k2: self.kappas.k2,
                k3: self.kappas.k3,
            },
            chi: self.solver.chi,
            s: self
                .exponent_pairs()
                .first()
                .map(|p| p.0)
                .unwrap_or(Exponent::Finite { num: 2, den: 1 }),
            positivity_floor: self.solver.positivity_floor,
        }
    }

    /// Fully resolved TOML, the reproducible echo of a run.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }
}

/// Largest `|profile − mean| / |amplitude|` over the domain.
fn profile_reach(p: Profile) -> f64 {
    match p {
        Profile::Constant => 0.0,
        Profile::Gaussian => 0.0,
        Profile::Cosine | Profile::RandomSmooth => 1.0,
    }
}
