//! Scenario setup, the recording observer and the run directory layout.

use std::fs;
use std::path::{Path, PathBuf};

use kscons_core::blowup::nondegeneracy_map;
use kscons_core::diagnostics::{evaluate, DiagnosticsConfig, DiagnosticsRecord};
use kscons_core::grid::lp_norm;
use kscons_core::scaling::{scaling_invariance_test, ScalingStudy};
use kscons_core::solver::{run_with_source, Cadence, Observer, SourceTerm, StopReason, StopRule};
use kscons_core::{Exponent, Field, Grid, SolverConfig, State, Topology};
use serde::{Deserialize, Serialize};

use crate::config::{LoadedConfig, Profile, RunConfig, ScenarioKind};
use crate::error::HarnessError;
use crate::fields::{profile_fn, rng, Profile3};
use crate::io::{write_field, Table};
use crate::mms::{self, DefaultPair, Manufactured, Sources};
use crate::report::{self, Summary};

/// Closed-form solution a scenario is checked against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exact {
    /// Spatially constant data: `n = n̄`, `c = c̄ e^{−n̄ t}`.
    ConstantDecay {
        n: f64,
        c: f64,
    },
    /// `n ≡ 0`, `c = mean + amplitude e^{−k² t} cos(k x)`.
    HeatMode {
        mean: f64,
        amplitude: f64,
        k: f64,
    },
    Manufactured(DefaultPair),
}

impl Exact {
    pub fn at(&self, x: [f64; 3], t: f64) -> (f64, f64) {
        match *self {
            Exact::ConstantDecay { n, c } => (n, c * (-n * t).exp()),
            Exact::HeatMode { mean, amplitude, k } => (0.0, mean + amplitude * (-k * k * t).exp() * (k * x[0]).cos()),
            Exact::Manufactured(pair) => (pair.n(x, t), pair.c(x, t)),
        }
    }

    /// `(‖n − n_exact‖∞, ‖c − c_exact‖∞)` at `state.t`.
    pub fn errors(&self, state: &State) -> (f64, f64) {
        let grid = state.grid();
        let mut err = (0.0f64, 0.0f64);
        for i in 0..grid.len() {
            let (n, c) = self.at(grid.center(i), state.t);
            err.0 = err.0.max((state.n.values()[i] - n).abs());
            err.1 = err.1.max((state.c.values()[i] - c).abs());
        }
        err
    }
}

/// Everything needed to start a run.
pub struct Prepared {
    pub state: State,
    pub solver: SolverConfig,
    pub exact: Option<Exact>,
    pub n0: Profile3,
    pub c0: Profile3,
}

/// Builds the initial state. Random profiles draw from `config.seed`,
/// `n` first.
pub fn prepare(config: &RunConfig) -> Result<Prepared, HarnessError> {
    let violations = config.violations();
    if !violations.is_empty() {
        return Err(HarnessError::Validation(violations));
    }
    let spec = config.grid_spec();
    let grid = Grid::new(spec)?;
    let solver = config.solver_config();
    let init = &config.initial;
    let (n0, c0): (Profile3, Profile3) = if config.scenario == ScenarioKind::Mms {
        let pair = DefaultPair { chi: solver.chi };
        (Box::new(move |x| pair.n(x, 0.0)), Box::new(move |x| pair.c(x, 0.0)))
    } else {
        let mut r = rng(config.seed);
        let n0 = profile_fn(
            &spec,
            init.n_profile,
            init.n_mean,
            init.n_amplitude,
            init.width,
            init.modes,
            &mut r,
        );
        let c0 = profile_fn(
            &spec,
            init.c_profile,
            init.c_mean,
            init.c_amplitude,
            init.width,
            init.modes,
            &mut r,
        );
        (n0, c0)
    };
    let state = State::new(Field::from_fn(grid, &n0)?, Field::from_fn(grid, &c0)?, 0.0)?;
    let constant = |p: Profile, amp: f64| p == Profile::Constant || amp == 0.0;
    let exact = match config.scenario {
        ScenarioKind::Mms => Some(Exact::Manufactured(DefaultPair { chi: solver.chi })),
        _ if constant(init.n_profile, init.n_amplitude) && constant(init.c_profile, init.c_amplitude) => {
            Some(Exact::ConstantDecay {
                n: init.n_mean,
                c: init.c_mean,
            })
        }
        ScenarioKind::HeatMode
            if constant(init.n_profile, init.n_amplitude)
                && init.n_mean == 0.0
                && init.c_profile == Profile::Cosine
                && spec.topology == Topology::NeumannBox =>
        {
            Some(Exact::HeatMode {
                mean: init.c_mean,
                amplitude: init.c_amplitude,
                k: std::f64::consts::PI / spec.extent[0],
            })
        }
        _ => None,
    };
    Ok(Prepared {
        state,
        solver,
        exact,
        n0,
        c0,
    })
}

/// Distinct criterion `s` exponents, in first-appearance order.
pub fn criterion_exponents(config: &RunConfig) -> Vec<Exponent> {
    let mut out: Vec<Exponent> = Vec::new();
    for (s, _) in config.exponent_pairs() {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Column name holding `‖n‖_{L^s}`.
pub fn norm_column(s: Exponent) -> String {
    format!("n_norm_s={s}")
}

/// Header of `diagnostics.csv`: the record fields, the two exact-solution
/// errors (NaN without a closed form) and one `L^s` norm per exponent.
pub fn diagnostics_columns(config: &RunConfig) -> Vec<String> {
    let mut columns: Vec<String> = DiagnosticsRecord::FIELD_NAMES.iter().map(|s| s.to_string()).collect();
    columns.push("exact_err_n".into());
    columns.push("exact_err_c".into());
    columns.extend(criterion_exponents(config).into_iter().map(norm_column));
    columns
}

struct Recorder<'a> {
    diag: DiagnosticsConfig,
    exact: Option<Exact>,
    exponents: Vec<Exponent>,
    table: Table,
    error: Option<String>,
    snapshot_dir: Option<&'a Path>,
    keep_snapshots: bool,
    kept: Vec<(f64, Field)>,
}

impl Recorder<'_> {
    fn row(&self, state: &State) -> Result<Vec<f64>, HarnessError> {
        let record = evaluate(state, &self.diag)?;
        let mut row = record.to_row();
        let (en, ec) = self.exact.map_or((f64::NAN, f64::NAN), |e| e.errors(state));
        row.push(en);
        row.push(ec);
        for s in &self.exponents {
            row.push(lp_norm(&state.n, s.to_f64())?);
        }
        Ok(row)
    }
}

impl Observer for Recorder<'_> {
    fn sample(&mut self, _step: usize, state: &State) {
        if self.error.is_some() {
            return;
        }
        match self.row(state) {
            Ok(row) => self.table.push(row),
            Err(e) => self.error = Some(format!("diagnostics failed at t = {}: {e}", state.t)),
        }
    }

    fn snapshot(&mut self, step: usize, state: &State) {
        if self.keep_snapshots {
            self.kept.push((state.t, state.n.clone()));
        }
        let Some(dir) = self.snapshot_dir else { return };
        if self.error.is_some() {
            return;
        }
        for (name, field) in [("n", &state.n), ("c", &state.c)] {
            let path = dir.join(format!("{name}_{step:08}.ksf"));
            if let Err(e) = write_field(&path, field, state.t) {
                self.error = Some(e.to_string());
            }
        }
    }
}

/// How the main run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    /// `end_time`, `step_budget`, `approaching_blowup` or `diverged`.
    pub reason: String,
    pub detail: String,
    pub diverged: bool,
    pub steps: usize,
    pub t_final: f64,
    pub dt_smallest: f64,
    pub dt_largest: f64,
    pub dt_floor_hits: usize,
    /// Study and diagnostics failures that did not stop the main run.
    pub notes: Vec<String>,
}

/// In-memory result of a scenario.
pub struct Outcome {
    pub diagnostics: Table,
    pub status: RunStatus,
    pub final_state: State,
    pub mms_spatial: Option<Table>,
    pub mms_temporal: Option<Table>,
    pub scaling: Option<Table>,
    /// `(t, n)` at every snapshot step, kept when `blowup.fit` is set.
    pub snapshots: Vec<(f64, Field)>,
}

/// Runs the scenario and its studies without touching the file system,
/// except for snapshots when `snapshot_dir` is given.
pub fn execute(
    config: &RunConfig,
    max_steps: Option<usize>,
    snapshot_dir: Option<&Path>,
) -> Result<Outcome, HarnessError> {
    let prepared = prepare(config)?;
    let exponents = criterion_exponents(config);
    let mut recorder = Recorder {
        diag: config.diagnostics_config(),
        exact: prepared.exact,
        exponents,
        table: Table::new(diagnostics_columns(config)),
        error: None,
        snapshot_dir,
        keep_snapshots: config.blowup.fit,
        kept: Vec::new(),
    };
    let pair = DefaultPair {
        chi: prepared.solver.chi,
    };
    let sources = Sources(&pair);
    let source: Option<&dyn SourceTerm> = match config.scenario {
        ScenarioKind::Mms => Some(&sources),
        _ => None,
    };
    let stop = StopRule {
        t_end: config.t_end,
        max_steps: max_steps.unwrap_or(usize::MAX),
    };
    let cadence = Cadence {
        sample_every: config.sample_every,
        snapshot_every: config.snapshot_every,
    };
    let result = run_with_source(prepared.state, &prepared.solver, stop, cadence, &mut recorder, source);
    let (reason, detail) = match &result.reason {
        StopReason::EndTime => ("end_time", String::new()),
        StopReason::StepBudget => ("step_budget", String::new()),
        StopReason::ApproachingBlowup => (
            "approaching_blowup",
            format!("sup n exceeded {}", prepared.solver.blowup_sup_threshold),
        ),
        StopReason::Diverged(e) => ("diverged", e.to_string()),
    };
    let mut status = RunStatus {
        reason: reason.into(),
        detail,
        diverged: result.reason.is_divergence(),
        steps: result.steps,
        t_final: result.state.t,
        dt_smallest: result.dt_smallest,
        dt_largest: result.dt_largest,
        dt_floor_hits: result.dt_floor_hits,
        notes: Vec::new(),
    };
    if let Some(e) = recorder.error.take() {
        status.notes.push(e);
    }

    let mut outcome = Outcome {
        diagnostics: recorder.table,
        status,
        final_state: result.state,
        mms_spatial: None,
        mms_temporal: None,
        scaling: None,
        snapshots: recorder.kept,
    };
    if outcome.status.diverged {
        return Ok(outcome);
    }
    match config.scenario {
        ScenarioKind::Mms => {
            let base = config.grid_spec();
            match mms::spatial_study(&pair, base, config.mms.levels, config.t_end, &prepared.solver) {
                Ok(rows) => outcome.mms_spatial = Some(spatial_table(&rows)),
                Err(e) => outcome.status.notes.push(format!("spatial study: {e}")),
            }
            match mms::temporal_study(
                &pair,
                base,
                config.mms.time_levels,
                config.mms.dt,
                config.t_end,
                &prepared.solver,
            ) {
                Ok(rows) => outcome.mms_temporal = Some(temporal_table(&rows)),
                Err(e) => outcome.status.notes.push(format!("temporal study: {e}")),
            }
        }
        ScenarioKind::ScalingTest => {
            let study = ScalingStudy {
                base: config.grid_spec(),
                lambda: config.scaling.lambda,
                t_end: config.t_end,
                levels: config.scaling.levels,
            };
            match scaling_invariance_test(&prepared.n0, &prepared.c0, study, &prepared.solver) {
                Ok(table) => outcome.scaling = Some(scaling_table(&table)),
                Err(e) => outcome.status.notes.push(format!("scaling study: {e}")),
            }
        }
        _ => {}
    }
    Ok(outcome)
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn spatial_table(rows: &[mms::SpatialRow]) -> Table {
    let mut t = Table::new(columns(&[
        "level",
        "cells",
        "err_n_inf",
        "err_c_inf",
        "err_n_l2",
        "err_c_l2",
    ]));
    for r in rows {
        t.push(vec![
            r.level as f64,
            r.cells as f64,
            r.err_n_inf,
            r.err_c_inf,
            r.err_n_l2,
            r.err_c_l2,
        ]);
    }
    t
}

pub fn temporal_table(rows: &[mms::TemporalRow]) -> Table {
    let mut t = Table::new(columns(&["level", "dt", "diff_n_inf", "diff_c_inf"]));
    for r in rows {
        t.push(vec![r.level as f64, r.dt, r.diff_n_inf, r.diff_c_inf]);
    }
    t
}

/// Error rows with the order into each level (NaN on the first row).
pub fn scaling_table(table: &kscons_core::scaling::ScalingTable) -> Table {
    let mut t = Table::new(columns(&[
        "level",
        "cells",
        "l2_n",
        "linf_n",
        "l2_c",
        "linf_c",
        "order_l2_n",
        "order_linf_n",
        "order_l2_c",
        "order_linf_c",
    ]));
    for (k, r) in table.rows.iter().enumerate() {
        let orders = if k == 0 { [f64::NAN; 4] } else { table.orders[k - 1] };
        let mut row = vec![r.level as f64, r.cells as f64];
        row.extend(r.errors());
        row.extend(orders);
        t.push(row);
    }
    t
}

/// Files written into a run directory.
pub mod files {
    pub const CONFIG: &str = "config.toml";
    pub const DIAGNOSTICS: &str = "diagnostics.csv";
    pub const MMS_SPATIAL: &str = "mms_spatial.csv";
    pub const MMS_TEMPORAL: &str = "mms_temporal.csv";
    pub const SCALING: &str = "scaling_errors.csv";
    pub const STATUS: &str = "run_status.json";
    pub const SUMMARY: &str = "summary.json";
    pub const NONDEGENERACY: &str = "nondegeneracy.ksf";
    pub const SNAPSHOTS: &str = "snapshots";
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// Runs a scenario and writes its directory. Artifacts produced before a
/// divergence are kept; the divergence is reported through
/// `run_status.json`, `summary.json` and the returned summary.
pub fn run_to_dir(loaded: &LoadedConfig, out_dir: &Path, max_steps: Option<usize>) -> Result<Summary, HarnessError> {
    let config = &loaded.config;
    let snapshots: PathBuf = out_dir.join(files::SNAPSHOTS);
    fs::create_dir_all(&snapshots).map_err(|e| HarnessError::io(&snapshots, e))?;
    let config_path = out_dir.join(files::CONFIG);
    fs::write(&config_path, config.to_toml()).map_err(|e| HarnessError::io(&config_path, e))?;

    let outcome = execute(
        config,
        max_steps,
        (config.snapshot_every > 0).then_some(snapshots.as_path()),
    )?;
    outcome.diagnostics.write(&out_dir.join(files::DIAGNOSTICS))?;
    for (table, name) in [
        (&outcome.mms_spatial, files::MMS_SPATIAL),
        (&outcome.mms_temporal, files::MMS_TEMPORAL),
        (&outcome.scaling, files::SCALING),
    ] {
        if let Some(t) = table {
            t.write(&out_dir.join(name))?;
        }
    }
    write_json(&out_dir.join(files::STATUS), &outcome.status)?;

    let summary = report::summarize(
        config,
        &outcome.status,
        &outcome.diagnostics,
        outcome.mms_spatial.as_ref(),
        outcome.mms_temporal.as_ref(),
        outcome.scaling.as_ref(),
        &loaded.defaulted,
    );
    if let Some(blowup) = &summary.blowup {
        if blowup.t_star.is_finite() {
            let before: Vec<(f64, &Field)> = outcome
                .snapshots
                .iter()
                .filter(|(t, _)| *t < blowup.t_star)
                .map(|(t, f)| (*t, f))
                .collect();
            if let Ok(map) = nondegeneracy_map(&before, blowup.t_star, config.blowup.epsilon) {
                write_field(&out_dir.join(files::NONDEGENERACY), &map.values, blowup.t_star)?;
            }
        }
    }
    write_json(&out_dir.join(files::SUMMARY), &summary)?;
    Ok(summary)
}
