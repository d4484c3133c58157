//! Run summaries, computed only from the written tables and the config so
//! that `kscons report` reproduces them from a run directory.

use std::fs;
use std::path::Path;

use kscons_core::blowup::{report as blowup_report, FitOptions};
use kscons_core::diagnostics::{energy_residual_series, CriterionAccumulator, CriterionSample, DiagnosticsRecord};
use kscons_core::Exponent;
use serde::Serialize;

use crate::config::{load_str, DefaultedValue, RunConfig, ScenarioKind};
use crate::error::HarnessError;
use crate::io::Table;
use crate::scenarios::{files, norm_column, RunStatus};

/// One checked quantity. `pass` is `None` for informational values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monitor {
    pub name: String,
    pub value: f64,
    pub comparison: &'static str,
    pub threshold: f64,
    pub pass: Option<bool>,
}

impl Monitor {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Monitor {
            name: name.into(),
            value,
            comparison: "<=",
            threshold,
            pass: Some(value <= threshold),
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Monitor {
            name: name.into(),
            value,
            comparison: ">=",
            threshold,
            pass: Some(value >= threshold),
        }
    }

    fn info(name: &str, value: f64) -> Self {
        Monitor {
            name: name.into(),
            value,
            comparison: "info",
            threshold: f64::NAN,
            pass: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub s: String,
    pub r: String,
    pub admissible: bool,
    /// `∫‖n‖^r_{L^s}` (or `sup ‖n‖_{L^s}` for `r = ∞`).
    pub n_term: f64,
    /// `∫‖∇c‖²∞`
    pub gradc_term: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupSummary {
    pub t_star: f64,
    pub gamma: f64,
    pub amplitude: f64,
    pub fit_residual: f64,
    pub classification: String,
    pub alpha: f64,
    pub limsup_estimate: f64,
    pub lower_bound_satisfied: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub version: &'static str,
    pub scenario: &'static str,
    pub seed: u64,
    /// Set for scenarios without pass/fail expectations.
    pub exploratory: bool,
    pub status: RunStatus,
    pub monitors: Vec<Monitor>,
    pub criteria: Vec<CriterionReport>,
    pub blowup: Option<BlowupSummary>,
    pub defaulted: Vec<DefaultedValue>,
    /// No divergence and every monitor with a verdict passed.
    pub all_pass: bool,
}

fn col(table: &Table, name: &str) -> Vec<f64> {
    table.column(name).unwrap_or_default()
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, f64::min)
}

/// Slope of the least-squares line through `(x, y)`.
fn slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Exponential decay rate of `‖c‖∞`: minus the slope of `log ‖c‖∞` over
/// samples after the first tenth of the run.
pub fn c_decay_rate(t: &[f64], c_sup: &[f64]) -> f64 {
    let t_last = t.last().copied().unwrap_or(0.0);
    let points: Vec<(f64, f64)> = t
        .iter()
        .zip(c_sup)
        .filter(|(&t, &c)| t >= 0.1 * t_last && c > 0.0 && c.is_finite())
        .map(|(&t, &c)| (t, c.ln()))
        .collect();
    if points.len() < 2 {
        return f64::NAN;
    }
    -slope(&points)
}

fn records(diag: &Table) -> Vec<DiagnosticsRecord> {
    let width = DiagnosticsRecord::FIELD_NAMES.len();
    let aligned = diag.columns.len() >= width
        && diag.columns[..width]
            .iter()
            .zip(DiagnosticsRecord::FIELD_NAMES)
            .all(|(a, b)| a == b);
    if !aligned {
        return Vec::new();
    }
    diag.rows
        .iter()
        .filter_map(|r| DiagnosticsRecord::from_row(&r[..width]))
        .collect()
}

fn conservation_monitors(config: &RunConfig, diag: &Table, out: &mut Vec<Monitor>) {
    let mass = col(diag, "mass");
    if let Some(&m0) = mass.first() {
        let scale = if m0 != 0.0 { m0.abs() } else { 1.0 };
        out.push(Monitor::at_most(
            "mass_drift_relative",
            max_of(mass.iter().map(|m| (m - m0).abs() / scale)),
            1e-12,
        ));
    }
    let c_sup = col(diag, "c_sup");
    if let Some(&c0) = c_sup.first() {
        let rise = max_of(c_sup.windows(2).map(|w| w[1] - w[0])).max(0.0);
        let scale = if c0 > 0.0 { c0 } else { 1.0 };
        out.push(Monitor::at_most("c_sup_increase_relative", rise / scale, 1e-12));
    }
    let n_min = col(diag, "n_min");
    if !n_min.is_empty() {
        out.push(Monitor::at_least("n_min", min_of(n_min), 0.0));
    }
    if config.scenario != ScenarioKind::HeatMode {
        let recs = records(diag);
        if recs.len() >= 2 {
            let value = match energy_residual_series(&recs, config.solver.chi, config.c_monitor) {
                Ok(r) => max_of(r),
                Err(_) => f64::NAN,
            };
            let mut m = Monitor::at_most("energy_residual_max", value, 0.0);
            if config.scenario == ScenarioKind::Stress3d {
                m.pass = None;
            }
            out.push(m);
        }
    }
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn scenario_monitors(
    config: &RunConfig,
    diag: &Table,
    mms_spatial: Option<&Table>,
    mms_temporal: Option<&Table>,
    scaling: Option<&Table>,
    out: &mut Vec<Monitor>,
) {
    let last = |name: &str| col(diag, name).last().copied().unwrap_or(f64::NAN);
    match config.scenario {
        ScenarioKind::ConstantDecay => {
            out.push(Monitor::at_most(
                "exact_err_c_max",
                max_of(col(diag, "exact_err_c")),
                1e-3,
            ));
            out.push(Monitor::at_most(
                "exact_err_n_max",
                max_of(col(diag, "exact_err_n")),
                1e-12,
            ));
        }
        ScenarioKind::HeatMode => out.push(Monitor::info("exact_err_c_final", last("exact_err_c"))),
        ScenarioKind::Mms => {
            let spatial = mms_spatial.map_or(f64::NAN, |t| {
                min_of(
                    orders(&col(t, "err_n_inf"))
                        .into_iter()
                        .chain(orders(&col(t, "err_c_inf"))),
                )
            });
            out.push(Monitor::at_least("mms_spatial_order_min", spatial, 1.9));
            let temporal = mms_temporal.map_or(f64::NAN, |t| {
                min_of(
                    orders(&col(t, "diff_n_inf"))
                        .into_iter()
                        .chain(orders(&col(t, "diff_c_inf"))),
                )
            });
            out.push(Monitor::at_least("mms_temporal_order_min", temporal, 0.9));
        }
        ScenarioKind::Equilibrium2d => {
            let mass = col(diag, "mass");
            let volume: f64 = config.grid.extent.iter().product();
            let drift = match (mass.first(), mass.last()) {
                (Some(a), Some(b)) => (b - a).abs() / volume,
                _ => f64::NAN,
            };
            // ‖n − mean(n₀)‖∞ ≤ ‖n − mean(n)‖∞ + |mean(n) − mean(n₀)|
            out.push(Monitor::at_most("n_deviation_final", last("n_dev_inf") + drift, 1e-6));
            out.push(Monitor::at_most("c_sup_final", last("c_sup"), 1e-8));
            let rate = c_decay_rate(&col(diag, "t"), &col(diag, "c_sup"));
            let mut m = Monitor::at_least("c_decay_rate", rate, 0.0);
            m.pass = Some(rate > 0.0);
            m.comparison = ">";
            out.push(m);
        }
        ScenarioKind::ScalingTest => match scaling {
            Some(t) if config.scaling.lambda == 1 => {
                let worst = max_of(["l2_n", "linf_n", "l2_c", "linf_c"].iter().flat_map(|c| col(t, c)));
                out.push(Monitor::at_most("scaling_error_max", worst, 0.0));
            }
            Some(t) => {
                let order = min_of(
                    ["order_l2_n", "order_linf_n", "order_l2_c", "order_linf_c"]
                        .iter()
                        .flat_map(|c| col(t, c).into_iter().skip(1)),
                );
                out.push(Monitor::at_least("scaling_order_min", order, 1.5));
            }
            None => out.push(Monitor::at_least("scaling_order_min", f64::NAN, 1.5)),
        },
        ScenarioKind::Stress3d => {
            let v = col(diag, "v");
            let v0 = v.first().copied().unwrap_or(f64::NAN);
            out.push(Monitor::info("v_growth", max_of(v) / v0));
            out.push(Monitor::info("g_final", last("g")));
            out.push(Monitor::info("n_sup_max", max_of(col(diag, "n_sup"))));
        }
        ScenarioKind::Custom => {}
    }
}

fn criteria(config: &RunConfig, diag: &Table) -> Vec<CriterionReport> {
    let t = col(diag, "t");
    let g = col(diag, "gradc_inf");
    config
        .exponent_pairs()
        .into_iter()
        .filter_map(|(s, r)| {
            let mut acc = CriterionAccumulator::new(s, r).ok()?;
            let ns = col(diag, &norm_column(s));
            let samples: Vec<CriterionSample> = (0..ns.len())
                .map(|k| CriterionSample {
                    t: t[k],
                    n_ls: ns[k],
                    gradc_inf: g[k],
                })
                .collect();
            for w in samples.windows(2) {
                if w[1].t > w[0].t {
                    acc.update(w[0], w[1]).ok()?;
                }
            }
            if let (Exponent::Infinite, Some(first)) = (r, samples.first()) {
                acc.value_ns = acc.value_ns.max(first.n_ls);
            }
            Some(CriterionReport {
                s: s.to_string(),
                r: r.to_string(),
                admissible: acc.admissible(),
                n_term: acc.value_ns,
                gradc_term: acc.value_gc,
                t: t.last().copied().unwrap_or(0.0),
            })
        })
        .collect()
}

fn blowup(config: &RunConfig, diag: &Table) -> BlowupSummary {
    let t = col(diag, "t");
    let n_sup = col(diag, "n_sup");
    let series: Vec<(f64, f64)> = t.iter().copied().zip(n_sup.iter().copied()).collect();
    let c0 = col(diag, "c_sup").first().copied().unwrap_or(f64::NAN);
    let options = FitOptions {
        window_fraction: config.blowup.window_fraction,
        max_residual: config.blowup.max_residual,
    };
    match blowup_report(&series, options, config.blowup.classify_tol, c0, config.c3) {
        Ok(r) => BlowupSummary {
            t_star: r.t_star,
            gamma: r.gamma,
            amplitude: r.amplitude,
            fit_residual: r.fit_residual,
            classification: r.classification.as_str().into(),
            alpha: r.alpha,
            limsup_estimate: r.limsup_estimate,
            lower_bound_satisfied: r.lower_bound_satisfied,
            error: None,
        },
        Err(e) => BlowupSummary {
            t_star: f64::NAN,
            gamma: f64::NAN,
            amplitude: f64::NAN,
            fit_residual: f64::NAN,
            classification: "no_blowup".into(),
            alpha: f64::NAN,
            limsup_estimate: f64::NAN,
            lower_bound_satisfied: false,
            error: Some(e.to_string()),
        },
    }
}

/// Summary of a run from its tables.
pub fn summarize(
    config: &RunConfig,
    status: &RunStatus,
    diag: &Table,
    mms_spatial: Option<&Table>,
    mms_temporal: Option<&Table>,
    scaling: Option<&Table>,
    defaulted: &[DefaultedValue],
) -> Summary {
    let mut monitors = Vec::new();
    if config.scenario != ScenarioKind::Mms {
        conservation_monitors(config, diag, &mut monitors);
    }
    scenario_monitors(config, diag, mms_spatial, mms_temporal, scaling, &mut monitors);
    let all_pass = !status.diverged && monitors.iter().all(|m| m.pass != Some(false));
    Summary {
        version: env!("CARGO_PKG_VERSION"),
        scenario: config.scenario.name(),
        seed: config.seed,
        exploratory: config.scenario == ScenarioKind::Stress3d,
        status: status.clone(),
        monitors,
        criteria: criteria(config, diag),
        blowup: config.blowup.fit.then(|| blowup(config, diag)),
        defaulted: defaulted.to_vec(),
        all_pass,
    }
}

fn optional_table(path: &Path) -> Result<Option<Table>, HarnessError> {
    if path.exists() {
        Table::read(path).map(Some)
    } else {
        Ok(None)
    }
}

/// Recomputes the summary of an existing run directory.
pub fn summarize_dir(dir: &Path) -> Result<Summary, HarnessError> {
    let config_path = dir.join(files::CONFIG);
    let text = fs::read_to_string(&config_path).map_err(|e| HarnessError::io(&config_path, e))?;
    let loaded = load_str(&text, &[])?;
    let status_path = dir.join(files::STATUS);
    let status_text = fs::read_to_string(&status_path).map_err(|e| HarnessError::io(&status_path, e))?;
    let status: RunStatus =
        serde_json::from_str(&status_text).map_err(|e| HarnessError::format(&status_path, e.to_string()))?;
    let diag = Table::read(&dir.join(files::DIAGNOSTICS))?;
    Ok(summarize(
        &loaded.config,
        &status,
        &diag,
        optional_table(&dir.join(files::MMS_SPATIAL))?.as_ref(),
        optional_table(&dir.join(files::MMS_TEMPORAL))?.as_ref(),
        optional_table(&dir.join(files::SCALING))?.as_ref(),
        &loaded.defaulted,
    ))
}
