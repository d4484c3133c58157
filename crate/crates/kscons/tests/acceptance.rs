//! Acceptance suite. Runs every criterion in turn, prints one
//! `PASS`/`FAIL` line each and exits nonzero if any fails.

mod support;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use kscons::config::{load_str, Profile, RunConfig};
use kscons::fields::{random_smooth, rng, SmoothRandom};
use kscons::report::c_decay_rate;
use kscons::scenarios::execute;
use kscons_core::blowup::{alpha_lower_bound, classify, fit_rate, Classification, FitOptions, RateFit};
use kscons_core::diagnostics::{
    energy_residual_series, evaluate, pointwise_hessian_check, winkler_constant, winkler_ratio, DiagnosticsConfig,
    DiagnosticsRecord, Kappas,
};
use kscons_core::grid::integrate;
use kscons_core::operators::{hessian_frobenius_sq, laplacian};
use kscons_core::solver::{run, Cadence, Observer, Scheme, StopReason, StopRule};
use kscons_core::{Exponent, Field, Grid, GridSpec, State, Topology};
use rand::Rng;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn config(text: &str, overrides: &[&str]) -> Result<RunConfig, String> {
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    load_str(text, &overrides).map(|l| l.config).map_err(|e| e.to_string())
}

fn max_abs_diff(field: &Field, exact: impl Fn([f64; 3]) -> f64) -> f64 {
    let g = field.grid();
    (0..g.len())
        .map(|i| (field.values()[i] - exact(g.center(i))).abs())
        .fold(0.0, f64::max)
}

fn c1_constant_decay() -> Verdict {
    let start = Instant::now();
    let cfg = config("scenario = \"constant_decay\"\n", &[])?;
    if cfg.solver.dt_min != 1e-4 || cfg.solver.dt_max != 1e-4 || cfg.t_end != 1.0 {
        return Err("preset does not pin dt = 1e-4, t = 1".into());
    }
    let out = execute(&cfg, None, None).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let err_c = max_abs_diff(&out.final_state.c, |_| (-1.0f64).exp());
    let err_n = max_abs_diff(&out.final_state.n, |_| 1.0);
    check(
        out.status.reason == "end_time"
            && out.final_state.t == 1.0
            && err_c <= 1e-3
            && err_n <= 1e-12
            && elapsed < Duration::from_secs(10),
        format!(
            "max|c - e^-1| = {err_c:.3e}, max|n - 1| = {err_n:.3e}, {} steps, {elapsed:.2?}",
            out.status.steps
        ),
    )
}

fn heat_error(cells: usize) -> Result<f64, String> {
    let cfg = config("scenario = \"heat_mode\"\n", &[&format!("grid.cells=[{cells}]")])?;
    let out = execute(&cfg, None, None).map_err(|e| e.to_string())?;
    let t = out.final_state.t;
    if t != 0.1 {
        return Err(format!("stopped at t = {t}"));
    }
    if !(out.final_state.n.values().iter().all(|&v| v == 0.0)) {
        return Err("n left zero".into());
    }
    Ok(max_abs_diff(&out.final_state.c, |x| {
        (-PI * PI * t).exp() * (PI * x[0]).cos()
    }))
}

fn c2_heat() -> Verdict {
    let coarse = heat_error(64)?;
    let fine = heat_error(128)?;
    let ratio = coarse / fine;
    check(
        (3.6..=4.4).contains(&ratio),
        format!("L∞ errors {coarse:.3e} (64), {fine:.3e} (128), ratio {ratio:.4}"),
    )
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn c3_mms() -> Verdict {
    let start = Instant::now();
    let cfg = config("scenario = \"mms\"\n", &[])?;
    let out = execute(&cfg, None, None).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let spatial = out
        .mms_spatial
        .ok_or(format!("spatial study missing: {:?}", out.status.notes))?;
    let temporal = out
        .mms_temporal
        .ok_or(format!("temporal study missing: {:?}", out.status.notes))?;
    let cells = spatial.column("cells").unwrap_or_default();
    let mut s_orders = orders(&spatial.column("err_n_inf").unwrap_or_default());
    s_orders.extend(orders(&spatial.column("err_c_inf").unwrap_or_default()));
    let mut t_orders = orders(&temporal.column("diff_n_inf").unwrap_or_default());
    t_orders.extend(orders(&temporal.column("diff_c_inf").unwrap_or_default()));
    let s_min = s_orders.iter().copied().fold(f64::INFINITY, f64::min);
    let t_min = t_orders.iter().copied().fold(f64::INFINITY, f64::min);
    check(
        cells == [32.0, 64.0, 128.0]
            && !t_orders.is_empty()
            && s_min >= 1.9
            && t_min >= 0.9
            && elapsed < Duration::from_secs(120),
        format!("spatial orders {s_orders:.3?}, temporal orders {t_orders:.3?}, {elapsed:.2?}"),
    )
}

struct Invariants {
    mass: Vec<f64>,
    c_max: Vec<f64>,
    n_min: f64,
}

impl Observer for Invariants {
    fn sample(&mut self, _step: usize, s: &State) {
        self.mass.push(integrate(&s.n).unwrap_or(f64::NAN));
        self.c_max.push(s.c.max());
        self.n_min = self.n_min.min(s.n.min());
    }
}

fn c4_conservation() -> Verdict {
    let cfg = config(
        r#"
        scenario = "custom"
        t_end = 1000.0
        seed = 4
        [grid]
        dim = 2
        cells = [32, 32]
        extent = [1.0, 1.0]
        topology = "periodic_torus"
        [solver]
        scheme = "explicit_euler"
        upwind = true
        chi = 2.0
        [initial]
        n_profile = "random_smooth"
        n_mean = 1.0
        n_amplitude = 0.8
        c_profile = "random_smooth"
        c_mean = 1.0
        c_amplitude = 0.8
        modes = 4
        "#,
        &[],
    )?;
    let prepared = kscons::scenarios::prepare(&cfg).map_err(|e| e.to_string())?;
    let solver = prepared.solver;
    if solver.scheme != Scheme::ExplicitEuler || !solver.upwind {
        return Err("expected explicit upwind configuration".into());
    }
    let mut obs = Invariants {
        mass: Vec::new(),
        c_max: Vec::new(),
        n_min: f64::INFINITY,
    };
    let stop = StopRule {
        t_end: cfg.t_end,
        max_steps: 10_000,
    };
    let result = run(prepared.state, &solver, stop, Cadence::default(), &mut obs);
    let m0 = obs.mass[0];
    let drift = obs.mass.iter().map(|m| (m - m0).abs() / m0).fold(0.0, f64::max);
    let rise = obs
        .c_max
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    check(
        result.reason == StopReason::StepBudget
            && result.steps == 10_000
            && obs.mass.len() == 10_001
            && drift <= 1e-12
            && rise <= 1e-12
            && obs.n_min >= 0.0,
        format!(
            "{} steps, mass drift {drift:.2e}, largest max(c) step change {rise:.2e}, min n {:.4}",
            result.steps, obs.n_min
        ),
    )
}

fn rough_field(grid: Grid, r: &mut rand_chacha::ChaCha8Rng) -> Field {
    let smooth = random_smooth(grid, 4, r);
    let values = smooth
        .values()
        .iter()
        .map(|v| v + 0.3 * r.gen_range(-1.0..1.0))
        .collect();
    Field::from_values(grid, values).expect("finite")
}

fn c5_pointwise() -> Verdict {
    let mut r = rng(5);
    let mut violations = 0usize;
    let mut checked = 0usize;
    let mut worst: f64 = f64::NEG_INFINITY;
    for dim in 1..=3 {
        let cells = [64, 24, 10][dim - 1];
        for k in 0..100 {
            let topo = if k % 2 == 0 {
                Topology::PeriodicTorus
            } else {
                Topology::NeumannBox
            };
            let extent: Vec<f64> = (0..dim).map(|_| r.gen_range(0.5..2.0)).collect();
            let grid = Grid::new(GridSpec::new(&vec![cells; dim], &extent, topo)).map_err(|e| e.to_string())?;
            let f = rough_field(grid, &mut r);
            let lap = laplacian(&f).map_err(|e| e.to_string())?;
            let hess = hessian_frobenius_sq(&f).map_err(|e| e.to_string())?;
            for (l, h) in lap.values().iter().zip(hess.values()) {
                checked += 1;
                if l * l > dim as f64 * h {
                    violations += 1;
                }
            }
            worst = worst.max(pointwise_hessian_check(&f));
        }
    }
    check(
        violations == 0 && worst <= 0.0,
        format!("{checked} cells over 300 fields: {violations} violations of (Δf)² ≤ dim|∇²f|², max library check {worst:.3e}"),
    )
}

fn c6_winkler() -> Verdict {
    let bound = winkler_constant() * 1.05;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut r = rng(6);
    for k in 0..24 {
        let extent = [1.0 + 0.25 * (k % 3) as f64, 1.0];
        let spec = GridSpec::new(&[128, 128], &extent, Topology::PeriodicTorus);
        let grid = Grid::new(spec).map_err(|e| e.to_string())?;
        let shape = SmoothRandom::new(&spec, 1 + k % 4, &mut r);
        let amp = 0.2 + 0.7 * (k as f64 / 23.0);
        let n = if k % 2 == 0 {
            Field::from_fn(grid, |x| 1.0 + amp * shape.eval(x))
        } else {
            Field::from_fn(grid, |x| (2.0 * amp * shape.eval(x)).exp())
        }
        .map_err(|e| e.to_string())?;
        if let Some(ratio) = winkler_ratio(&n, 0.0).map_err(|e| e.to_string())? {
            worst = worst.max(ratio);
            count += 1;
        }
    }
    check(
        count >= 20 && worst <= bound,
        format!("{count} fields at 128², max ratio {worst:.4} vs bound {bound:.4}"),
    )
}

fn c7_energy() -> Verdict {
    let cfg = config(
        r#"
        scenario = "custom"
        t_end = 1.0
        sample_every = 10
        seed = 7
        c_monitor = 1000.0
        [grid]
        dim = 2
        cells = [32, 32]
        extent = [1.0, 1.0]
        topology = "periodic_torus"
        [initial]
        n_profile = "random_smooth"
        n_mean = 1.0
        n_amplitude = 0.6
        c_profile = "random_smooth"
        c_mean = 1.0
        c_amplitude = 0.6
        "#,
        &[],
    )?;
    let out = execute(&cfg, None, None).map_err(|e| e.to_string())?;
    let width = DiagnosticsRecord::FIELD_NAMES.len();
    let records: Vec<DiagnosticsRecord> = out
        .diagnostics
        .rows
        .iter()
        .filter_map(|r| DiagnosticsRecord::from_row(&r[..width]))
        .collect();
    let residuals = energy_residual_series(&records, cfg.solver.chi, 1e3).map_err(|e| e.to_string())?;
    let worst = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    check(
        out.status.reason == "end_time" && residuals.len() >= 10 && worst <= 0.0,
        format!("{} windows, max residual {worst:.4e}", residuals.len()),
    )
}

fn c8_scaling() -> Verdict {
    let cfg = config("scenario = \"scaling_test\"\n", &[])?;
    let out = execute(&cfg, None, None).map_err(|e| e.to_string())?;
    let table = out
        .scaling
        .ok_or(format!("scaling study failed: {:?}", out.status.notes))?;
    let mut min_order = f64::INFINITY;
    let mut decreasing = true;
    for name in ["l2_n", "linf_n", "l2_c", "linf_c"] {
        let e = table.column(name).unwrap_or_default();
        decreasing &= e.windows(2).all(|w| w[1] < w[0]);
        min_order = orders(&e).into_iter().fold(min_order, f64::min);
    }
    let refinements = table.rows.len().saturating_sub(1);

    let unit = config("scenario = \"scaling_test\"\n", &["scaling.lambda=1"])?;
    let out1 = execute(&unit, None, None).map_err(|e| e.to_string())?;
    let t1 = out1.scaling.ok_or("λ = 1 study failed")?;
    let unit_max = t1.rows.iter().flat_map(|r| r[2..6].to_vec()).fold(0.0, f64::max);
    check(
        cfg.scaling.lambda == 2 && refinements >= 3 && decreasing && min_order >= 1.5 && unit_max == 0.0,
        format!("λ=2: {refinements} refinements, min order {min_order:.3}; λ=1 max error {unit_max:e}"),
    )
}

fn c9_rate_fit() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for gamma in [0.8, 1.0, 1.5] {
        let t_star = 0.37;
        let series: Vec<(f64, f64)> = (0..400)
            .map(|k| {
                let t = t_star * (1.0 - 0.999f64.powi(k * 5)) * 0.999;
                (t, 2.5 * (t_star - t).powf(-gamma))
            })
            .collect();
        match fit_rate(&series, FitOptions::default()).map_err(|e| e.to_string())? {
            RateFit::Blowup(fit) => {
                let et = (fit.t_star - t_star).abs() / t_star;
                let eg = (fit.gamma - gamma).abs() / gamma;
                let class = classify(fit.gamma, 0.0);
                let want = if gamma <= 1.0 {
                    Classification::TypeI
                } else {
                    Classification::TypeII
                };
                let expect_class = if gamma == 1.0 {
                    classify(fit.gamma, 1e-6) == want
                } else {
                    class == want
                };
                ok &= et <= 1e-3 && eg <= 1e-2 && expect_class;
                lines.push(format!(
                    "γ={gamma}: T* err {et:.1e}, γ err {eg:.1e}, {}",
                    classify(fit.gamma, 1e-6).as_str()
                ));
            }
            RateFit::NoBlowup(reason) => {
                ok = false;
                lines.push(format!("γ={gamma}: no blow-up ({reason:?})"));
            }
        }
    }
    check(ok, lines.join("; "))
}

fn c10_alpha() -> Verdict {
    let eps = f64::EPSILON;
    let mut worst_c: f64 = 0.0;
    let mut worst_k: f64 = 0.0;
    for &(c0, c3) in &[(1.0, 1.0), (0.3, 2.0), (7.5, 0.01), (123.0, 40.0)] {
        let base = alpha_lower_bound(c0, c3).map_err(|e| e.to_string())?.alpha;
        for factor in [2.0, 8.0, 10.0] {
            let a = alpha_lower_bound(c0 * factor, c3).map_err(|e| e.to_string())?.alpha;
            let want = factor.powf(-4.0 / 3.0);
            worst_c = worst_c.max(((a / base) - want).abs() / want);
            let b = alpha_lower_bound(c0, c3 * factor).map_err(|e| e.to_string())?.alpha;
            let want = factor.powf(-1.0 / 3.0);
            worst_k = worst_k.max(((b / base) - want).abs() / want);
        }
    }
    check(
        worst_c <= 4.0 * eps && worst_k <= 4.0 * eps,
        format!("max relative deviation: ‖c₀‖ law {worst_c:.2e}, C₃ law {worst_k:.2e} (ε = {eps:.2e})"),
    )
}

fn c11_equilibrium() -> Verdict {
    let cfg = config("scenario = \"equilibrium_2d\"\n", &[])?;
    if cfg.t_end != 50.0 || cfg.initial.n_profile != Profile::RandomSmooth {
        return Err("preset changed".into());
    }
    let prepared = kscons::scenarios::prepare(&cfg).map_err(|e| e.to_string())?;
    let mean0 = prepared.state.n.mean();
    if prepared.state.n.min() <= 0.0 || prepared.state.c.min() <= 0.0 {
        return Err("initial data not positive".into());
    }
    let out = execute(&cfg, None, None).map_err(|e| e.to_string())?;
    let dev = max_abs_diff(&out.final_state.n, |_| mean0);
    let c_sup = out.final_state.c.sup_norm();
    let rate = c_decay_rate(
        &out.diagnostics.column("t").unwrap_or_default(),
        &out.diagnostics.column("c_sup").unwrap_or_default(),
    );
    check(
        out.final_state.t == 50.0 && dev <= 1e-6 && c_sup <= 1e-8 && rate > 0.0,
        format!("‖n − mean n₀‖∞ = {dev:.2e}, ‖c‖∞ = {c_sup:.2e}, fitted decay rate {rate:.4}"),
    )
}

fn c12_oracle() -> Verdict {
    let mut r = rng(12);
    let mut worst = 0.0f64;
    let mut worst_name = "";
    let mut compared = 0usize;
    let layouts = [
        (1, 48, Topology::NeumannBox),
        (1, 40, Topology::PeriodicTorus),
        (2, 16, Topology::PeriodicTorus),
        (2, 12, Topology::NeumannBox),
        (2, 20, Topology::NeumannBox),
        (3, 8, Topology::PeriodicTorus),
        (3, 6, Topology::NeumannBox),
        (2, 16, Topology::PeriodicTorus),
        (3, 7, Topology::PeriodicTorus),
        (1, 33, Topology::NeumannBox),
    ];
    let exponents = ["2", "3", "8/5", "inf", "7/2"];
    for (k, &(dim, cells, topo)) in layouts.iter().enumerate() {
        let extent: Vec<f64> = (0..dim).map(|_| r.gen_range(0.6..1.8)).collect();
        let grid = Grid::new(GridSpec::new(&vec![cells; dim], &extent, topo)).map_err(|e| e.to_string())?;
        let sn = random_smooth(grid, 3, &mut r);
        let sc = random_smooth(grid, 3, &mut r);
        let n: Vec<f64> = sn
            .values()
            .iter()
            .map(|v| 2.0 + v + 0.1 * r.gen_range(0.0..1.0))
            .collect();
        let mut c: Vec<f64> = sc
            .values()
            .iter()
            .map(|v| 1.2 + v + 0.1 * r.gen_range(0.0..1.0))
            .collect();
        if k == 4 {
            // exercise the c floor
            c[0] = 0.0;
            c[5] = -1e-3;
        }
        let n = Field::from_values(grid, n).map_err(|e| e.to_string())?;
        let c = Field::from_values(grid, c).map_err(|e| e.to_string())?;
        let t = r.gen_range(0.0..3.0);
        let chi = if k == 7 { 0.0 } else { r.gen_range(0.3..4.0) };
        let kappas = Kappas {
            k1: r.gen_range(1.0..20.0),
            k2: r.gen_range(0.001..0.1),
            k3: r.gen_range(0.5..2.0),
        };
        let s: Exponent = exponents[k % exponents.len()]
            .parse()
            .map_err(|e: kscons_core::Error| e.to_string())?;
        let floor = if k == 3 { 1e-6 } else { 0.0 };
        let cfg = DiagnosticsConfig {
            kappas,
            chi,
            s,
            positivity_floor: floor,
        };
        let state = State::new(n.clone(), c.clone(), t).map_err(|e| e.to_string())?;
        let record = evaluate(&state, &cfg).map_err(|e| e.to_string())?;
        let row = record.to_row();
        let reference = support::reference(&n, &c, t, chi, (kappas.k1, kappas.k2, kappas.k3), s.to_f64(), floor);
        if reference.len() != DiagnosticsRecord::FIELD_NAMES.len() {
            return Err("oracle does not cover every record field".into());
        }
        for ((name, want), (field, got)) in reference.iter().zip(DiagnosticsRecord::FIELD_NAMES.iter().zip(&row)) {
            if name != field {
                return Err(format!("column order: oracle {name}, record {field}"));
            }
            compared += 1;
            let err = if (want.is_nan() && got.is_nan()) || *want == *got {
                0.0
            } else {
                (got - want).abs() / want.abs()
            };
            let err = if err.is_nan() { f64::INFINITY } else { err };
            if err > worst {
                worst = err;
                worst_name = name;
            }
        }
    }
    check(
        worst <= 1e-12,
        format!("{compared} values on 10 states, worst relative difference {worst:.2e} ({worst_name})"),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("exact decay oracle", c1_constant_decay),
        ("heat oracle", c2_heat),
        ("manufactured-solution convergence", c3_mms),
        ("conservation and maximum principle", c4_conservation),
        ("discrete pointwise Hessian inequality", c5_pointwise),
        ("Winkler functional inequality", c6_winkler),
        ("energy-inequality monitor", c7_energy),
        ("scaling invariance", c8_scaling),
        ("blow-up rate fitting", c9_rate_fit),
        ("alpha constant scaling laws", c10_alpha),
        ("2D equilibrium", c11_equilibrium),
        ("diagnostics oracle equivalence", c12_oracle),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let (tag, detail) = match verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{:>2}] {name}: {detail} ({elapsed:.1?})", k + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
