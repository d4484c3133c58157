//! Time integration of the coupled system.
//!
//! One step is a first-order splitting:
//!
//! 1. `n ← n + dt · div(∇n − χ n ∇c)` in flux form, so mass telescopes exactly;
//! 2. `c* ← c + dt · Δc` (explicit) or `(I − dt Δ) c* = c` (IMEX, conjugate gradient);
//! 3. `c ← c* · exp(−dt · n)`, the exact solution of the consumption ODE.
//!
//! Step 3 never increases `c` and never makes it negative, and step 2 is a
//! convex combination under the diffusion bound, so `0 ≤ c ≤ max c₀` holds
//! discretely. With upwinding and the time-step bound from [`choose_dt`], `n`
//! stays nonnegative.

use alloc::vec::Vec;

use crate::grid::{Field, Grid, Side};
use crate::operators::{flux_values, gradient_values, laplacian_values};
use crate::sum::pairwise_sum_by;
use crate::{Error, Result};

/// Unknowns `(n, c)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub n: Field,
    pub c: Field,
    pub t: f64,
}

impl State {
    pub fn new(n: Field, c: Field, t: f64) -> Result<Self> {
        n.grid().ensure_same(c.grid())?;
        n.check_finite()?;
        c.check_finite()?;
        if !t.is_finite() {
            return Err(Error::InvalidArgument("time must be finite"));
        }
        Ok(State { n, c, t })
    }

    pub fn grid(&self) -> &Grid {
        self.n.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    ExplicitEuler,
    /// Implicit diffusion for `c`, explicit everything else.
    Imex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Chemotactic sensitivity χ.
    pub chi: f64,
    pub scheme: Scheme,
    /// Fraction of the stability bound actually used, in `(0, 1]`.
    pub cfl_safety: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Lower clip for `n` inside log/division diagnostics; never used by the dynamics.
    pub positivity_floor: f64,
    /// Upwind the face density of the chemotactic flux.
    pub upwind: bool,
    /// `‖n‖∞` above which a run stops as approaching blow-up.
    pub blowup_sup_threshold: f64,
    /// Enforces `dt ≤ dt_blowup_factor / ‖n‖∞`.
    pub dt_blowup_factor: f64,
    /// Relative residual target for the IMEX conjugate-gradient solve.
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            chi: 1.0,
            scheme: Scheme::ExplicitEuler,
            cfl_safety: 0.9,
            dt_min: 1e-14,
            dt_max: 1e-2,
            positivity_floor: 0.0,
            upwind: true,
            blowup_sup_threshold: 1e8,
            dt_blowup_factor: 0.1,
            cg_tolerance: 1e-10,
            cg_max_iterations: 10_000,
        }
    }
}

impl SolverConfig {
    /// Every violated constraint, empty when the config is usable.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !(self.chi.is_finite() && self.chi >= 0.0) {
            v.push("chi must be finite and nonnegative");
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            v.push("cfl_safety must lie in (0, 1]");
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max && self.dt_max.is_finite()) {
            v.push("need 0 < dt_min <= dt_max < inf");
        }
        if !(self.positivity_floor >= 0.0 && self.positivity_floor.is_finite()) {
            v.push("positivity_floor must be finite and nonnegative");
        }
        if !(self.blowup_sup_threshold > 0.0) {
            v.push("blowup_sup_threshold must be positive");
        }
        if !(self.dt_blowup_factor > 0.0 && self.dt_blowup_factor.is_finite()) {
            v.push("dt_blowup_factor must be positive and finite");
        }
        if !(self.cg_tolerance > 0.0 && self.cg_tolerance < 1.0) {
            v.push("cg_tolerance must lie in (0, 1)");
        }
        if self.cg_max_iterations == 0 {
            v.push("cg_max_iterations must be positive");
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().first() {
            Some(why) => Err(Error::InvalidArgument(why)),
            None => Ok(()),
        }
    }
}

/// Which constraint set the time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtLimit {
    Diffusion,
    Advection,
    Reaction,
    BlowupRefinement,
    MaxStep,
    /// The constraints asked for less than `dt_min`; `dt_min` was used anyway.
    MinStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtChoice {
    pub dt: f64,
    pub limit: DtLimit,
    /// Unclamped value `cfl_safety × min(constraints)`.
    pub raw: f64,
}

impl DtChoice {
    /// `true` when stability would have needed a step below `dt_min`.
    pub fn below_min(&self) -> bool {
        self.limit == DtLimit::MinStep
    }
}

/// Largest `|∂_a c|` over faces normal to each axis.
fn max_face_slopes(grid: &Grid, c: &[f64]) -> [f64; 3] {
    let g = gradient_values(grid, c);
    let mut out = [0.0; 3];
    for (a, comp) in g.iter().enumerate() {
        out[a] = comp.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    }
    out
}

/// Stable time step for the next [`step`].
///
/// The `n`-update is explicit, so the binding constraint is
/// `dt ≤ 1 / (Σ_a 2/h_a² + Σ_a 2 v_a/h_a)` with `v_a = χ max|∂_a c|`: under it
/// every new `n` is a nonnegative combination of old values when upwinding
/// is on. Without drift this is the diffusion bound `h²/(2·dim)`, and it is
/// never larger than the advective bound `h/v`. Reaction (`1/max n`) and
/// blow-up refinement (`dt_blowup_factor/‖n‖∞`) are applied on top; the
/// product with `cfl_safety` is clamped to `[dt_min, dt_max]`.
pub fn choose_dt(state: &State, config: &SolverConfig) -> DtChoice {
    let grid = state.grid();
    let slopes = max_face_slopes(grid, state.c.values());
    let mut diffusion_rate = 0.0;
    let mut advection_rate = 0.0;
    for a in 0..grid.dim() {
        let h = grid.spacing(a);
        diffusion_rate += 2.0 / (h * h);
        advection_rate += 2.0 * config.chi * slopes[a] / h;
    }
    let mut best = 1.0 / (diffusion_rate + advection_rate);
    let mut limit = if advection_rate > 0.0 {
        DtLimit::Advection
    } else {
        DtLimit::Diffusion
    };
    let n_sup = state.n.sup_norm();
    if n_sup > 0.0 {
        let reaction = 1.0 / n_sup;
        if reaction < best {
            best = reaction;
            limit = DtLimit::Reaction;
        }
        let refine = config.dt_blowup_factor / n_sup;
        if refine < best {
            best = refine;
            limit = DtLimit::BlowupRefinement;
        }
    }
    let raw = config.cfl_safety * best;
    let mut dt = raw;
    if dt > config.dt_max {
        dt = config.dt_max;
        limit = DtLimit::MaxStep;
    }
    if dt < config.dt_min {
        dt = config.dt_min;
        limit = DtLimit::MinStep;
    }
    DtChoice { dt, limit, raw }
}

/// Right-hand-side additions used by manufactured-solution runs.
///
/// Sources are sampled at cell centers at the start of each step.
pub trait SourceTerm {
    fn n_source(&self, _x: [f64; 3], _t: f64) -> f64 {
        0.0
    }
    fn c_source(&self, _x: [f64; 3], _t: f64) -> f64 {
        0.0
    }
}

/// Advances `state` by `dt` with no source terms.
pub fn step(state: &State, dt: f64, config: &SolverConfig) -> Result<State> {
    step_with_source(state, dt, config, None)
}

pub fn step_with_source(
    state: &State,
    dt: f64,
    config: &SolverConfig,
    source: Option<&dyn SourceTerm>,
) -> Result<State> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive and finite"));
    }
    let grid = *state.grid();
    let n = state.n.values();
    let c = state.c.values();

    // n: conservative update with face flux ∇n − χ n ∇c
    let diffusive = gradient_values(&grid, n);
    let drift = flux_values(&grid, n, c, config.chi, config.upwind);
    let face_flux: Vec<Vec<f64>> = diffusive
        .into_iter()
        .zip(drift)
        .map(|(d, a)| d.iter().zip(&a).map(|(d, a)| d - a).collect())
        .collect();
    let mut n_new = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let cc = grid.coords(i);
        let mut acc = 0.0;
        for (axis, comp) in face_flux.iter().enumerate() {
            let out_face = comp[grid.cell_face(cc, axis, Side::Upper)];
            let in_face = comp[grid.cell_face(cc, axis, Side::Lower)];
            acc += (out_face - in_face) / grid.spacing(axis);
        }
        let mut rhs = acc;
        if let Some(src) = source {
            rhs += src.n_source(grid.center(i), state.t);
        }
        n_new.push(n[i] + dt * rhs);
    }

    // c: diffusion (+ source), then exact exponential consumption
    let mut c_rhs: Vec<f64> = c.to_vec();
    if let Some(src) = source {
        for (i, v) in c_rhs.iter_mut().enumerate() {
            *v += dt * src.c_source(grid.center(i), state.t);
        }
    }
    let c_half = match config.scheme {
        Scheme::ExplicitEuler => {
            let lap = laplacian_values(&grid, c);
            c_rhs.iter().zip(&lap).map(|(b, l)| b + dt * l).collect()
        }
        Scheme::Imex => solve_implicit_diffusion(&grid, &c_rhs, dt, config.cg_tolerance, config.cg_max_iterations)?,
    };
    let c_new: Vec<f64> = c_half
        .iter()
        .zip(n)
        .map(|(&ch, &nv)| ch * libm::exp(-dt * nv.max(0.0)))
        .collect();

    let n_field = Field::from_raw(grid, n_new);
    let c_field = Field::from_raw(grid, c_new);
    n_field.check_finite()?;
    c_field.check_finite()?;
    check_sign(&state.n, &n_field)?;
    check_sign(&state.c, &c_field)?;
    Ok(State {
        n: n_field,
        c: c_field,
        t: state.t + dt,
    })
}

fn sign_tolerance(f: &Field) -> f64 {
    -1e-12 * f.sup_norm()
}

/// Rejects values below `−1e-12 · ‖f‖∞` when the previous state was
/// nonnegative to the same tolerance. Sign-changing data (a pure heat
/// mode, say) is left alone.
fn check_sign(old: &Field, f: &Field) -> Result<()> {
    if old.min() < sign_tolerance(old) {
        return Ok(());
    }
    let tol = sign_tolerance(f);
    match f.values().iter().position(|&v| v < tol) {
        Some(index) => Err(Error::PositivityViolation {
            index,
            value: f.values()[index],
        }),
        None => Ok(()),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    pairwise_sum_by(a.len(), &|i| a[i] * b[i])
}

/// Solves `(I − dt Δ) x = b` by plain conjugate gradients.
///
/// The discrete Neumann/periodic Laplacian is symmetric negative
/// semidefinite on a uniform grid, so the operator is SPD.
pub(crate) fn solve_implicit_diffusion(
    grid: &Grid,
    b: &[f64],
    dt: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<Vec<f64>> {
    let apply = |x: &[f64]| -> Vec<f64> {
        let lap = laplacian_values(grid, x);
        x.iter().zip(&lap).map(|(x, l)| x - dt * l).collect()
    };
    let b_norm = libm::sqrt(dot(b, b));
    if b_norm == 0.0 {
        return Ok(alloc::vec![0.0; b.len()]);
    }
    let mut x = b.to_vec();
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for iteration in 0..=max_iterations {
        let rel = libm::sqrt(rr) / b_norm;
        if rel <= tolerance {
            return Ok(x);
        }
        if iteration == max_iterations {
            return Err(Error::LinearSolve {
                iterations: iteration,
                residual: rel,
            });
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    unreachable!()
}

/// Outcome of [`detect_divergence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// `‖n‖∞` exceeded the configured threshold.
    ApproachingBlowup,
    /// A value is NaN or infinite.
    Corrupted,
}

pub fn detect_divergence(state: &State, config: &SolverConfig) -> Status {
    let finite = state.n.values().iter().all(|v| v.is_finite()) && state.c.values().iter().all(|v| v.is_finite());
    if !finite {
        Status::Corrupted
    } else if state.n.sup_norm() > config.blowup_sup_threshold {
        Status::ApproachingBlowup
    } else {
        Status::Ok
    }
}

/// When a run ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub t_end: f64,
    pub max_steps: usize,
}

impl StopRule {
    pub fn until(t_end: f64) -> Self {
        StopRule {
            t_end,
            max_steps: usize::MAX,
        }
    }
}

/// Observer call frequency in steps; 0 disables a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cadence {
    pub sample_every: usize,
    pub snapshot_every: usize,
}

impl Default for Cadence {
    fn default() -> Self {
        Cadence {
            sample_every: 1,
            snapshot_every: 0,
        }
    }
}

/// Receives states during [`run`]. The initial state is always sampled and
/// snapshotted; the final state is sampled if the cadence skipped it.
pub trait Observer {
    fn sample(&mut self, _step: usize, _state: &State) {}
    fn snapshot(&mut self, _step: usize, _state: &State) {}
}

/// Observer that ignores everything.
pub struct NoObserver;

impl Observer for NoObserver {}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    EndTime,
    StepBudget,
    /// `‖n‖∞` crossed `blowup_sup_threshold`.
    ApproachingBlowup,
    /// A step failed: non-finite values, sign violation or solver stall.
    Diverged(Error),
}

impl StopReason {
    /// `true` for the outcomes reported as divergence.
    pub fn is_divergence(&self) -> bool {
        matches!(self, StopReason::ApproachingBlowup | StopReason::Diverged(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub state: State,
    pub reason: StopReason,
    pub steps: usize,
    pub dt_smallest: f64,
    pub dt_largest: f64,
    /// Steps where stability asked for less than `dt_min`.
    pub dt_floor_hits: usize,
}

pub fn run(
    state0: State,
    config: &SolverConfig,
    stop: StopRule,
    cadence: Cadence,
    observer: &mut dyn Observer,
) -> RunResult {
    run_with_source(state0, config, stop, cadence, observer, None)
}

/// Steps until `t_end`, the step budget, or divergence.
///
/// The last step is shortened to land on `t_end` exactly. Step failures end
/// the run with [`StopReason::Diverged`]; they never panic.
pub fn run_with_source(
    state0: State,
    config: &SolverConfig,
    stop: StopRule,
    cadence: Cadence,
    observer: &mut dyn Observer,
    source: Option<&dyn SourceTerm>,
) -> RunResult {
    let mut state = state0;
    let mut steps = 0usize;
    let mut dt_smallest = f64::INFINITY;
    let mut dt_largest: f64 = 0.0;
    let mut dt_floor_hits = 0usize;
    let mut last_sampled = 0usize;
    observer.sample(0, &state);
    observer.snapshot(0, &state);

    let reason = loop {
        match detect_divergence(&state, config) {
            Status::Corrupted => {
                break StopReason::Diverged(Error::Corrupted {
                    index: 0,
                    value: f64::NAN,
                })
            }
            Status::ApproachingBlowup => break StopReason::ApproachingBlowup,
            Status::Ok => {}
        }
        if state.t >= stop.t_end {
            break StopReason::EndTime;
        }
        if steps >= stop.max_steps {
            break StopReason::StepBudget;
        }
        let choice = choose_dt(&state, config);
        if choice.below_min() {
            dt_floor_hits += 1;
        }
        let remaining = stop.t_end - state.t;
        let last = remaining <= choice.dt * (1.0 + 1e-9);
        let dt = if last { remaining } else { choice.dt };
        match step_with_source(&state, dt, config, source) {
            Ok(mut next) => {
                if last {
                    next.t = stop.t_end;
                }
                state = next;
            }
            Err(e) => break StopReason::Diverged(e),
        }
        steps += 1;
        dt_smallest = dt_smallest.min(dt);
        dt_largest = dt_largest.max(dt);
        if cadence.sample_every > 0 && steps.is_multiple_of(cadence.sample_every) {
            observer.sample(steps, &state);
            last_sampled = steps;
        }
        if cadence.snapshot_every > 0 && steps.is_multiple_of(cadence.snapshot_every) {
            observer.snapshot(steps, &state);
        }
    };
    if last_sampled != steps {
        observer.sample(steps, &state);
    }
    RunResult {
        state,
        reason,
        steps,
        dt_smallest,
        dt_largest,
        dt_floor_hits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate, GridSpec, Topology};
    use core::f64::consts::PI;

    fn unit(dim: usize, cells: usize, topo: Topology) -> Grid {
        Grid::new(GridSpec::unit(dim, cells, topo)).unwrap()
    }

    fn constant_state(g: Grid, n: f64, c: f64) -> State {
        State::new(Field::constant(g, n).unwrap(), Field::constant(g, c).unwrap(), 0.0).unwrap()
    }

    #[test]
    fn pure_diffusion_dt() {
        let g = Grid::new(GridSpec::new(&[10, 10], &[1.0, 1.0], Topology::NeumannBox)).unwrap();
        let s = constant_state(g, 0.0, 1.0);
        let cfg = SolverConfig {
            cfl_safety: 0.25,
            dt_max: 1.0,
            ..SolverConfig::default()
        };
        let choice = choose_dt(&s, &cfg);
        assert!((choice.dt - 6.25e-4).abs() < 1e-18);
        assert_eq!(choice.limit, DtLimit::Diffusion);
    }

    #[test]
    fn blowup_refinement_dt() {
        let g = unit(1, 8, Topology::PeriodicTorus);
        let s = constant_state(g, 1e4, 1.0);
        let cfg = SolverConfig {
            dt_blowup_factor: 0.1,
            ..SolverConfig::default()
        };
        let choice = choose_dt(&s, &cfg);
        assert!(choice.dt <= 1e-5);
        assert_eq!(choice.limit, DtLimit::BlowupRefinement);
    }

    #[test]
    fn dt_floor_is_reported() {
        let g = unit(1, 8, Topology::PeriodicTorus);
        let s = constant_state(g, 1e4, 1.0);
        let cfg = SolverConfig {
            dt_min: 1e-3,
            dt_max: 1e-2,
            ..SolverConfig::default()
        };
        let choice = choose_dt(&s, &cfg);
        assert!(choice.below_min());
        assert_eq!(choice.dt, 1e-3);
    }

    #[test]
    fn constant_state_decays_exponentially() {
        let g = unit(2, 8, Topology::PeriodicTorus);
        let s0 = constant_state(g, 1.3, 2.0);
        let cfg = SolverConfig::default();
        let dt = 1e-3;
        let mut s = s0.clone();
        for _ in 0..100 {
            s = step(&s, dt, &cfg).unwrap();
        }
        assert_eq!(s.n, s0.n);
        let expect = 2.0 * libm::exp(-1.3 * 0.1);
        for &v in s.c.values() {
            assert!((v - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn imex_matches_constant_decay_too() {
        let g = unit(1, 16, Topology::NeumannBox);
        let s0 = constant_state(g, 1.0, 1.0);
        let cfg = SolverConfig {
            scheme: Scheme::Imex,
            ..SolverConfig::default()
        };
        let s = step(&s0, 0.01, &cfg).unwrap();
        for &v in s.c.values() {
            assert!((v - libm::exp(-0.01)).abs() < 1e-14);
        }
    }

    #[test]
    fn mass_conserved_per_step() {
        let g = unit(2, 16, Topology::NeumannBox);
        let n = Field::from_fn(g, |x| 1.0 + 0.5 * libm::cos(PI * x[0]) * libm::cos(2.0 * PI * x[1])).unwrap();
        let c = Field::from_fn(g, |x| 2.0 + libm::sin(3.0 * x[0] + x[1])).unwrap();
        let mut s = State::new(n, c, 0.0).unwrap();
        let cfg = SolverConfig {
            chi: 5.0,
            ..SolverConfig::default()
        };
        let m0 = integrate(&s.n).unwrap();
        let c_max0 = s.c.max();
        for _ in 0..50 {
            let dt = choose_dt(&s, &cfg).dt;
            let next = step(&s, dt, &cfg).unwrap();
            assert!(next.c.max() <= s.c.max());
            s = next;
        }
        let m = integrate(&s.n).unwrap();
        assert!(((m - m0) / m0).abs() <= 1e-13);
        assert!(s.c.max() <= c_max0);
        assert!(s.n.min() >= 0.0);
    }

    #[test]
    fn implicit_solve_residual() {
        let g = unit(2, 12, Topology::PeriodicTorus);
        let b: Vec<f64> = (0..g.len()).map(|i| libm::sin(i as f64)).collect();
        let x = solve_implicit_diffusion(&g, &b, 0.05, 1e-10, 1000).unwrap();
        let lap = laplacian_values(&g, &x);
        let res: f64 = x
            .iter()
            .zip(&lap)
            .zip(&b)
            .map(|((x, l), b)| (x - 0.05 * l - b) * (x - 0.05 * l - b))
            .sum();
        let bn: f64 = b.iter().map(|v| v * v).sum();
        assert!(libm::sqrt(res / bn) <= 1e-10);
        assert!(matches!(
            solve_implicit_diffusion(&g, &b, 0.05, 1e-10, 1),
            Err(Error::LinearSolve { .. })
        ));
    }

    #[test]
    fn divergence_status() {
        let g = unit(1, 8, Topology::PeriodicTorus);
        let cfg = SolverConfig {
            blowup_sup_threshold: 10.0,
            ..SolverConfig::default()
        };
        assert_eq!(detect_divergence(&constant_state(g, 1.0, 1.0), &cfg), Status::Ok);
        assert_eq!(
            detect_divergence(&constant_state(g, 20.0, 1.0), &cfg),
            Status::ApproachingBlowup
        );
        let mut s = constant_state(g, 1.0, 1.0);
        let mut v = s.n.values().to_vec();
        v[3] = f64::NAN;
        s.n = Field::from_raw(g, v);
        assert_eq!(detect_divergence(&s, &cfg), Status::Corrupted);
    }

    #[test]
    fn run_edge_cases() {
        let g = unit(1, 8, Topology::PeriodicTorus);
        let s0 = constant_state(g, 1.0, 1.0);
        let cfg = SolverConfig::default();
        let r = run(
            s0.clone(),
            &cfg,
            StopRule::until(0.0),
            Cadence::default(),
            &mut NoObserver,
        );
        assert_eq!(r.steps, 0);
        assert_eq!(r.reason, StopReason::EndTime);
        assert_eq!(r.state, s0);

        let hot = constant_state(g, 1e4, 1.0);
        let cfg = SolverConfig {
            blowup_sup_threshold: 1e3,
            ..SolverConfig::default()
        };
        let r = run(hot, &cfg, StopRule::until(1.0), Cadence::default(), &mut NoObserver);
        assert_eq!(r.steps, 0);
        assert_eq!(r.reason, StopReason::ApproachingBlowup);
        assert!(r.reason.is_divergence());
    }

    #[test]
    fn run_lands_on_end_time_and_respects_budget() {
        let g = unit(1, 8, Topology::PeriodicTorus);
        let s0 = constant_state(g, 1.0, 1.0);
        let cfg = SolverConfig {
            dt_min: 1e-4,
            dt_max: 1e-4,
            ..SolverConfig::default()
        };
        let r = run(
            s0.clone(),
            &cfg,
            StopRule::until(1.0),
            Cadence::default(),
            &mut NoObserver,
        );
        assert_eq!(r.state.t, 1.0);
        assert_eq!(r.steps, 10_000);
        let e = libm::exp(-1.0);
        assert!(r.state.c.values().iter().all(|v| (v - e).abs() <= 1e-3));
        let r = run(
            s0,
            &cfg,
            StopRule {
                t_end: 1.0,
                max_steps: 7,
            },
            Cadence::default(),
            &mut NoObserver,
        );
        assert_eq!(r.reason, StopReason::StepBudget);
        assert_eq!(r.steps, 7);
    }

    #[test]
    fn config_validation_lists_everything() {
        let cfg = SolverConfig {
            chi: -1.0,
            cfl_safety: 2.0,
            dt_min: 1.0,
            dt_max: 0.5,
            ..SolverConfig::default()
        };
        assert_eq!(cfg.violations().len(), 3);
        assert!(cfg.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }
}
