//! Manufactured solutions and the convergence studies built on them.

use std::f64::consts::PI;

use kscons_core::grid::lp_norm;
use kscons_core::solver::{run_with_source, Cadence, NoObserver, SourceTerm, StopReason, StopRule};
use kscons_core::{Field, Grid, GridSpec, SolverConfig, State};

use crate::error::HarnessError;

/// Closed-form space-time pair with analytic derivatives.
pub trait Manufactured {
    fn n(&self, x: [f64; 3], t: f64) -> f64;
    fn c(&self, x: [f64; 3], t: f64) -> f64;
    /// `∂_t n − Δn + χ ∇·(n ∇c)`
    fn n_source(&self, x: [f64; 3], t: f64) -> f64;
    /// `∂_t c − Δc + n c`
    fn c_source(&self, x: [f64; 3], t: f64) -> f64;
}

/// `n = 2 + e^{−t} cos 2πx cos 2πy`, `c = 1 + ½ e^{−t} cos 2πx` on the unit torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefaultPair {
    pub chi: f64,
}

impl Manufactured for DefaultPair {
    fn n(&self, x: [f64; 3], t: f64) -> f64 {
        2.0 + (-t).exp() * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos()
    }

    fn c(&self, x: [f64; 3], t: f64) -> f64 {
        1.0 + 0.5 * (-t).exp() * (2.0 * PI * x[0]).cos()
    }

    fn n_source(&self, x: [f64; 3], t: f64) -> f64 {
        let k = 2.0 * PI;
        let e = (-t).exp();
        let (cx, sx, cy) = ((k * x[0]).cos(), (k * x[0]).sin(), (k * x[1]).cos());
        let n = 2.0 + e * cx * cy;
        // ∂_x(n ∂_x c) with ∂_x c = −½ e k sin, ∂_x n = −e k sin cos(ky)
        let drift = 0.5 * e * k * k * (e * sx * sx * cy - n * cx);
        e * cx * cy * (2.0 * k * k - 1.0) + self.chi * drift
    }

    fn c_source(&self, x: [f64; 3], t: f64) -> f64 {
        let k = 2.0 * PI;
        let e = (-t).exp();
        let cx = (k * x[0]).cos();
        0.5 * e * cx * (k * k - 1.0) + self.n(x, t) * self.c(x, t)
    }
}

/// Adapts a [`Manufactured`] pair to the solver's source hook.
pub struct Sources<'a, M: Manufactured>(pub &'a M);

impl<M: Manufactured> SourceTerm for Sources<'_, M> {
    fn n_source(&self, x: [f64; 3], t: f64) -> f64 {
        self.0.n_source(x, t)
    }
    fn c_source(&self, x: [f64; 3], t: f64) -> f64 {
        self.0.c_source(x, t)
    }
}

/// Exact state of a manufactured pair at time `t`.
pub fn exact_state<M: Manufactured>(pair: &M, grid: Grid, t: f64) -> Result<State, HarnessError> {
    let n = Field::from_fn(grid, |x| pair.n(x, t))?;
    if n.min() <= 0.0 {
        return Err(HarnessError::Config("manufactured density must be positive".into()));
    }
    let c = Field::from_fn(grid, |x| pair.c(x, t))?;
    Ok(State::new(n, c, t)?)
}

fn solve<M: Manufactured>(pair: &M, grid: Grid, t_end: f64, config: &SolverConfig) -> Result<State, HarnessError> {
    let sources = Sources(pair);
    let result = run_with_source(
        exact_state(pair, grid, 0.0)?,
        config,
        StopRule::until(t_end),
        Cadence {
            sample_every: 0,
            snapshot_every: 0,
        },
        &mut NoObserver,
        Some(&sources),
    );
    match result.reason {
        StopReason::EndTime => Ok(result.state),
        other => Err(HarnessError::Diverged(format!("{other:?} at t = {}", result.state.t))),
    }
}

fn diff(a: &Field, b: &Field, p: f64) -> Result<f64, HarnessError> {
    Ok(lp_norm(&a.zip_map(b, |x, y| x - y)?, p)?)
}

/// Error of one spatial level against the exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialRow {
    pub level: usize,
    pub cells: usize,
    pub err_n_inf: f64,
    pub err_c_inf: f64,
    pub err_n_l2: f64,
    pub err_c_l2: f64,
}

/// Difference between consecutive `dt` levels on a fixed grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalRow {
    pub level: usize,
    pub dt: f64,
    /// `‖u_dt − u_{dt/2}‖∞` for `n` and `c`.
    pub diff_n_inf: f64,
    pub diff_c_inf: f64,
}

/// Spatial study: the base grid doubled `levels − 1` times, adaptive
/// stable steps (so `dt ∝ h²` and time error shrinks at the same rate).
pub fn spatial_study<M: Manufactured>(
    pair: &M,
    base: GridSpec,
    levels: usize,
    t_end: f64,
    config: &SolverConfig,
) -> Result<Vec<SpatialRow>, HarnessError> {
    (0..levels)
        .map(|level| {
            let mut spec = base;
            for a in 0..spec.dim {
                spec.cells[a] <<= level;
            }
            let grid = Grid::new(spec)?;
            let numeric = solve(pair, grid, t_end, config)?;
            let exact = exact_state(pair, grid, t_end)?;
            Ok(SpatialRow {
                level,
                cells: spec.cells[0],
                err_n_inf: diff(&numeric.n, &exact.n, f64::INFINITY)?,
                err_c_inf: diff(&numeric.c, &exact.c, f64::INFINITY)?,
                err_n_l2: diff(&numeric.n, &exact.n, 2.0)?,
                err_c_l2: diff(&numeric.c, &exact.c, 2.0)?,
            })
        })
        .collect()
}

/// Temporal self-convergence: fixed steps `dt, dt/2, …` on one grid.
/// Row `k` holds the difference between levels `k` and `k + 1`.
pub fn temporal_study<M: Manufactured>(
    pair: &M,
    grid: GridSpec,
    time_levels: usize,
    dt: f64,
    t_end: f64,
    config: &SolverConfig,
) -> Result<Vec<TemporalRow>, HarnessError> {
    let grid = Grid::new(grid)?;
    let mut states = Vec::with_capacity(time_levels);
    for level in 0..time_levels {
        let step = dt / (1u64 << level) as f64;
        let fixed = SolverConfig {
            dt_min: step,
            dt_max: step,
            ..*config
        };
        let initial = exact_state(pair, grid, 0.0)?;
        let stable = kscons_core::solver::choose_dt(
            &initial,
            &SolverConfig {
                dt_min: 0.0,
                dt_max: f64::MAX,
                ..*config
            },
        );
        if step > stable.dt {
            return Err(HarnessError::Config(format!(
                "mms.dt = {dt} exceeds the stable step {} on this grid",
                stable.dt
            )));
        }
        states.push((step, solve(pair, grid, t_end, &fixed)?));
    }
    states
        .windows(2)
        .enumerate()
        .map(|(level, w)| {
            Ok(TemporalRow {
                level,
                dt: w[0].0,
                diff_n_inf: diff(&w[0].1.n, &w[1].1.n, f64::INFINITY)?,
                diff_c_inf: diff(&w[0].1.c, &w[1].1.c, f64::INFINITY)?,
            })
        })
        .collect()
}

/// `log₂` ratios of consecutive entries.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
