//! Parabolic rescaling `n ↦ λ² n(λx, λ²t)`, `c ↦ c(λx, λ²t)` on the torus
//! and a refinement study of how well the discrete solver respects it.

use alloc::vec::Vec;

use crate::grid::{Field, Grid, GridSpec, Topology};
use crate::solver::{run, Cadence, NoObserver, SolverConfig, State, StopReason, StopRule};
use crate::sum::pairwise_sum_by;
use crate::{Error, Result};

/// Source taps along one axis: one exact cell or the mean of two.
fn taps(target: usize, cells: usize, lambda: usize) -> ([usize; 2], usize) {
    // Source position in cell-center index units is q/2.
    let q = lambda * (2 * target + 1) - 1;
    let wrap = 2 * cells;
    let q = q % wrap;
    if q.is_multiple_of(2) {
        ([q / 2, q / 2], 1)
    } else {
        ([(q - 1) / 2, q.div_ceil(2) % cells], 2)
    }
}

fn resample(field: &Field, lambda: usize, amplitude: f64) -> Field {
    let grid = *field.grid();
    let v = field.values();
    let axis_taps: Vec<Vec<([usize; 2], usize)>> = (0..3)
        .map(|a| {
            let cells = grid.cells(a);
            (0..cells)
                .map(|i| {
                    if a < grid.dim() {
                        taps(i, cells, lambda)
                    } else {
                        ([0, 0], 1)
                    }
                })
                .collect()
        })
        .collect();
    let values = (0..grid.len())
        .map(|index| {
            let at = grid.coords(index);
            let [tx, ty, tz] = [0, 1, 2].map(|a| axis_taps[a][at[a]]);
            let mut acc = 0.0;
            for &k in &tx.0[..tx.1] {
                for &j in &ty.0[..ty.1] {
                    for &l in &tz.0[..tz.1] {
                        acc += v[grid.index([k, j, l])];
                    }
                }
            }
            amplitude * acc / (tx.1 * ty.1 * tz.1) as f64
        })
        .collect();
    Field::from_raw(grid, values)
}

/// Applies the rescaling with integer factor `lambda` on the same grid.
///
/// Target cell centers map to source positions that are either a cell
/// center (sampled exactly) or a face midpoint (mean of the two adjacent
/// cells, i.e. linear interpolation).
pub fn rescale_state(state: &State, lambda: usize) -> Result<State> {
    let grid = state.grid();
    if grid.topology() != Topology::PeriodicTorus {
        return Err(Error::RequiresTorus);
    }
    if lambda == 0 {
        return Err(Error::InvalidArgument("scaling factor must be a positive integer"));
    }
    let l = lambda as f64;
    State::new(
        resample(&state.n, lambda, l * l),
        resample(&state.c, lambda, 1.0),
        state.t / (l * l),
    )
}

/// Errors at one resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub level: usize,
    pub cells: usize,
    pub l2_n: f64,
    pub linf_n: f64,
    pub l2_c: f64,
    pub linf_c: f64,
}

impl ScalingRow {
    pub fn errors(&self) -> [f64; 4] {
        [self.l2_n, self.linf_n, self.l2_c, self.linf_c]
    }
}

/// Error rows plus `log₂` ratios of consecutive rows (in `errors()` order).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    pub orders: Vec<[f64; 4]>,
}

/// Refinement study parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingStudy {
    /// Coarsest torus; each level doubles every active axis.
    pub base: GridSpec,
    pub lambda: usize,
    pub t_end: f64,
    pub levels: usize,
}

fn solve_to(state: State, t_end: f64, config: &SolverConfig) -> Result<State> {
    let result = run(
        state,
        config,
        StopRule::until(t_end),
        Cadence::default(),
        &mut NoObserver,
    );
    match result.reason {
        StopReason::EndTime => Ok(result.state),
        StopReason::Diverged(e) => Err(e),
        StopReason::ApproachingBlowup | StopReason::StepBudget => Err(Error::ApproachingBlowup { t: result.state.t }),
    }
}

fn norms(a: &Field, b: &Field) -> (f64, f64) {
    let (x, y) = (a.values(), b.values());
    let sq = pairwise_sum_by(x.len(), &|i| (x[i] - y[i]) * (x[i] - y[i]));
    let inf = x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    (libm::sqrt(sq * a.grid().cell_volume()), inf)
}

/// Compares `solve(T/λ², rescale(u₀))` against `rescale(solve(T, u₀))` on
/// successively refined tori, with the initial data sampled at cell centers.
pub fn scaling_invariance_test(
    n0: &dyn Fn([f64; 3]) -> f64,
    c0: &dyn Fn([f64; 3]) -> f64,
    study: ScalingStudy,
    config: &SolverConfig,
) -> Result<ScalingTable> {
    if study.base.topology != Topology::PeriodicTorus {
        return Err(Error::RequiresTorus);
    }
    if study.levels == 0 {
        return Err(Error::InvalidArgument("scaling study needs at least one level"));
    }
    if !(study.t_end >= 0.0 && study.t_end.is_finite()) {
        return Err(Error::InvalidArgument(
            "scaling study end time must be finite and nonnegative",
        ));
    }
    let l2 = (study.lambda * study.lambda) as f64;
    let mut rows = Vec::with_capacity(study.levels);
    for level in 0..study.levels {
        let mut spec = study.base;
        for a in 0..spec.dim {
            spec.cells[a] <<= level;
        }
        let grid = Grid::new(spec)?;
        let initial = State::new(Field::from_fn(grid, n0)?, Field::from_fn(grid, c0)?, 0.0)?;
        let scaled_first = solve_to(rescale_state(&initial, study.lambda)?, study.t_end / l2, config)?;
        let solved_first = rescale_state(&solve_to(initial, study.t_end, config)?, study.lambda)?;
        let (l2_n, linf_n) = norms(&scaled_first.n, &solved_first.n);
        let (l2_c, linf_c) = norms(&scaled_first.c, &solved_first.c);
        rows.push(ScalingRow {
            level,
            cells: spec.cells[0],
            l2_n,
            linf_n,
            l2_c,
            linf_c,
        });
    }
    let orders = rows
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].errors(), w[1].errors());
            [0, 1, 2, 3].map(|k| libm::log2(a[k] / b[k]))
        })
        .collect();
    Ok(ScalingTable { rows, orders })
}
