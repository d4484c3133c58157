//! Energy functionals, criterion accumulators and inequality monitors.
//!
//! Conventions shared by every functional:
//!
//! * integrals are midpoint sums (pairwise summation) times the cell volume;
//! * `|∇f|²` at a cell is the per-axis mean of the squared face derivatives;
//! * `log` and division use `n` and `c` clipped from below by a floor
//!   `max(positivity_floor, 1e-12 · sup, f64::MIN_POSITIVE)`; the dynamics
//!   never see the floor. `n` below `−floor` is an error, `c` is clipped
//!   and the clipped cells are counted;
//! * `∇ log n`, `∇√c` transform cell values first and then difference.

use alloc::vec::Vec;

use crate::exponent::{serrin_admissible, Exponent};
use crate::grid::{lp_norm, Centering, Field, Grid, VectorField};
use crate::operators::{cell_hessian, grad_sq_values, gradient_values, laplacian_values};
use crate::solver::State;
use crate::sum::pairwise_sum_by;
use crate::{Error, Result};

/// Weights `κ₁, κ₂, κ₃` of the Lyapunov functional `V` and dissipation `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kappas {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl Default for Kappas {
    fn default() -> Self {
        Kappas {
            k1: 10.0,
            k2: 0.01,
            k3: 1.0,
        }
    }
}

/// Inputs of [`evaluate`] besides the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsConfig {
    pub kappas: Kappas,
    pub chi: f64,
    /// Spatial exponent of the reported `‖n‖_{L^s}`.
    pub s: Exponent,
    pub positivity_floor: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            kappas: Kappas::default(),
            chi: 1.0,
            s: Exponent::Finite { num: 2, den: 1 },
            positivity_floor: 0.0,
        }
    }
}

macro_rules! record {
    ($( $(#[$doc:meta])* $name:ident ),* $(,)?) => {
        /// One time-stamped row of every monitored functional.
        #[derive(Debug, Clone, Copy, PartialEq, Default)]
        pub struct DiagnosticsRecord {
            $( $(#[$doc])* pub $name: f64, )*
        }

        impl DiagnosticsRecord {
            /// Column names in fixed order.
            pub const FIELD_NAMES: &'static [&'static str] = &[$(stringify!($name)),*];

            pub fn to_row(&self) -> Vec<f64> {
                alloc::vec![$(self.$name),*]
            }

            /// Inverse of [`to_row`](Self::to_row); `None` on a length mismatch.
            pub fn from_row(row: &[f64]) -> Option<Self> {
                if row.len() != Self::FIELD_NAMES.len() {
                    return None;
                }
                let mut it = row.iter().copied();
                Some(DiagnosticsRecord { $( $name: it.next()?, )* })
            }
        }
    };
}

record! {
    t,
    /// `∫n`
    mass,
    n_sup,
    n_min,
    /// `‖n − mean n‖∞`
    n_dev_inf,
    c_sup,
    c_min,
    /// `∫n log n`
    entropy,
    /// `2∫|∇√c|²`
    dirichlet_sqrt_c,
    /// `∫|∇n|²/n`
    fisher,
    /// `∫n|∇log n|²`
    n_gradlog_sq,
    /// `∫n|∇c|²`
    n_gradc_sq,
    /// `∫n²`
    n_l2_sq,
    /// `∫n²c`
    cross_n2c,
    /// `∫|Δc|²`
    lap_c_l2_sq,
    /// `∫|∇c|⁴`
    gradc_l4_4,
    /// `∫c n³`
    cn3,
    /// `∫c|∇n|²`
    c_gradn_sq,
    /// `½∫n|w|²`, `w = χ∇c − ∇log n`
    kinetic_e,
    /// Lyapunov functional; NaN when `χ = 0`.
    v,
    /// Dissipation; NaN when `χ = 0`.
    g,
    /// `‖∇c‖∞`
    gradc_inf,
    /// `‖n‖_{L^s}`
    n_ls_norm,
    /// `∫c = ‖√c‖²_{L²}`
    c_mass,
    /// `∫n|∇c|²/c` (floor-sensitive)
    n_gradc_sq_over_c,
    /// `∫c|∇²log c|²` (floor-sensitive)
    c_hess_logc_sq,
    /// `∫n|∇²log n|²`
    n_hess_logn_sq,
    /// `∫|∇n|²`
    gradn_l2_sq,
    /// `∫|∇c_t|²` with `c_t = Δc − nc`
    grad_ct_l2_sq,
    /// `∫|∇Δc|²`
    grad_lapc_l2_sq,
    /// `∫n|Δc|²`
    n_lapc_sq,
    /// `∫|∇|∇c|²|²`
    grad_gradc_sq_l2_sq,
    /// `∫|∇²c|²|∇c|²`
    hess_c_gradc_sq,
    n_floor,
    c_floor,
    /// Cells where `c` sat below its floor.
    c_floored_cells,
}

fn floor_for(f: &Field, configured: f64) -> f64 {
    configured.max(1e-12 * f.sup_norm()).max(f64::MIN_POSITIVE)
}

/// Checks `n ≥ −floor` and returns the clipped copy.
fn floored(f: &Field, floor: f64) -> Result<Vec<f64>> {
    if let Some(index) = f.values().iter().position(|&v| v < -floor) {
        return Err(Error::PositivityViolation {
            index,
            value: f.values()[index],
        });
    }
    Ok(f.values().iter().map(|&v| v.max(floor)).collect())
}

struct Quadrature {
    volume: f64,
}

impl Quadrature {
    fn of<F: Fn(usize) -> f64>(&self, len: usize, f: F) -> f64 {
        pairwise_sum_by(len, &f) * self.volume
    }
}

fn hess_sq(grid: &Grid, v: &[f64]) -> Vec<f64> {
    (0..grid.len())
        .map(|i| cell_hessian(grid, v, i).frobenius_sq())
        .collect()
}

/// Evaluates every functional on `state`.
pub fn evaluate(state: &State, config: &DiagnosticsConfig) -> Result<DiagnosticsRecord> {
    state.n.check_finite()?;
    state.c.check_finite()?;
    let grid = *state.grid();
    let len = grid.len();
    let q = Quadrature {
        volume: grid.cell_volume(),
    };
    let n = state.n.values();
    let c = state.c.values();
    let chi = config.chi;
    let Kappas { k1, k2, k3 } = config.kappas;

    let n_floor = floor_for(&state.n, config.positivity_floor);
    let c_floor = floor_for(&state.c, config.positivity_floor);
    let nf = floored(&state.n, n_floor)?;
    let cf: Vec<f64> = c.iter().map(|&v| v.max(c_floor)).collect();
    let c_floored_cells = c.iter().filter(|&&v| v < c_floor).count() as f64;

    let log_n: Vec<f64> = nf.iter().map(|&v| libm::log(v)).collect();
    let log_c: Vec<f64> = cf.iter().map(|&v| libm::log(v)).collect();
    let sqrt_c: Vec<f64> = c.iter().map(|&v| libm::sqrt(v.max(0.0))).collect();

    let gs_n = grad_sq_values(&grid, n);
    let gs_c = grad_sq_values(&grid, c);
    let gs_logn = grad_sq_values(&grid, &log_n);
    let gs_sqrtc = grad_sq_values(&grid, &sqrt_c);
    let lap_c = laplacian_values(&grid, c);
    let c_t: Vec<f64> = (0..len).map(|i| lap_c[i] - n[i] * c[i]).collect();
    let gs_ct = grad_sq_values(&grid, &c_t);
    let gs_lapc = grad_sq_values(&grid, &lap_c);
    let gs_gsc = grad_sq_values(&grid, &gs_c);
    let h_logn = hess_sq(&grid, &log_n);
    let h_logc = hess_sq(&grid, &log_c);
    let h_c = hess_sq(&grid, c);

    let w = effective_velocity_values(&grid, n, c, &log_n, chi);
    let kinetic_e = kinetic_energy_values(&grid, n, &w);

    let mass = q.of(len, |i| n[i]);
    let entropy = q.of(len, |i| nf[i] * log_n[i]);
    let dirichlet_sqrt_c = 2.0 * q.of(len, |i| gs_sqrtc[i]);
    let fisher = q.of(len, |i| gs_n[i] / nf[i]);
    let n_gradlog_sq = q.of(len, |i| nf[i] * gs_logn[i]);
    let n_gradc_sq = q.of(len, |i| n[i] * gs_c[i]);
    let n_l2_sq = q.of(len, |i| n[i] * n[i]);
    let cross_n2c = q.of(len, |i| n[i] * n[i] * c[i]);
    let lap_c_l2_sq = q.of(len, |i| lap_c[i] * lap_c[i]);
    let gradc_l4_4 = q.of(len, |i| gs_c[i] * gs_c[i]);
    let cn3 = q.of(len, |i| c[i] * n[i] * n[i] * n[i]);
    let c_gradn_sq = q.of(len, |i| c[i] * gs_n[i]);
    let c_mass = q.of(len, |i| c[i]);
    let n_gradc_sq_over_c = q.of(len, |i| n[i] * gs_c[i] / cf[i]);
    let c_hess_logc_sq = q.of(len, |i| cf[i] * h_logc[i]);
    let n_hess_logn_sq = q.of(len, |i| nf[i] * h_logn[i]);
    let gradn_l2_sq = q.of(len, |i| gs_n[i]);
    let grad_ct_l2_sq = q.of(len, |i| gs_ct[i]);
    let grad_lapc_l2_sq = q.of(len, |i| gs_lapc[i]);
    let n_lapc_sq = q.of(len, |i| n[i] * lap_c[i] * lap_c[i]);
    let grad_gradc_sq_l2_sq = q.of(len, |i| gs_gsc[i]);
    let hess_c_gradc_sq = q.of(len, |i| h_c[i] * gs_c[i]);
    let gradc_inf = libm::sqrt(gs_c.iter().copied().fold(0.0, f64::max));
    let n_ls_norm = lp_norm(&state.n, config.s.to_f64())?;

    let (v, g) = if chi > 0.0 {
        let v = 0.5 * n_gradlog_sq
            + k1 / (2.0 * chi) * cross_n2c
            + k1 / (chi * chi) * n_l2_sq
            + (0.5 * k1 + k2) * n_gradc_sq
            + k2 * lap_c_l2_sq
            + k3 * gradc_l4_4;
        let g = k1 / (chi * chi) * gradn_l2_sq
            + k1 / (2.0 * chi) * cn3
            + k1 / chi * c_gradn_sq
            + 0.5 * k2 * grad_ct_l2_sq
            + 0.5 * k2 * grad_lapc_l2_sq
            + 0.25 * (k1 + k2) * n_lapc_sq
            + k3 * grad_gradc_sq_l2_sq
            + 4.0 * k3 * hess_c_gradc_sq
            + n_hess_logn_sq / 16.0;
        (v, g)
    } else {
        (f64::NAN, f64::NAN)
    };

    Ok(DiagnosticsRecord {
        t: state.t,
        mass,
        n_sup: state.n.sup_norm(),
        n_min: state.n.min(),
        n_dev_inf: {
            let mean = state.n.mean();
            n.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
        },
        c_sup: state.c.max(),
        c_min: state.c.min(),
        entropy,
        dirichlet_sqrt_c,
        fisher,
        n_gradlog_sq,
        n_gradc_sq,
        n_l2_sq,
        cross_n2c,
        lap_c_l2_sq,
        gradc_l4_4,
        cn3,
        c_gradn_sq,
        kinetic_e,
        v,
        g,
        gradc_inf,
        n_ls_norm,
        c_mass,
        n_gradc_sq_over_c,
        c_hess_logc_sq,
        n_hess_logn_sq,
        gradn_l2_sq,
        grad_ct_l2_sq,
        grad_lapc_l2_sq,
        n_lapc_sq,
        grad_gradc_sq_l2_sq,
        hess_c_gradc_sq,
        n_floor,
        c_floor,
        c_floored_cells,
    })
}

fn effective_velocity_values(grid: &Grid, n: &[f64], c: &[f64], log_n: &[f64], chi: f64) -> Vec<Vec<f64>> {
    let _ = n;
    let gc = gradient_values(grid, c);
    let gl = gradient_values(grid, log_n);
    gc.iter()
        .zip(&gl)
        .map(|(gc, gl)| gc.iter().zip(gl).map(|(a, b)| chi * a - b).collect())
        .collect()
}

fn kinetic_energy_values(grid: &Grid, n: &[f64], w: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (axis, comp) in w.iter().enumerate() {
        total += pairwise_sum_by(comp.len(), &|face| {
            let n_face = match grid.face_cells(axis, face) {
                (Some(lo), Some(hi)) => 0.5 * (n[lo] + n[hi]),
                (Some(only), None) | (None, Some(only)) => n[only],
                (None, None) => 0.0,
            };
            n_face * comp[face] * comp[face]
        });
    }
    0.5 * total * grid.cell_volume()
}

/// Face-centered effective velocity `w = χ∇c − ∇log n`.
pub fn effective_velocity(n: &Field, c: &Field, chi: f64, positivity_floor: f64) -> Result<VectorField> {
    n.grid().ensure_same(c.grid())?;
    n.check_finite()?;
    c.check_finite()?;
    let grid = *n.grid();
    let nf = floored(n, floor_for(n, positivity_floor))?;
    let log_n: Vec<f64> = nf.iter().map(|&v| libm::log(v)).collect();
    let w = effective_velocity_values(&grid, n.values(), c.values(), &log_n, chi);
    VectorField::new(grid, Centering::Face, w)
}

/// `½ Σ_faces n_face |w|² · cell volume`, with `n_face` the mean of the two
/// adjacent cells.
pub fn kinetic_energy(n: &Field, w: &VectorField) -> Result<f64> {
    n.grid().ensure_same(w.grid())?;
    if w.centering() != Centering::Face {
        return Err(Error::CenteringMismatch);
    }
    Ok(kinetic_energy_values(n.grid(), n.values(), w.components()))
}

/// `∫|∇n|⁴/n³ ÷ ∫n|∇²log n|²`, `None` for (discretely) constant fields.
///
/// The functional inequality bounds this by `(2+√d)²`.
pub fn winkler_ratio(n: &Field, positivity_floor: f64) -> Result<Option<f64>> {
    n.check_finite()?;
    let grid = *n.grid();
    let len = grid.len();
    let nf = floored(n, floor_for(n, positivity_floor))?;
    let log_n: Vec<f64> = nf.iter().map(|&v| libm::log(v)).collect();
    let gs = grad_sq_values(&grid, n.values());
    let h = hess_sq(&grid, &log_n);
    let q = Quadrature {
        volume: grid.cell_volume(),
    };
    let num = q.of(len, |i| gs[i] * gs[i] / (nf[i] * nf[i] * nf[i]));
    let den = q.of(len, |i| nf[i] * h[i]);
    if den == 0.0 || num == 0.0 {
        Ok(None)
    } else {
        Ok(Some(num / den))
    }
}

/// The constant `(2+√3)²` of the three-dimensional inequality.
pub fn winkler_constant() -> f64 {
    let k = 2.0 + libm::sqrt(3.0);
    k * k
}

/// `max_cells [(Δf)² − dim·|∇²f|²]`, computed through the identity
/// `dim·Σ_a d_a² − (Σ_a d_a)² = Σ_{a<b} (d_a − d_b)²` so the sign is exact:
/// the result is `≤ 0` for every input.
pub fn pointwise_hessian_check(field: &Field) -> f64 {
    let grid = *field.grid();
    let dim = grid.dim();
    let v = field.values();
    (0..grid.len())
        .map(|i| {
            let h = cell_hessian(&grid, v, i);
            let mut spread = 0.0;
            for a in 0..dim {
                for b in a + 1..dim {
                    let d = h.diag[a] - h.diag[b];
                    spread += d * d;
                }
            }
            let m = &h.mixed;
            let mixed = 2.0 * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]);
            -(spread + dim as f64 * mixed)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Time-averaged residual of the lower-order entropy inequality over a window:
///
/// `ΔE/Δt + ⟨fisher + (χ/2)∫n|∇c|²/c + (χ/2)∫c|∇²log c|²⟩ − C⟨∫c⟩`
///
/// with `E = ∫n log n + 2∫|∇√c|²` and `⟨·⟩` the trapezoid mean over the
/// window. Nonpositive values mean the inequality held on the window.
pub fn energy_inequality_residual(window: &[DiagnosticsRecord], chi: f64, c_monitor: f64) -> Result<f64> {
    if window.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: window.len(),
        });
    }
    for pair in window.windows(2) {
        if !(pair[1].t > pair[0].t) {
            return Err(Error::TimeOrdering {
                previous: pair[0].t,
                next: pair[1].t,
            });
        }
    }
    let first = &window[0];
    let last = &window[window.len() - 1];
    let span = last.t - first.t;
    let energy = |r: &DiagnosticsRecord| r.entropy + r.dirichlet_sqrt_c;
    let dissipation = |r: &DiagnosticsRecord| r.fisher + 0.5 * chi * r.n_gradc_sq_over_c + 0.5 * chi * r.c_hess_logc_sq;
    let mut d_int = 0.0;
    let mut c_int = 0.0;
    for pair in window.windows(2) {
        let dt = pair[1].t - pair[0].t;
        d_int += 0.5 * dt * (dissipation(&pair[0]) + dissipation(&pair[1]));
        c_int += 0.5 * dt * (pair[0].c_mass + pair[1].c_mass);
    }
    Ok((energy(last) - energy(first)) / span + d_int / span - c_monitor * c_int / span)
}

/// Residual over every consecutive pair of records.
pub fn energy_residual_series(records: &[DiagnosticsRecord], chi: f64, c_monitor: f64) -> Result<Vec<f64>> {
    records
        .windows(2)
        .map(|w| energy_inequality_residual(w, chi, c_monitor))
        .collect()
}

/// One sample of the two criterion integrands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionSample {
    pub t: f64,
    /// `‖n‖_{L^s}`
    pub n_ls: f64,
    /// `‖∇c‖∞`
    pub gradc_inf: f64,
}

impl From<&DiagnosticsRecord> for CriterionSample {
    fn from(r: &DiagnosticsRecord) -> Self {
        CriterionSample {
            t: r.t,
            n_ls: r.n_ls_norm,
            gradc_inf: r.gradc_inf,
        }
    }
}

/// Running `∫₀ᵗ ‖n‖^r_{L^s} dτ` (or `sup ‖n‖_{L^s}` when `r = ∞`) and
/// `∫₀ᵗ ‖∇c‖²_∞ dτ`, both by the trapezoid rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionAccumulator {
    s: Exponent,
    r: Exponent,
    admissible: bool,
    pub value_ns: f64,
    pub value_gc: f64,
    pub t: f64,
}

impl CriterionAccumulator {
    /// Requires `s > 3/2` and `r ≥ 1`.
    pub fn new(s: Exponent, r: Exponent) -> Result<Self> {
        if !s.exceeds_three_halves() {
            return Err(Error::InvalidArgument("criterion exponent s must exceed 3/2"));
        }
        if !r.at_least_one() {
            return Err(Error::InvalidArgument("criterion exponent r must be at least 1"));
        }
        Ok(CriterionAccumulator {
            s,
            r,
            admissible: serrin_admissible(s, r),
            value_ns: 0.0,
            value_gc: 0.0,
            t: f64::NAN,
        })
    }

    pub fn s(&self) -> Exponent {
        self.s
    }

    pub fn r(&self) -> Exponent {
        self.r
    }

    /// `3/s + 2/r ≤ 2`, decided in exact rational arithmetic.
    pub fn admissible(&self) -> bool {
        self.admissible
    }

    /// Adds the interval `[prev.t, next.t]`.
    pub fn update(&mut self, prev: CriterionSample, next: CriterionSample) -> Result<()> {
        if !(next.t > prev.t) {
            return Err(Error::TimeOrdering {
                previous: prev.t,
                next: next.t,
            });
        }
        let dt = next.t - prev.t;
        match self.r {
            Exponent::Infinite => {
                self.value_ns = self.value_ns.max(prev.n_ls).max(next.n_ls);
            }
            Exponent::Finite { .. } => {
                let r = self.r.to_f64();
                self.value_ns += 0.5 * dt * (libm::pow(prev.n_ls, r) + libm::pow(next.n_ls, r));
            }
        }
        self.value_gc += 0.5 * dt * (prev.gradc_inf * prev.gradc_inf + next.gradc_inf * next.gradc_inf);
        self.t = next.t;
        Ok(())
    }
}

/// Functional form of [`CriterionAccumulator::update`] on records, using
/// each record's `n_ls_norm` (the `s` passed to [`evaluate`]).
pub fn update_accumulators(
    acc: CriterionAccumulator,
    rec_prev: &DiagnosticsRecord,
    rec_next: &DiagnosticsRecord,
) -> Result<CriterionAccumulator> {
    let mut acc = acc;
    acc.update(rec_prev.into(), rec_next.into())?;
    Ok(acc)
}
