//! Blow-up post-processing: power-law rate fits, type classification, the
//! lower-bound constant and local non-degeneracy maps.

use alloc::vec::Vec;

use crate::grid::Field;
use crate::{Error, Result};

/// Outcome class of a rate fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    NoBlowup,
    /// `γ ≤ 1 + tol`: at most the self-similar rate.
    TypeI,
    TypeII,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::NoBlowup => "no_blowup",
            Classification::TypeI => "type_I",
            Classification::TypeII => "type_II",
        }
    }
}

/// `γ ≤ 1 + tol` gives type I, anything larger type II.
pub fn classify(gamma: f64, tol: f64) -> Classification {
    if gamma <= 1.0 + tol {
        Classification::TypeI
    } else {
        Classification::TypeII
    }
}

/// Least-squares fit `n_sup ≈ A (T* − t)^{−γ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub t_star: f64,
    pub gamma: f64,
    pub amplitude: f64,
    /// RMS of the log-log residuals.
    pub residual: f64,
    /// Index of the first sample in the fit window.
    pub window_start: usize,
}

/// Why a series was judged not to blow up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoBlowupReason {
    /// `n_sup` fails to increase strictly over the window.
    NotIncreasing,
    /// Best fit has `γ ≤ 0`.
    NonPositiveRate,
    /// Best fit residual exceeds the threshold.
    PoorFit { residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateFit {
    Blowup(PowerLawFit),
    NoBlowup(NoBlowupReason),
}

/// Rate-fit tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Trailing fraction of samples used (at least 8 samples).
    pub window_fraction: f64,
    /// RMS residual above which the fit is rejected.
    pub max_residual: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            window_fraction: 0.25,
            max_residual: 0.05,
        }
    }
}

/// Smallest number of samples in a fit window.
pub const MIN_WINDOW: usize = 8;

fn window_start(len: usize, fraction: f64) -> usize {
    let want = libm::ceil(fraction * len as f64) as usize;
    len - want.clamp(MIN_WINDOW, len)
}

struct LineFit {
    intercept: f64,
    slope: f64,
    sse: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x` on `log(T* − t)`.
fn line_fit(window: &[(f64, f64)], t_star: f64) -> LineFit {
    let m = window.len() as f64;
    let xs = window.iter().map(|&(t, _)| libm::log(t_star - t));
    let ys = window.iter().map(|&(_, n)| libm::log(n));
    let x_mean = xs.clone().sum::<f64>() / m;
    let y_mean = ys.clone().sum::<f64>() / m;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.clone().zip(ys.clone()) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse = xs
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    LineFit { intercept, slope, sse }
}

/// `d SSE / d T*` up to the positive factor 2; the line parameters are
/// optimal so only the explicit dependence through `x` contributes.
fn sse_slope(window: &[(f64, f64)], t_star: f64) -> f64 {
    let fit = line_fit(window, t_star);
    let mut acc = 0.0;
    for &(t, n) in window {
        let d = t_star - t;
        let r = libm::log(n) - fit.intercept - fit.slope * libm::log(d);
        acc += r / d;
    }
    -fit.slope * acc
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * b.abs() {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Sharpens a golden-section minimiser by bisecting on the sign of the
/// objective's derivative, which is resolved far below `√ε`.
fn polish(window: &[(f64, f64)], guess: f64, lo: f64, hi: f64) -> f64 {
    let g = |x: f64| sse_slope(window, x);
    let mut step = 1e-6 * (guess - lo).max(f64::MIN_POSITIVE);
    let (mut a, mut b) = (guess, guess);
    let mut found = false;
    for _ in 0..60 {
        a = (guess - step).max(lo + 0.5 * (guess - lo));
        b = (guess + step).min(hi);
        if g(a) <= 0.0 && g(b) >= 0.0 {
            found = true;
            break;
        }
        step *= 4.0;
    }
    if !found {
        return guess;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if g(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let best = 0.5 * (a + b);
    if line_fit(window, best).sse <= line_fit(window, guess).sse {
        best
    } else {
        guess
    }
}

/// Fits a power law to the trailing window of `(t, n_sup)` samples.
///
/// `T*` is searched over `(t_last, t_last + 10 (t_last − t_first))` with
/// `t_first` the first sample of the window.
pub fn fit_rate(series: &[(f64, f64)], options: FitOptions) -> Result<RateFit> {
    if series.len() < MIN_WINDOW {
        return Err(Error::InsufficientData {
            needed: MIN_WINDOW,
            found: series.len(),
        });
    }
    if !(options.window_fraction > 0.0 && options.window_fraction <= 1.0) {
        return Err(Error::InvalidArgument("window fraction must lie in (0, 1]"));
    }
    for pair in series.windows(2) {
        if !(pair[1].0 > pair[0].0) {
            return Err(Error::TimeOrdering {
                previous: pair[0].0,
                next: pair[1].0,
            });
        }
    }
    if let Some(&(_, value)) = series.iter().find(|(t, n)| !t.is_finite() || !n.is_finite()) {
        return Err(Error::Corrupted { index: 0, value });
    }
    let start = window_start(series.len(), options.window_fraction);
    let window = &series[start..];
    if window.windows(2).any(|p| !(p[1].1 > p[0].1)) || window[0].1 <= 0.0 {
        return Ok(RateFit::NoBlowup(NoBlowupReason::NotIncreasing));
    }
    let t_first = window[0].0;
    let t_last = window[window.len() - 1].0;
    let lo = t_last;
    let hi = t_last + 10.0 * (t_last - t_first);
    let sse = |ts: f64| {
        if ts <= t_last {
            f64::INFINITY
        } else {
            line_fit(window, ts).sse
        }
    };
    let coarse = golden_section(sse, lo, hi);
    let t_star = polish(window, coarse, lo, hi);
    let fit = line_fit(window, t_star);
    let gamma = -fit.slope;
    let residual = libm::sqrt(fit.sse / window.len() as f64);
    if !(gamma > 0.0) {
        return Ok(RateFit::NoBlowup(NoBlowupReason::NonPositiveRate));
    }
    if !(residual <= options.max_residual) {
        return Ok(RateFit::NoBlowup(NoBlowupReason::PoorFit { residual }));
    }
    Ok(RateFit::Blowup(PowerLawFit {
        t_star,
        gamma,
        amplitude: libm::exp(fit.intercept),
        residual,
        window_start: start,
    }))
}

/// Constants of the blow-up lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBound {
    pub alpha: f64,
    pub c_tilde: f64,
    pub delta0: f64,
    pub kappa3: f64,
}

/// `κ₃ = C₃/4`, `(2+√3)² κ₃ δ₀ = 1/16`, `C̃ = 3 δ₀^{−1/3} ‖c₀‖∞^{4/3}`,
/// `α = 1/(4C̃)`.
pub fn alpha_lower_bound(c0_sup: f64, c3: f64) -> Result<AlphaBound> {
    if !(c0_sup > 0.0 && c0_sup.is_finite()) || !(c3 > 0.0 && c3.is_finite()) {
        return Err(Error::InvalidArgument("alpha bound needs positive finite inputs"));
    }
    let k = 2.0 + libm::sqrt(3.0);
    let kappa3 = c3 / 4.0;
    let delta0 = 1.0 / (16.0 * k * k * kappa3);
    let c_tilde = 3.0 * libm::cbrt(1.0 / delta0) * libm::cbrt(c0_sup * c0_sup * c0_sup * c0_sup);
    Ok(AlphaBound {
        alpha: 1.0 / (4.0 * c_tilde),
        c_tilde,
        delta0,
        kappa3,
    })
}

/// `max (t* − t) n_sup` over the trailing window of samples before `t*`.
pub fn check_lower_bound(series: &[(f64, f64)], t_star: f64, alpha: f64, window_fraction: f64) -> (f64, bool) {
    let before: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t < t_star).collect();
    if before.is_empty() {
        return (0.0, false);
    }
    let want = libm::ceil(window_fraction * before.len() as f64) as usize;
    let start = before.len() - want.clamp(1, before.len());
    let limsup = before[start..]
        .iter()
        .map(|&(t, n)| (t_star - t) * n)
        .fold(0.0, f64::max);
    (limsup, limsup >= alpha)
}

/// Full blow-up report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupReport {
    pub t_star: f64,
    pub gamma: f64,
    pub amplitude: f64,
    pub fit_residual: f64,
    pub classification: Classification,
    pub alpha: f64,
    pub limsup_estimate: f64,
    pub lower_bound_satisfied: bool,
}

/// Fits, classifies and checks the lower bound. Without blow-up the fit
/// quantities are NaN and the bound is reported unsatisfied.
pub fn report(
    series: &[(f64, f64)],
    options: FitOptions,
    classify_tol: f64,
    c0_sup: f64,
    c3: f64,
) -> Result<BlowupReport> {
    let alpha = alpha_lower_bound(c0_sup, c3)?.alpha;
    match fit_rate(series, options)? {
        RateFit::Blowup(fit) => {
            let (limsup_estimate, lower_bound_satisfied) =
                check_lower_bound(series, fit.t_star, alpha, options.window_fraction);
            Ok(BlowupReport {
                t_star: fit.t_star,
                gamma: fit.gamma,
                amplitude: fit.amplitude,
                fit_residual: fit.residual,
                classification: classify(fit.gamma, classify_tol),
                alpha,
                limsup_estimate,
                lower_bound_satisfied,
            })
        }
        RateFit::NoBlowup(reason) => Ok(BlowupReport {
            t_star: f64::NAN,
            gamma: f64::NAN,
            amplitude: f64::NAN,
            fit_residual: match reason {
                NoBlowupReason::PoorFit { residual } => residual,
                _ => f64::NAN,
            },
            classification: Classification::NoBlowup,
            alpha,
            limsup_estimate: f64::NAN,
            lower_bound_satisfied: false,
        }),
    }
}

/// Per-cell `max (t* − t) n(x, t)` with the cells at or above `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct NondegeneracyMap {
    pub values: Field,
    pub epsilon: f64,
    pub flagged_cells: Vec<usize>,
}

pub fn nondegeneracy_map(snapshots: &[(f64, &Field)], t_star: f64, epsilon: f64) -> Result<NondegeneracyMap> {
    let (&(_, first), rest) = match snapshots.split_first() {
        Some((head, rest)) => (head, rest),
        None => return Err(Error::InsufficientData { needed: 1, found: 0 }),
    };
    let grid = *first.grid();
    let mut values: Vec<f64> = alloc::vec![0.0; grid.len()];
    let mut previous = f64::NEG_INFINITY;
    for &(t, n) in core::iter::once(&snapshots[0]).chain(rest) {
        grid.ensure_same(n.grid())?;
        n.check_finite()?;
        if !(t > previous) || !(t < t_star) {
            return Err(Error::TimeOrdering { previous, next: t });
        }
        previous = t;
        for (slot, &v) in values.iter_mut().zip(n.values()) {
            *slot = (*slot).max((t_star - t) * v.max(0.0));
        }
    }
    let flagged_cells = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= epsilon)
        .map(|(i, _)| i)
        .collect();
    Ok(NondegeneracyMap {
        values: Field::from_raw(grid, values),
        epsilon,
        flagged_cells,
    })
}

/// Cells where `n + |∇c|` exceeds every threshold of an escalating sequence.
///
/// The `K` thresholds are matched to the last `K` snapshots in time order:
/// a cell belongs to the set when snapshot `len − K + k` exceeds threshold
/// `k` for every `k`.
pub fn blowup_set(snapshots: &[(&Field, &Field)], thresholds: &[f64]) -> Result<Vec<usize>> {
    if thresholds.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: thresholds.len(),
        });
    }
    if thresholds.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("thresholds must increase strictly"));
    }
    if snapshots.len() < thresholds.len() {
        return Err(Error::InsufficientData {
            needed: thresholds.len(),
            found: snapshots.len(),
        });
    }
    let grid = *snapshots[0].0.grid();
    let tail = &snapshots[snapshots.len() - thresholds.len()..];
    for (n, g) in tail {
        grid.ensure_same(n.grid())?;
        grid.ensure_same(g.grid())?;
    }
    Ok((0..grid.len())
        .filter(|&i| {
            tail.iter()
                .zip(thresholds)
                .all(|((n, g), &level)| n.values()[i] + g.values()[i] > level)
        })
        .collect())
}
