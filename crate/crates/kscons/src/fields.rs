//! Initial-data profiles and seeded random smooth fields.
//!
//! Profiles are functions of position, independent of resolution, so the
//! same data can be sampled on every level of a refinement study.

use std::f64::consts::PI;

use kscons_core::{Field, Grid, GridSpec, Topology};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::Profile;

/// Seeded generator used for every random corpus.
pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// `2π/L` on a torus, `π/L` on a box: the first mode that respects the
/// boundary condition.
fn base_wavenumber(spec: &GridSpec, axis: usize) -> f64 {
    match spec.topology {
        Topology::PeriodicTorus => 2.0 * PI / spec.extent[axis],
        Topology::NeumannBox => PI / spec.extent[axis],
    }
}

/// Random combination of the modes `0 ≤ k_a ≤ modes` (excluding `k = 0`).
///
/// Coefficients decay like `1/(1+|k|²)` and are scaled so the sum of
/// their magnitudes is one, hence `|S| ≤ 1` everywhere. On a box only
/// cosines appear, so every mode has zero normal derivative at the walls.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothRandom {
    dim: usize,
    torus: bool,
    wave: [f64; 3],
    terms: Vec<([usize; 3], f64, f64)>,
}

impl SmoothRandom {
    pub fn new(spec: &GridSpec, modes: usize, rng: &mut ChaCha8Rng) -> Self {
        let dim = spec.dim;
        let torus = spec.topology == Topology::PeriodicTorus;
        let modes = modes.max(1);
        let mut terms = Vec::new();
        let mut k = [0usize; 3];
        'outer: loop {
            if k[..dim].iter().any(|&v| v > 0) {
                let weight = 1.0 / (1.0 + k[..dim].iter().map(|&v| (v * v) as f64).sum::<f64>());
                let a = rng.gen_range(-1.0..1.0) * weight;
                let b = if torus { rng.gen_range(-1.0..1.0) * weight } else { 0.0 };
                terms.push((k, a, b));
            }
            for slot in k.iter_mut().take(dim) {
                *slot += 1;
                if *slot <= modes {
                    continue 'outer;
                }
                *slot = 0;
            }
            break;
        }
        let total: f64 = terms.iter().map(|(_, a, b)| a.abs() + b.abs()).sum();
        for t in &mut terms {
            t.1 /= total;
            t.2 /= total;
        }
        let mut wave = [0.0; 3];
        for (a, w) in wave.iter_mut().enumerate().take(dim) {
            *w = base_wavenumber(spec, a);
        }
        SmoothRandom {
            dim,
            torus,
            wave,
            terms,
        }
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(k, a, b)| {
                if self.torus {
                    let phase: f64 = (0..self.dim).map(|d| k[d] as f64 * self.wave[d] * x[d]).sum();
                    a * phase.cos() + b * phase.sin()
                } else {
                    let product: f64 = (0..self.dim)
                        .map(|d| (k[d] as f64 * self.wave[d] * x[d]).cos())
                        .product();
                    a * product
                }
            })
            .sum()
    }
}

/// Random smooth field on `grid` with values in `[-1, 1]`.
pub fn random_smooth(grid: Grid, modes: usize, rng: &mut ChaCha8Rng) -> Field {
    let shape = SmoothRandom::new(grid.spec(), modes, rng);
    Field::from_fn(grid, |x| shape.eval(x)).expect("finite by construction")
}

pub type Profile3 = Box<dyn Fn([f64; 3]) -> f64 + Send + Sync>;

/// `mean + amplitude · shape(x)` with `shape` chosen by `profile`:
/// the first boundary-respecting cosine along x, a centered Gaussian of
/// standard deviation `width`, or a [`SmoothRandom`] draw.
pub fn profile_fn(
    spec: &GridSpec,
    profile: Profile,
    mean: f64,
    amplitude: f64,
    width: f64,
    modes: usize,
    rng: &mut ChaCha8Rng,
) -> Profile3 {
    match profile {
        Profile::Constant => Box::new(move |_| mean),
        Profile::Cosine => {
            let k = base_wavenumber(spec, 0);
            Box::new(move |x| mean + amplitude * (k * x[0]).cos())
        }
        Profile::Gaussian => {
            let dim = spec.dim;
            let center = spec.extent.map(|e| 0.5 * e);
            Box::new(move |x| {
                let r2: f64 = (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum();
                mean + amplitude * (-r2 / (2.0 * width * width)).exp()
            })
        }
        Profile::RandomSmooth => {
            let shape = SmoothRandom::new(spec, modes, rng);
            Box::new(move |x| mean + amplitude * shape.eval(x))
        }
    }
}
