//! Brute-force reference for every diagnostics functional.
//!
//! Shares no code with the library stencils: each quantity is written out
//! from a ghost-padded index map with its own loops and compensated sums.
//! The discrete conventions match the documented ones (mirror ghosts on a
//! box, wrap on a torus, `|∇f|² = Σ_a ½(g_lo² + g_hi²)`, composed ghosts for
//! mixed derivatives, face averages of `n` in the kinetic energy).

#![allow(dead_code)]

use kscons_core::{Field, Topology};

/// Dense view of one field with explicit ghost mapping.
pub struct Mesh {
    pub dim: usize,
    pub n: [usize; 3],
    pub h: [f64; 3],
    pub torus: bool,
}

impl Mesh {
    pub fn of(f: &Field) -> Self {
        let g = f.grid();
        let mut n = [1usize; 3];
        let mut h = [1.0; 3];
        for a in 0..g.dim() {
            n[a] = g.cells(a);
            h[a] = g.extent(a) / g.cells(a) as f64;
        }
        Mesh {
            dim: g.dim(),
            n,
            h,
            torus: g.topology() == Topology::PeriodicTorus,
        }
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn volume(&self) -> f64 {
        self.h[0] * self.h[1] * self.h[2]
    }

    /// Maps a possibly out-of-range coordinate back into the grid.
    fn wrap(&self, axis: usize, i: isize) -> usize {
        let n = self.n[axis] as isize;
        if self.torus {
            i.rem_euclid(n) as usize
        } else if i < 0 {
            (-1 - i) as usize
        } else if i >= n {
            (2 * n - 1 - i) as usize
        } else {
            i as usize
        }
    }

    pub fn at(&self, v: &[f64], p: [isize; 3]) -> f64 {
        let i = self.wrap(0, p[0]);
        let j = self.wrap(1, p[1]);
        let k = self.wrap(2, p[2]);
        v[(i * self.n[1] + j) * self.n[2] + k]
    }

    pub fn cells(&self) -> impl Iterator<Item = [isize; 3]> + '_ {
        (0..self.n[0]).flat_map(move |i| {
            (0..self.n[1]).flat_map(move |j| (0..self.n[2]).map(move |k| [i as isize, j as isize, k as isize]))
        })
    }

    fn shift(p: [isize; 3], axis: usize, by: isize) -> [isize; 3] {
        let mut q = p;
        q[axis] += by;
        q
    }

    /// Forward differences across the upper and lower faces along `axis`.
    pub fn face_slopes(&self, v: &[f64], p: [isize; 3], axis: usize) -> (f64, f64) {
        let c = self.at(v, p);
        let up = (self.at(v, Self::shift(p, axis, 1)) - c) / self.h[axis];
        let lo = (c - self.at(v, Self::shift(p, axis, -1))) / self.h[axis];
        (lo, up)
    }

    pub fn grad_sq(&self, v: &[f64]) -> Vec<f64> {
        self.cells()
            .map(|p| {
                (0..self.dim)
                    .map(|a| {
                        let (lo, up) = self.face_slopes(v, p, a);
                        0.5 * (lo * lo + up * up)
                    })
                    .sum()
            })
            .collect()
    }

    pub fn lap(&self, v: &[f64]) -> Vec<f64> {
        self.cells()
            .map(|p| {
                (0..self.dim)
                    .map(|a| {
                        let (lo, up) = self.face_slopes(v, p, a);
                        (up - lo) / self.h[a]
                    })
                    .sum()
            })
            .collect()
    }

    pub fn hess_sq(&self, v: &[f64]) -> Vec<f64> {
        self.cells()
            .map(|p| {
                let mut total = 0.0;
                for a in 0..self.dim {
                    let (lo, up) = self.face_slopes(v, p, a);
                    let d = (up - lo) / self.h[a];
                    total += d * d;
                }
                for a in 0..self.dim {
                    for b in a + 1..self.dim {
                        let corner = |sa: isize, sb: isize| self.at(v, Self::shift(Self::shift(p, a, sa), b, sb));
                        let m = (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1))
                            / (4.0 * self.h[a] * self.h[b]);
                        total += 2.0 * m * m;
                    }
                }
                total
            })
            .collect()
    }

    /// Compensated midpoint rule.
    pub fn integral(&self, values: impl Iterator<Item = f64>) -> f64 {
        let (mut sum, mut carry) = (0.0f64, 0.0f64);
        for x in values {
            let y = x - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
        }
        sum * self.volume()
    }

    /// `½ Σ_faces n_face |w|² · volume` over interior faces (walls carry
    /// zero gradient, so they add nothing).
    pub fn kinetic(&self, n: &[f64], c: &[f64], log_n: &[f64], chi: f64) -> f64 {
        let mut terms = Vec::new();
        for p in self.cells() {
            for a in 0..self.dim {
                let q = Self::shift(p, a, 1);
                if !self.torus && q[a] as usize == self.n[a] {
                    continue;
                }
                let gc = (self.at(c, q) - self.at(c, p)) / self.h[a];
                let gl = (self.at(log_n, q) - self.at(log_n, p)) / self.h[a];
                let w = chi * gc - gl;
                let n_face = 0.5 * (self.at(n, p) + self.at(n, q));
                terms.push(n_face * w * w);
            }
        }
        0.5 * self.integral(terms.into_iter())
    }
}

/// Every record column, keyed by name.
pub fn reference(
    n_field: &Field,
    c_field: &Field,
    t: f64,
    chi: f64,
    kappas: (f64, f64, f64),
    s: f64,
    floor: f64,
) -> Vec<(&'static str, f64)> {
    let m = Mesh::of(n_field);
    let n = n_field.values();
    let c = c_field.values();
    let len = m.len();
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let n_floor = floor.max(1e-12 * sup(n)).max(f64::MIN_POSITIVE);
    let c_floor = floor.max(1e-12 * sup(c)).max(f64::MIN_POSITIVE);
    let nf: Vec<f64> = n.iter().map(|v| v.max(n_floor)).collect();
    let cf: Vec<f64> = c.iter().map(|v| v.max(c_floor)).collect();
    let log_n: Vec<f64> = nf.iter().map(|v| v.ln()).collect();
    let log_c: Vec<f64> = cf.iter().map(|v| v.ln()).collect();
    let sqrt_c: Vec<f64> = c.iter().map(|v| v.max(0.0).sqrt()).collect();

    let gn = m.grad_sq(n);
    let gc = m.grad_sq(c);
    let glogn = m.grad_sq(&log_n);
    let gsqrtc = m.grad_sq(&sqrt_c);
    let lc = m.lap(c);
    let ct: Vec<f64> = (0..len).map(|i| lc[i] - n[i] * c[i]).collect();
    let gct = m.grad_sq(&ct);
    let glc = m.grad_sq(&lc);
    let ggc = m.grad_sq(&gc);
    let hlogn = m.hess_sq(&log_n);
    let hlogc = m.hess_sq(&log_c);
    let hc = m.hess_sq(c);
    let int = |f: &dyn Fn(usize) -> f64| m.integral((0..len).map(f));

    let mass = int(&|i| n[i]);
    let n_gradlog_sq = int(&|i| nf[i] * glogn[i]);
    let cross_n2c = int(&|i| n[i] * n[i] * c[i]);
    let n_l2_sq = int(&|i| n[i] * n[i]);
    let n_gradc_sq = int(&|i| n[i] * gc[i]);
    let lap_c_l2_sq = int(&|i| lc[i] * lc[i]);
    let gradc_l4_4 = int(&|i| gc[i] * gc[i]);
    let gradn_l2_sq = int(&|i| gn[i]);
    let cn3 = int(&|i| c[i] * n[i].powi(3));
    let c_gradn_sq = int(&|i| c[i] * gn[i]);
    let grad_ct_l2_sq = int(&|i| gct[i]);
    let grad_lapc_l2_sq = int(&|i| glc[i]);
    let n_lapc_sq = int(&|i| n[i] * lc[i] * lc[i]);
    let grad_gradc_sq_l2_sq = int(&|i| ggc[i]);
    let hess_c_gradc_sq = int(&|i| hc[i] * gc[i]);
    let n_hess_logn_sq = int(&|i| nf[i] * hlogn[i]);
    let (k1, k2, k3) = kappas;
    let (v, g) = if chi > 0.0 {
        (
            0.5 * n_gradlog_sq
                + k1 / (2.0 * chi) * cross_n2c
                + k1 / (chi * chi) * n_l2_sq
                + (0.5 * k1 + k2) * n_gradc_sq
                + k2 * lap_c_l2_sq
                + k3 * gradc_l4_4,
            k1 / (chi * chi) * gradn_l2_sq
                + k1 / (2.0 * chi) * cn3
                + k1 / chi * c_gradn_sq
                + 0.5 * k2 * grad_ct_l2_sq
                + 0.5 * k2 * grad_lapc_l2_sq
                + 0.25 * (k1 + k2) * n_lapc_sq
                + k3 * grad_gradc_sq_l2_sq
                + 4.0 * k3 * hess_c_gradc_sq
                + n_hess_logn_sq / 16.0,
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    let mean = mass / m.integral((0..len).map(|_| 1.0));
    let n_ls = if s.is_infinite() {
        sup(n)
    } else {
        int(&|i| n[i].abs().powf(s)).powf(1.0 / s)
    };

    vec![
        ("t", t),
        ("mass", mass),
        ("n_sup", sup(n)),
        ("n_min", n.iter().copied().fold(f64::INFINITY, f64::min)),
        ("n_dev_inf", n.iter().fold(0.0f64, |a, x| a.max((x - mean).abs()))),
        ("c_sup", c.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        ("c_min", c.iter().copied().fold(f64::INFINITY, f64::min)),
        ("entropy", int(&|i| nf[i] * log_n[i])),
        ("dirichlet_sqrt_c", 2.0 * int(&|i| gsqrtc[i])),
        ("fisher", int(&|i| gn[i] / nf[i])),
        ("n_gradlog_sq", n_gradlog_sq),
        ("n_gradc_sq", n_gradc_sq),
        ("n_l2_sq", n_l2_sq),
        ("cross_n2c", cross_n2c),
        ("lap_c_l2_sq", lap_c_l2_sq),
        ("gradc_l4_4", gradc_l4_4),
        ("cn3", cn3),
        ("c_gradn_sq", c_gradn_sq),
        ("kinetic_e", m.kinetic(n, c, &log_n, chi)),
        ("v", v),
        ("g", g),
        ("gradc_inf", gc.iter().fold(0.0f64, |a, &x| a.max(x)).sqrt()),
        ("n_ls_norm", n_ls),
        ("c_mass", int(&|i| c[i])),
        ("n_gradc_sq_over_c", int(&|i| n[i] * gc[i] / cf[i])),
        ("c_hess_logc_sq", int(&|i| cf[i] * hlogc[i])),
        ("n_hess_logn_sq", n_hess_logn_sq),
        ("gradn_l2_sq", gradn_l2_sq),
        ("grad_ct_l2_sq", grad_ct_l2_sq),
        ("grad_lapc_l2_sq", grad_lapc_l2_sq),
        ("n_lapc_sq", n_lapc_sq),
        ("grad_gradc_sq_l2_sq", grad_gradc_sq_l2_sq),
        ("hess_c_gradc_sq", hess_c_gradc_sq),
        ("n_floor", n_floor),
        ("c_floor", c_floor),
        ("c_floored_cells", c.iter().filter(|&&v| v < c_floor).count() as f64),
    ]
}
