//! Second-order finite-difference operators on cell-centered fields.
//!
//! Gradients live on faces, divergences come back to cells, and the
//! Laplacian is the divergence of the face gradient written out cell by
//! cell. Both paths go through [`face_difference`] and [`cell_balance`], so
//! `divergence(gradient(f))` and `laplacian(f)` agree bit for bit.
//!
//! Neumann boundary faces carry zero gradient and zero flux (mirror ghosts);
//! on the torus indices wrap.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{Centering, Field, Grid, Side, Topology, VectorField};
use crate::{Error, Result};

#[inline]
fn face_difference(upper: f64, lower: f64, h: f64) -> f64 {
    (upper - lower) / h
}

#[inline]
fn cell_balance(out_face: f64, in_face: f64, h: f64) -> f64 {
    (out_face - in_face) / h
}

/// Whether the upper (resp. lower) face of a cell is a Neumann wall.
#[inline]
fn is_wall(grid: &Grid, coord: usize, axis: usize, side: Side) -> bool {
    grid.topology() == Topology::NeumannBox
        && match side {
            Side::Upper => coord + 1 == grid.cells(axis),
            Side::Lower => coord == 0,
        }
}

/// Normal derivative on the upper/lower face of a cell.
#[inline]
fn cell_face_gradient(grid: &Grid, v: &[f64], index: usize, coords: &[usize; 3], axis: usize, side: Side) -> f64 {
    if is_wall(grid, coords[axis], axis, side) {
        return 0.0;
    }
    let h = grid.spacing(axis);
    let nb = grid.neighbor(index, coords[axis], axis, side);
    match side {
        Side::Upper => face_difference(v[nb], v[index], h),
        Side::Lower => face_difference(v[index], v[nb], h),
    }
}

/// Face-centered gradient of raw cell values.
pub(crate) fn gradient_values(grid: &Grid, v: &[f64]) -> Vec<Vec<f64>> {
    (0..grid.dim())
        .map(|axis| {
            let h = grid.spacing(axis);
            (0..grid.face_len(axis))
                .map(|face| match grid.face_cells(axis, face) {
                    (Some(lo), Some(hi)) => face_difference(v[hi], v[lo], h),
                    _ => 0.0,
                })
                .collect()
        })
        .collect()
}

pub(crate) fn divergence_values(grid: &Grid, components: &[Vec<f64>]) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let c = grid.coords(i);
            let mut acc = 0.0;
            for (axis, comp) in components.iter().enumerate() {
                let out_face = comp[grid.cell_face(c, axis, Side::Upper)];
                let in_face = comp[grid.cell_face(c, axis, Side::Lower)];
                acc += cell_balance(out_face, in_face, grid.spacing(axis));
            }
            acc
        })
        .collect()
}

pub(crate) fn laplacian_values(grid: &Grid, v: &[f64]) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let c = grid.coords(i);
            let mut acc = 0.0;
            for axis in 0..grid.dim() {
                let out_face = cell_face_gradient(grid, v, i, &c, axis, Side::Upper);
                let in_face = cell_face_gradient(grid, v, i, &c, axis, Side::Lower);
                acc += cell_balance(out_face, in_face, grid.spacing(axis));
            }
            acc
        })
        .collect()
}

/// Cell value of `|∇f|²`: per axis, the mean of the squared normal
/// derivatives on the two faces of the cell (Neumann walls contribute 0).
pub(crate) fn grad_sq_values(grid: &Grid, v: &[f64]) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let c = grid.coords(i);
            let mut acc = 0.0;
            for axis in 0..grid.dim() {
                let up = cell_face_gradient(grid, v, i, &c, axis, Side::Upper);
                let lo = cell_face_gradient(grid, v, i, &c, axis, Side::Lower);
                acc += 0.5 * (up * up + lo * lo);
            }
            acc
        })
        .collect()
}

/// Second derivatives of one cell: diagonal `D_aa f` and the mixed
/// `D_01, D_02, D_12`. Entries for inactive axes are zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct CellHessian {
    pub diag: [f64; 3],
    pub mixed: [f64; 3],
}

impl CellHessian {
    pub fn frobenius_sq(&self) -> f64 {
        let d = &self.diag;
        let m = &self.mixed;
        d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + 2.0 * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2])
    }
}

pub(crate) fn cell_hessian(grid: &Grid, v: &[f64], index: usize) -> CellHessian {
    let c = grid.coords(index);
    let mut out = CellHessian::default();
    for axis in 0..grid.dim() {
        let up = cell_face_gradient(grid, v, index, &c, axis, Side::Upper);
        let lo = cell_face_gradient(grid, v, index, &c, axis, Side::Lower);
        out.diag[axis] = cell_balance(up, lo, grid.spacing(axis));
    }
    let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
    for (k, &(a, b)) in pairs.iter().enumerate() {
        if b >= grid.dim() {
            continue;
        }
        // Ghosts compose: stepping along `a` leaves the `b` coordinate alone,
        // so corners are mirrored twice on a box.
        let ap = grid.neighbor(index, c[a], a, Side::Upper);
        let am = grid.neighbor(index, c[a], a, Side::Lower);
        let pp = grid.neighbor(ap, c[b], b, Side::Upper);
        let pm = grid.neighbor(ap, c[b], b, Side::Lower);
        let mp = grid.neighbor(am, c[b], b, Side::Upper);
        let mm = grid.neighbor(am, c[b], b, Side::Lower);
        out.mixed[k] = (v[pp] - v[pm] - v[mp] + v[mm]) / (4.0 * grid.spacing(a) * grid.spacing(b));
    }
    out
}

/// Standard `(2·dim+1)`-point Laplacian.
pub fn laplacian(field: &Field) -> Result<Field> {
    field.check_finite()?;
    let grid = *field.grid();
    Ok(Field::from_raw(grid, laplacian_values(&grid, field.values())))
}

/// Face-centered central differences; Neumann walls get exactly zero.
pub fn gradient(field: &Field) -> Result<VectorField> {
    field.check_finite()?;
    let grid = *field.grid();
    Ok(VectorField::from_raw(
        grid,
        Centering::Face,
        gradient_values(&grid, field.values()),
    ))
}

/// Per-cell net outflux divided by spacing, summed over axes.
pub fn divergence(v: &VectorField) -> Result<Field> {
    if v.centering() != Centering::Face {
        return Err(Error::CenteringMismatch);
    }
    let grid = *v.grid();
    Ok(Field::from_raw(grid, divergence_values(&grid, v.components())))
}

/// Face values of `χ · n_face · ∂c`; no validation.
pub(crate) fn flux_values(grid: &Grid, n: &[f64], c: &[f64], chi: f64, upwind: bool) -> Vec<Vec<f64>> {
    (0..grid.dim())
        .map(|axis| {
            let h = grid.spacing(axis);
            (0..grid.face_len(axis))
                .map(|face| match grid.face_cells(axis, face) {
                    (Some(lo), Some(hi)) => {
                        let g = face_difference(c[hi], c[lo], h);
                        let n_face = if upwind && g > 0.0 {
                            n[lo]
                        } else if upwind && g < 0.0 {
                            n[hi]
                        } else {
                            0.5 * (n[lo] + n[hi])
                        };
                        chi * n_face * g
                    }
                    _ => 0.0,
                })
                .collect()
        })
        .collect()
}

/// Chemotactic flux `χ n ∇c` on faces.
///
/// With `upwind` the face density is taken from the cell the drift comes
/// from (drift points up the gradient of `c`); a zero gradient falls back to
/// the arithmetic mean. Neumann walls carry no flux.
pub fn chemotactic_flux(n: &Field, c: &Field, chi: f64, upwind: bool) -> Result<VectorField> {
    n.grid().ensure_same(c.grid())?;
    n.check_finite()?;
    c.check_finite()?;
    if !chi.is_finite() {
        return Err(Error::InvalidArgument("chi must be finite"));
    }
    if let Some(index) = n.values().iter().position(|&v| v < 0.0) {
        return Err(Error::PositivityViolation {
            index,
            value: n.values()[index],
        });
    }
    let grid = *n.grid();
    Ok(VectorField::from_raw(
        grid,
        Centering::Face,
        flux_values(&grid, n.values(), c.values(), chi, upwind),
    ))
}

/// Per-cell squared Frobenius norm `Σ_ab (D_a D_b f)²`.
///
/// Diagonal entries are the 3-point second differences (the same face
/// differences the Laplacian uses); mixed entries are centered cross
/// differences with ghosts per topology.
pub fn hessian_frobenius_sq(field: &Field) -> Result<Field> {
    field.check_finite()?;
    let grid = *field.grid();
    let v = field.values();
    Ok(Field::from_raw(
        grid,
        (0..grid.len())
            .map(|i| cell_hessian(&grid, v, i).frobenius_sq())
            .collect(),
    ))
}

/// Cell-centered `|∇f|²` (mean of squared face derivatives per axis).
pub fn gradient_sq(field: &Field) -> Result<Field> {
    field.check_finite()?;
    let grid = *field.grid();
    Ok(Field::from_raw(grid, grad_sq_values(&grid, field.values())))
}

/// Cell-centered `|∇f|`.
pub fn gradient_magnitude(field: &Field) -> Result<Field> {
    Ok(gradient_sq(field)?.map(libm::sqrt))
}

/// Face values averaged back to cells, one component per axis.
pub fn face_to_cell(v: &VectorField) -> Result<VectorField> {
    if v.centering() != Centering::Face {
        return Err(Error::CenteringMismatch);
    }
    let grid = *v.grid();
    let comps = v
        .components()
        .iter()
        .enumerate()
        .map(|(axis, comp)| {
            let mut out = vec![0.0; grid.len()];
            for (i, o) in out.iter_mut().enumerate() {
                let c = grid.coords(i);
                *o = 0.5 * (comp[grid.cell_face(c, axis, Side::Upper)] + comp[grid.cell_face(c, axis, Side::Lower)]);
            }
            out
        })
        .collect();
    Ok(VectorField::from_raw(grid, Centering::Cell, comps))
}
