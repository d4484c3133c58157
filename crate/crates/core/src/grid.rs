//! Structured cell-centered grids, scalar and vector fields, quadrature.
//!
//! Storage is row-major with the last active axis varying fastest. Inactive
//! axes (beyond `dim`) have one cell of unit width so that index arithmetic
//! is the same in every dimension.

use alloc::vec;
use alloc::vec::Vec;

use crate::sum::{pairwise_sum, pairwise_sum_by};
use crate::{Error, Result};

/// Boundary handling of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    /// Box with homogeneous Neumann conditions (mirror ghost cells).
    NeumannBox,
    /// Periodic torus (wraparound).
    PeriodicTorus,
}

/// User-facing grid description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub cells: [usize; 3],
    pub extent: [f64; 3],
    pub topology: Topology,
}

impl GridSpec {
    /// Builds a spec from per-axis slices; `cells.len()` is the dimension.
    pub fn new(cells: &[usize], extent: &[f64], topology: Topology) -> Self {
        let dim = cells.len();
        let mut c = [1usize; 3];
        let mut e = [1.0f64; 3];
        for a in 0..dim.min(3) {
            c[a] = cells[a];
            e[a] = extent.get(a).copied().unwrap_or(f64::NAN);
        }
        GridSpec {
            dim,
            cells: c,
            extent: e,
            topology,
        }
    }

    /// Unit cube `[0,1]^dim` with `cells` cells per axis.
    pub fn unit(dim: usize, cells: usize, topology: Topology) -> Self {
        let c = [cells; 3];
        let e = [1.0; 3];
        Self::new(&c[..dim.min(3)], &e[..dim.min(3)], topology)
    }
}

/// Validated grid with precomputed spacings, strides and cell volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    spec: GridSpec,
    spacing: [f64; 3],
    strides: [usize; 3],
    len: usize,
    cell_volume: f64,
}

/// Side of a cell along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        if !(1..=3).contains(&spec.dim) {
            return Err(Error::InvalidGrid("dimension must be 1, 2 or 3"));
        }
        let mut spacing = [1.0; 3];
        for a in 0..spec.dim {
            if spec.cells[a] < 4 {
                return Err(Error::InvalidGrid("at least 4 cells per axis required"));
            }
            let ext = spec.extent[a];
            if !(ext.is_finite() && ext > 0.0) {
                return Err(Error::InvalidGrid("extent must be positive and finite"));
            }
            spacing[a] = ext / spec.cells[a] as f64;
        }
        let mut spec = spec;
        for a in spec.dim..3 {
            spec.cells[a] = 1;
            spec.extent[a] = 1.0;
        }
        let strides = [spec.cells[1] * spec.cells[2], spec.cells[2], 1];
        let len = spec.cells[0] * spec.cells[1] * spec.cells[2];
        let cell_volume = spacing[..spec.dim].iter().product();
        Ok(Grid {
            spec,
            spacing,
            strides,
            len,
            cell_volume,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn topology(&self) -> Topology {
        self.spec.topology
    }

    pub fn cells(&self, axis: usize) -> usize {
        self.spec.cells[axis]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.spec.extent[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing[..self.dim()].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn volume(&self) -> f64 {
        self.spec.extent[..self.dim()].iter().product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        [
            index / self.strides[0],
            (index / self.strides[1]) % self.spec.cells[1],
            index % self.spec.cells[2],
        ]
    }

    pub fn index(&self, coords: [usize; 3]) -> usize {
        coords[0] * self.strides[0] + coords[1] * self.strides[1] + coords[2]
    }

    /// Cell center `(i + 0.5)·h` per axis; inactive axes report 0.
    pub fn center(&self, index: usize) -> [f64; 3] {
        let c = self.coords(index);
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = (c[a] as f64 + 0.5) * self.spacing[a];
        }
        x
    }

    /// Neighbor across one face. On a Neumann box the ghost beyond the
    /// boundary is the cell itself (mirror); on a torus the index wraps.
    #[inline]
    pub fn neighbor(&self, index: usize, coord: usize, axis: usize, side: Side) -> usize {
        let n = self.spec.cells[axis];
        let s = self.strides[axis];
        match side {
            Side::Upper => {
                if coord + 1 < n {
                    index + s
                } else {
                    match self.spec.topology {
                        Topology::NeumannBox => index,
                        Topology::PeriodicTorus => index + s - n * s,
                    }
                }
            }
            Side::Lower => {
                if coord > 0 {
                    index - s
                } else {
                    match self.spec.topology {
                        Topology::NeumannBox => index,
                        Topology::PeriodicTorus => index + n * s - s,
                    }
                }
            }
        }
    }

    /// Faces normal to `axis`: `cells + 1` on a box, `cells` on a torus.
    pub fn face_count(&self, axis: usize) -> usize {
        match self.spec.topology {
            Topology::NeumannBox => self.spec.cells[axis] + 1,
            Topology::PeriodicTorus => self.spec.cells[axis],
        }
    }

    fn face_dims(&self, axis: usize) -> [usize; 3] {
        let mut d = self.spec.cells;
        d[axis] = self.face_count(axis);
        d
    }

    /// Number of stored faces normal to `axis`.
    pub fn face_len(&self, axis: usize) -> usize {
        let d = self.face_dims(axis);
        d[0] * d[1] * d[2]
    }

    /// Index of the face with coordinates `coords` (the `axis` entry is the face number).
    pub fn face_index(&self, axis: usize, coords: [usize; 3]) -> usize {
        let d = self.face_dims(axis);
        (coords[0] * d[1] + coords[1]) * d[2] + coords[2]
    }

    pub fn face_coords(&self, axis: usize, face: usize) -> [usize; 3] {
        let d = self.face_dims(axis);
        [face / (d[1] * d[2]), (face / d[2]) % d[1], face % d[2]]
    }

    /// Face of a cell on the given side. Face `k` separates cells `k-1` and `k`.
    #[inline]
    pub fn cell_face(&self, coords: [usize; 3], axis: usize, side: Side) -> usize {
        let mut c = coords;
        if side == Side::Upper {
            c[axis] += 1;
            if self.spec.topology == Topology::PeriodicTorus && c[axis] == self.spec.cells[axis] {
                c[axis] = 0;
            }
        }
        self.face_index(axis, c)
    }

    /// Cells on either side of a face, `None` beyond a Neumann boundary.
    pub fn face_cells(&self, axis: usize, face: usize) -> (Option<usize>, Option<usize>) {
        let fc = self.face_coords(axis, face);
        let n = self.spec.cells[axis];
        let k = fc[axis];
        let mut lower = fc;
        let mut upper = fc;
        match self.spec.topology {
            Topology::NeumannBox => {
                let lo = if k == 0 {
                    None
                } else {
                    lower[axis] = k - 1;
                    Some(self.index(lower))
                };
                let hi = if k == n { None } else { Some(self.index(upper)) };
                (lo, hi)
            }
            Topology::PeriodicTorus => {
                lower[axis] = (k + n - 1) % n;
                upper[axis] = k;
                (Some(self.index(lower)), Some(self.index(upper)))
            }
        }
    }

    /// Physical position of a face center.
    pub fn face_center(&self, axis: usize, face: usize) -> [f64; 3] {
        let fc = self.face_coords(axis, face);
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = if a == axis {
                fc[a] as f64 * self.spacing[a]
            } else {
                (fc[a] as f64 + 0.5) * self.spacing[a]
            };
        }
        x
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.spec == other.spec {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Cell-centered scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::Corrupted {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

impl Field {
    /// Wraps `values`, rejecting wrong lengths and non-finite entries.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(Field { grid, values })
    }

    /// Unchecked constructor for values produced by the crate's own kernels.
    /// Finiteness is checked where it matters (time steps, diagnostics).
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    /// Samples `f` at every cell center.
    pub fn from_fn<F: Fn([f64; 3]) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self::from_values(grid, values)
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::from_values(grid, vec![value; grid.len()])
    }

    pub fn zeros(grid: Grid) -> Self {
        Field::from_raw(grid, vec![0.0; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_finite(&self) -> Result<()> {
        check_finite(&self.values)
    }

    /// Cellwise map; the result is not finiteness-checked.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Cellwise combination of two fields on the same grid.
    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &Field, f: F) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Field::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max |values|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// Midpoint quadrature, see [`integrate`].
    pub fn integral(&self) -> Result<f64> {
        integrate(self)
    }

    /// Arithmetic mean over cells.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }
}

/// Where the components of a [`VectorField`] live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// Component `a` sampled on faces normal to axis `a`.
    Face,
    /// Every component sampled at cell centers.
    Cell,
}

/// Vector field with one scalar array per active axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    centering: Centering,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Grid, centering: Centering, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::LengthMismatch {
                expected: grid.dim(),
                found: components.len(),
            });
        }
        for (a, comp) in components.iter().enumerate() {
            let expected = match centering {
                Centering::Face => grid.face_len(a),
                Centering::Cell => grid.len(),
            };
            if comp.len() != expected {
                return Err(Error::LengthMismatch {
                    expected,
                    found: comp.len(),
                });
            }
            check_finite(comp)?;
        }
        Ok(VectorField {
            grid,
            centering,
            components,
        })
    }

    pub(crate) fn from_raw(grid: Grid, centering: Centering, components: Vec<Vec<f64>>) -> Self {
        VectorField {
            grid,
            centering,
            components,
        }
    }

    pub fn zeros(grid: Grid, centering: Centering) -> Self {
        let components = (0..grid.dim())
            .map(|a| match centering {
                Centering::Face => vec![0.0; grid.face_len(a)],
                Centering::Cell => vec![0.0; grid.len()],
            })
            .collect();
        VectorField::from_raw(grid, centering, components)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().flatten().fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

/// Midpoint quadrature `Σ values · cell volume`.
///
/// Partial sums are combined pairwise in a tree fixed by the cell count, so
/// results are bit-identical however the values were produced.
pub fn integrate(field: &Field) -> Result<f64> {
    field.check_finite()?;
    Ok(pairwise_sum(&field.values) * field.grid.cell_volume())
}

/// `(∫|f|^p)^{1/p}`; `p = ∞` gives `max |f|`.
pub fn lp_norm(field: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument("p must be at least 1"));
    }
    field.check_finite()?;
    if p.is_infinite() {
        return Ok(field.sup_norm());
    }
    let v = &field.values;
    let s = if p == 1.0 {
        pairwise_sum_by(v.len(), &|i| v[i].abs())
    } else if p == 2.0 {
        pairwise_sum_by(v.len(), &|i| v[i] * v[i])
    } else {
        pairwise_sum_by(v.len(), &|i| libm::pow(v[i].abs(), p))
    };
    Ok(libm::pow(s * field.grid.cell_volume(), 1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn grid1(n: usize, topo: Topology) -> Grid {
        Grid::new(GridSpec::new(&[n], &[1.0], topo)).unwrap()
    }

    #[test]
    fn spacing_and_volume() {
        let g = grid1(10, Topology::NeumannBox);
        assert!((g.spacing(0) - 0.1).abs() < 1e-15);
        assert!((g.cell_volume() - 0.1).abs() < 1e-15);
        let g2 = Grid::new(GridSpec::new(&[16, 16], &[1.0, 1.0], Topology::NeumannBox)).unwrap();
        assert_eq!(g2.cell_volume(), 1.0 / 256.0);
        assert_eq!(g2.len(), 256);
    }

    #[test]
    fn rejects_bad_specs() {
        let e = Grid::new(GridSpec::new(&[3, 8, 8], &[1.0; 3], Topology::NeumannBox));
        assert!(matches!(e, Err(Error::InvalidGrid(_))));
        let e = Grid::new(GridSpec::new(&[8], &[0.0], Topology::NeumannBox));
        assert!(matches!(e, Err(Error::InvalidGrid(_))));
        let e = Grid::new(GridSpec::new(&[8], &[-1.0], Topology::NeumannBox));
        assert!(matches!(e, Err(Error::InvalidGrid(_))));
        let e = Grid::new(GridSpec::new(&[8, 8, 8, 8], &[1.0; 4], Topology::NeumannBox));
        assert!(matches!(e, Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn fill_uses_cell_centers() {
        let g = grid1(4, Topology::NeumannBox);
        let f = Field::from_fn(g, |x| x[0]).unwrap();
        assert_eq!(f.values(), &[0.125, 0.375, 0.625, 0.875]);
        let f = Field::from_fn(g, |x| libm::cos(PI * x[0])).unwrap();
        for (v, x) in f.values().iter().zip([0.125, 0.375, 0.625, 0.875]) {
            assert_eq!(*v, libm::cos(PI * x));
        }
        assert!(Field::constant(g, 1.0).unwrap().values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn fill_rejects_non_finite() {
        let g = grid1(4, Topology::NeumannBox);
        let e = Field::from_fn(g, |x| if x[0] > 0.5 { f64::NAN } else { 0.0 });
        assert!(matches!(e, Err(Error::Corrupted { index: 2, .. })));
    }

    #[test]
    fn integrate_examples() {
        let g = Grid::new(GridSpec::unit(2, 8, Topology::NeumannBox)).unwrap();
        assert_eq!(integrate(&Field::constant(g, 2.0).unwrap()).unwrap(), 2.0);
        assert_eq!(integrate(&Field::zeros(g)).unwrap(), 0.0);
        let t = grid1(64, Topology::PeriodicTorus);
        let f = Field::from_fn(t, |x| libm::cos(2.0 * PI * x[0])).unwrap();
        assert!(integrate(&f).unwrap().abs() < 1e-12);
        let bad = Field::from_raw(g, vec![f64::INFINITY; g.len()]);
        assert!(integrate(&bad).is_err());
    }

    #[test]
    fn lp_examples() {
        let g = Grid::new(GridSpec::unit(2, 8, Topology::PeriodicTorus)).unwrap();
        let f = Field::constant(g, 3.0).unwrap();
        assert!((lp_norm(&f, 2.0).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 3.0);
        assert!(lp_norm(&f, 0.5).is_err());
        let g = grid1(256, Topology::NeumannBox);
        let f = Field::from_fn(g, |x| x[0]).unwrap();
        // midpoint rule: Σ x_i² h = 1/3 − h²/12
        let l2 = lp_norm(&f, 2.0).unwrap();
        assert!((l2 - 1.0 / libm::sqrt(3.0)).abs() < 1e-4);
    }

    #[test]
    fn face_bookkeeping() {
        let g = Grid::new(GridSpec::new(&[4, 5], &[1.0, 1.0], Topology::NeumannBox)).unwrap();
        assert_eq!(g.face_len(0), 5 * 5);
        assert_eq!(g.face_len(1), 4 * 6);
        for f in 0..g.face_len(1) {
            assert_eq!(g.face_index(1, g.face_coords(1, f)), f);
        }
        let (lo, hi) = g.face_cells(0, g.face_index(0, [0, 2, 0]));
        assert_eq!(lo, None);
        assert_eq!(hi, Some(g.index([0, 2, 0])));
        let t = Grid::new(GridSpec::new(&[4, 5], &[1.0, 1.0], Topology::PeriodicTorus)).unwrap();
        let (lo, hi) = t.face_cells(1, t.face_index(1, [1, 0, 0]));
        assert_eq!(lo, Some(t.index([1, 4, 0])));
        assert_eq!(hi, Some(t.index([1, 0, 0])));
        assert_eq!(t.cell_face([1, 4, 0], 1, Side::Upper), t.face_index(1, [1, 0, 0]));
    }

    #[test]
    fn neighbors_mirror_and_wrap() {
        let b = grid1(5, Topology::NeumannBox);
        assert_eq!(b.neighbor(0, 0, 0, Side::Lower), 0);
        assert_eq!(b.neighbor(4, 4, 0, Side::Upper), 4);
        let t = grid1(5, Topology::PeriodicTorus);
        assert_eq!(t.neighbor(0, 0, 0, Side::Lower), 4);
        assert_eq!(t.neighbor(4, 4, 0, Side::Upper), 0);
    }
}
