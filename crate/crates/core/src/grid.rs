//! Shifted cubical grids on a box in `R^m`.
//!
//! A grid of cell size `h` covers `prod_l [-L + delta_l, L + delta_l]` where
//! `L` is a positive integer multiple of `h` and every shift satisfies
//! `0 <= delta_l < h`. Cells are half-open `[a, a + h)` on each axis except
//! that the upper face of the domain is closed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance (in units of `h`) used to snap coordinates onto cell
/// boundaries before flooring.
const BOUNDARY_SNAP: f64 = 1e-12;

/// Linearized cell id. Axis 0 is the most significant digit, so the integer
/// order matches the lexicographic order of the per-axis coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellIndex(pub u64);

impl std::fmt::Display for CellIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridSpec {
    dim: usize,
    h: f64,
    half_width: f64,
    shifts: Vec<f64>,
    cells_per_axis: usize,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    m: usize,
    h: f64,
    #[serde(rename = "L")]
    half_width: f64,
    delta: Vec<f64>,
}

impl TryFrom<GridRepr> for GridSpec {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        GridSpec::new(r.m, r.h, r.half_width, r.delta)
    }
}

impl From<GridSpec> for GridRepr {
    fn from(g: GridSpec) -> Self {
        GridRepr {
            m: g.dim,
            h: g.h,
            half_width: g.half_width,
            delta: g.shifts,
        }
    }
}

fn check_cell_size(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::param(format!("cell size must be positive, got {h}")));
    }
    Ok(())
}

fn check_shifts(h: f64, shifts: &[f64]) -> Result<()> {
    for (axis, &d) in shifts.iter().enumerate() {
        if !(d.is_finite() && d >= 0.0 && d < h) {
            return Err(Error::param(format!(
                "shift {d} on axis {axis} is outside [0, {h})"
            )));
        }
    }
    Ok(())
}

impl GridSpec {
    /// Builds a grid from an explicit half-width, which must be a positive
    /// integer multiple of `h`.
    pub fn new(dim: usize, h: f64, half_width: f64, shifts: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension must be positive"));
        }
        check_cell_size(h)?;
        if shifts.len() != dim {
            return Err(Error::param(format!(
                "expected {dim} shifts, got {}",
                shifts.len()
            )));
        }
        check_shifts(h, &shifts)?;
        let ratio = half_width / h;
        let k = ratio.round();
        if !(k >= 1.0 && (ratio - k).abs() <= 1e-9 * k.max(1.0)) {
            return Err(Error::param(format!(
                "half-width {half_width} is not a positive multiple of {h}"
            )));
        }
        let cells_per_axis = 2 * k as usize;
        let total = (cells_per_axis as f64).powi(dim as i32);
        if total >= u64::MAX as f64 {
            return Err(Error::param("grid has too many cells to index"));
        }
        Ok(GridSpec {
            dim,
            h,
            half_width,
            shifts,
            cells_per_axis,
        })
    }

    /// Unshifted grid (`delta = 0`) with the given half-width.
    pub fn canonical(dim: usize, h: f64, half_width: f64) -> Result<Self> {
        GridSpec::new(dim, h, half_width, vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_size(&self) -> f64 {
        self.h
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn cell_count(&self) -> u64 {
        (self.cells_per_axis as u64).pow(self.dim as u32)
    }

    /// Lower corner of the domain on `axis`.
    pub fn lower(&self, axis: usize) -> f64 {
        -self.half_width + self.shifts[axis]
    }

    /// Upper corner of the domain on `axis`.
    pub fn upper(&self, axis: usize) -> f64 {
        self.half_width + self.shifts[axis]
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim && self.axis_coords(point).is_some()
    }

    fn axis_coord(&self, axis: usize, value: f64) -> Option<usize> {
        let n = self.cells_per_axis as f64;
        let mut t = (value - self.lower(axis)) / self.h;
        let nearest = t.round();
        if (t - nearest).abs() <= BOUNDARY_SNAP * nearest.abs().max(1.0) {
            t = nearest;
        }
        if !(t >= 0.0 && t <= n) {
            return None;
        }
        let c = t.floor() as usize;
        Some(c.min(self.cells_per_axis - 1))
    }

    fn axis_coords(&self, point: &[f64]) -> Option<Vec<usize>> {
        point
            .iter()
            .enumerate()
            .map(|(axis, &v)| self.axis_coord(axis, v))
            .collect()
    }

    /// Cell containing `point`.
    pub fn locate(&self, point: &[f64]) -> Result<CellIndex> {
        if point.len() != self.dim {
            return Err(Error::param(format!(
                "point has {} coordinates, grid has {}",
                point.len(),
                self.dim
            )));
        }
        let mut id = 0u64;
        let n = self.cells_per_axis as u64;
        for (axis, &v) in point.iter().enumerate() {
            let c = self.axis_coord(axis, v).ok_or_else(|| Error::OutOfDomain {
                point: point.to_vec(),
                series: None,
            })?;
            id = id * n + c as u64;
        }
        Ok(CellIndex(id))
    }

    pub fn coords(&self, cell: CellIndex) -> Vec<usize> {
        let n = self.cells_per_axis as u64;
        let mut coords = vec![0usize; self.dim];
        let mut rest = cell.0;
        for c in coords.iter_mut().rev() {
            *c = (rest % n) as usize;
            rest /= n;
        }
        coords
    }

    pub fn cell_at(&self, coords: &[usize]) -> Result<CellIndex> {
        if coords.len() != self.dim {
            return Err(Error::param("coordinate count does not match grid dimension"));
        }
        let n = self.cells_per_axis;
        let mut id = 0u64;
        for &c in coords {
            if c >= n {
                return Err(Error::param(format!("cell coordinate {c} exceeds {}", n - 1)));
            }
            id = id * n as u64 + c as u64;
        }
        Ok(CellIndex(id))
    }

    /// Lower corner of a cell.
    pub fn cell_corner(&self, cell: CellIndex) -> Vec<f64> {
        self.coords(cell)
            .into_iter()
            .enumerate()
            .map(|(axis, c)| self.lower(axis) + c as f64 * self.h)
            .collect()
    }

    pub fn cell_center(&self, cell: CellIndex) -> Vec<f64> {
        let half = 0.5 * self.h;
        let mut p = self.cell_corner(cell);
        p.iter_mut().for_each(|x| *x += half);
        p
    }
}

/// Grid of size `h` with shifts `shifts` whose half-width is the smallest
/// positive multiple of `h` such that `[-data_bound, data_bound]^m` fits in
/// the domain. `enclosing_half_width` bounds the data only.
pub fn build_grid(
    dim: usize,
    h: f64,
    enclosing_half_width: f64,
    shifts: &[f64],
    data_bound: f64,
) -> Result<GridSpec> {
    check_cell_size(h)?;
    if shifts.len() != dim {
        return Err(Error::param(format!(
            "expected {dim} shifts, got {}",
            shifts.len()
        )));
    }
    check_shifts(h, shifts)?;
    if !(data_bound.is_finite() && data_bound >= 0.0) {
        return Err(Error::param(format!("invalid data bound {data_bound}")));
    }
    if data_bound >= enclosing_half_width {
        return Err(Error::param(format!(
            "data bound {data_bound} is not inside the enclosing box of half-width {enclosing_half_width}"
        )));
    }
    // [-B, B] inside [-L + d, L + d] needs L >= B + d.
    let max_shift = shifts.iter().copied().fold(0.0, f64::max);
    let ratio = (data_bound + max_shift) / h;
    let k = (ratio - BOUNDARY_SNAP * ratio.max(1.0)).ceil().max(1.0);
    GridSpec::new(dim, h, k * h, shifts.to_vec())
}

/// Mean of the cell centers.
pub fn barycenter(cells: &[CellIndex], grid: &GridSpec) -> Result<Vec<f64>> {
    if cells.is_empty() {
        return Err(Error::Empty("barycenter of an empty cell set"));
    }
    let mut sum = vec![0.0; grid.dim()];
    for &c in cells {
        for (s, x) in sum.iter_mut().zip(grid.cell_center(c)) {
            *s += x;
        }
    }
    let n = cells.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(sum)
}
