//! Shift-averaged vector fields summarizing the gradient-like connections of
//! Morse graphs.
//!
//! For every grid shift on a lattice, each arrow `MS_i -> MS_j` of the Morse
//! graph becomes a vector of length `(#MS_i + #MS_j) / 2` (in cell units)
//! pointing from the barycenter of `MS_i` toward that of `MS_j`, anchored at
//! an internal division point of the two barycenters. Vectors are averaged
//! per shifted cell, then the per-shift averages are averaged again over the
//! cells of the unshifted grid.

use std::collections::BTreeMap;
use std::io::Write;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::{barycenter, build_grid, CellIndex, GridSpec};
use crate::graph::{morse_decomposition, MorseDecomposition};
use crate::transitions::{build_multivalued_map, count_transitions};

/// Where an arrow is anchored on the segment between two barycenters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// `q = p_i + s_i / (s_i + s_j) * (p_j - p_i)`.
    #[default]
    SourceMajor,
    /// `q = p_i + s_j / (s_i + s_j) * (p_j - p_i)`.
    TargetMajor,
}

/// Which relations of the Morse graph become arrows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrowSet {
    /// Edges of the transitive reduction.
    #[default]
    Reduced,
    /// Every pair of the partial order.
    FullOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeVector {
    pub center: Vec<f64>,
    /// In grid-cell units.
    pub vector: Vec<f64>,
    pub source: usize,
    pub target: usize,
    pub source_size: usize,
    pub target_size: usize,
}

pub fn edge_vectors(
    md: &MorseDecomposition,
    grid: &GridSpec,
    interpolation: Interpolation,
    arrows: ArrowSet,
) -> Result<Vec<EdgeVector>> {
    let centers = md
        .sets()
        .iter()
        .map(|cells| barycenter(cells, grid))
        .collect::<Result<Vec<_>>>()?;
    let relation = match arrows {
        ArrowSet::Reduced => md.reduced_edges(),
        ArrowSet::FullOrder => md.order(),
    };
    let mut out = Vec::with_capacity(relation.len());
    for &(i, j) in relation {
        let (pi, pj) = (&centers[i], &centers[j]);
        let diff: Vec<f64> = pj.iter().zip(pi).map(|(b, a)| b - a).collect();
        let dist = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
        if dist == 0.0 {
            warn!("MS{i} and MS{j} share a barycenter; arrow skipped");
            continue;
        }
        let (si, sj) = (md.size(i), md.size(j));
        let total = (si + sj) as f64;
        let length = total / 2.0;
        let t = match interpolation {
            Interpolation::SourceMajor => si as f64 / total,
            Interpolation::TargetMajor => sj as f64 / total,
        };
        out.push(EdgeVector {
            center: pi.iter().zip(&diff).map(|(a, d)| a + t * d).collect(),
            vector: diff.iter().map(|d| d / dist * length).collect(),
            source: i,
            target: j,
            source_size: si,
            target_size: sj,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldCell {
    pub vector: Vec<f64>,
    pub support: usize,
}

/// Vectors attached to grid cells, with how many inputs each average used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorField {
    pub grid: GridSpec,
    pub cells: BTreeMap<CellIndex, FieldCell>,
}

impl VectorField {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    /// `(cell center, vector, support)` rows in cell order.
    pub fn rows(&self) -> impl Iterator<Item = (Vec<f64>, &[f64], usize)> + '_ {
        self.cells
            .iter()
            .map(|(&c, f)| (self.grid.cell_center(c), f.vector.as_slice(), f.support))
    }

    /// Quiver table: cell center, averaged vector (grid-cell units) and
    /// support, one row per supported cell.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        let m = self.grid.dim();
        let names: Vec<String> = (0..m).map(axis_name).collect();
        let header: Vec<String> = names
            .iter()
            .map(|n| format!("q{n}"))
            .chain(names.iter().map(|n| format!("w{n}")))
            .chain(std::iter::once("support".to_string()))
            .collect();
        writeln!(w, "{}", header.join("\t"))?;
        for (center, vector, support) in self.rows() {
            let cols: Vec<String> = center
                .iter()
                .chain(vector)
                .map(|x| x.to_string())
                .chain(std::iter::once(support.to_string()))
                .collect();
            writeln!(w, "{}", cols.join("\t"))?;
        }
        Ok(())
    }
}

fn axis_name(axis: usize) -> String {
    match axis {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        k => (k + 1).to_string(),
    }
}

#[derive(Default)]
struct Accum {
    sum: Vec<f64>,
    count: usize,
}

impl Accum {
    fn add(&mut self, v: &[f64]) {
        if self.sum.is_empty() {
            self.sum = vec![0.0; v.len()];
        }
        self.sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        self.count += 1;
    }

    fn finish(self) -> FieldCell {
        let n = self.count as f64;
        FieldCell {
            vector: self.sum.into_iter().map(|s| s / n).collect(),
            support: self.count,
        }
    }
}

/// Mean of the vectors whose anchor lies in each cell of `grid`.
pub fn shift_field(vectors: &[EdgeVector], grid: &GridSpec) -> VectorField {
    let mut acc: BTreeMap<CellIndex, Accum> = BTreeMap::new();
    for v in vectors {
        match grid.locate(&v.center) {
            Ok(cell) => acc.entry(cell).or_default().add(&v.vector),
            Err(_) => warn!("arrow anchor {:?} outside the grid; skipped", v.center),
        }
    }
    VectorField {
        grid: grid.clone(),
        cells: acc.into_iter().map(|(c, a)| (c, a.finish())).collect(),
    }
}

/// Averages per-shift fields over the cells of the unshifted grid, placing
/// each shifted cell's vector at that cell's center.
pub fn canonical_average(fields: &[VectorField]) -> Result<VectorField> {
    let first = fields.first().ok_or(Error::Empty("no per-shift fields"))?;
    let (m, h) = (first.grid.dim(), first.grid.cell_size());
    let mut half_width = 0.0f64;
    for f in fields {
        if f.grid.dim() != m || f.grid.cell_size() != h {
            return Err(Error::param("per-shift fields must share dimension and cell size"));
        }
        // shifted centers can poke out past L by less than h
        let pad = if f.grid.shifts().iter().any(|&d| d > 0.0) { h } else { 0.0 };
        half_width = half_width.max(f.grid.half_width() + pad);
    }
    let canonical = GridSpec::canonical(m, h, half_width)?;
    let mut acc: BTreeMap<CellIndex, Accum> = BTreeMap::new();
    for f in fields {
        for (center, vector, _) in f.rows() {
            let cell = canonical.locate(&center)?;
            acc.entry(cell).or_default().add(vector);
        }
    }
    Ok(VectorField {
        grid: canonical,
        cells: acc.into_iter().map(|(c, a)| (c, a.finish())).collect(),
    })
}

/// Shifts `(k_1 inc, ..., k_m inc)` with every component below `h`, in
/// lexicographic order.
pub fn shift_lattice(dim: usize, h: f64, increment: f64) -> Result<Vec<Vec<f64>>> {
    if !(increment > 0.0 && increment <= h) {
        return Err(Error::param(format!(
            "shift increment {increment} must lie in (0, {h}]"
        )));
    }
    let per_axis = ((h / increment) * (1.0 - 1e-9)).ceil() as usize;
    let values: Vec<f64> = (0..per_axis).map(|k| k as f64 * increment).collect();
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgstdParams {
    pub h: f64,
    pub rho: f64,
    pub mu_star: u64,
    pub shift_increment: f64,
    /// Sanity cap on the data extent; `None` accepts any extent.
    pub enclosing_half_width: Option<f64>,
    pub interpolation: Interpolation,
    pub arrows: ArrowSet,
}

impl MgstdParams {
    pub fn new(h: f64, rho: f64, mu_star: u64) -> Self {
        MgstdParams {
            h,
            rho,
            mu_star,
            shift_increment: 0.01,
            enclosing_half_width: None,
            interpolation: Interpolation::default(),
            arrows: ArrowSet::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftRun {
    pub grid: GridSpec,
    pub decomposition: MorseDecomposition,
    pub vectors: Vec<EdgeVector>,
    pub field: VectorField,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MgstdRun {
    pub field: VectorField,
    pub shifts: Vec<ShiftRun>,
}

pub(crate) fn enclosing(d: &Dataset, cap: Option<f64>) -> Result<(f64, f64)> {
    let bound = d.max_abs();
    let cap = cap.unwrap_or(f64::INFINITY);
    if bound >= cap {
        return Err(Error::param(format!(
            "data extends to {bound}, beyond the enclosing half-width {cap}"
        )));
    }
    Ok((bound, cap))
}

/// Morse decomposition and arrows for one grid.
pub fn run_shift(d: &Dataset, grid: GridSpec, params: &MgstdParams) -> Result<ShiftRun> {
    let counts = count_transitions(d, &grid)?;
    let map = build_multivalued_map(&counts, params.rho, params.mu_star)?;
    let decomposition = morse_decomposition(&map);
    let vectors = edge_vectors(&decomposition, &grid, params.interpolation, params.arrows)?;
    let field = shift_field(&vectors, &grid);
    Ok(ShiftRun {
        grid,
        decomposition,
        vectors,
        field,
    })
}

/// Sweeps the shift lattice at a fixed threshold and averages the arrows onto
/// the unshifted grid.
pub fn run_mgstd(d: &Dataset, params: &MgstdParams) -> Result<MgstdRun> {
    if d.is_empty() {
        return Err(Error::Empty("dataset has no series"));
    }
    let (bound, cap) = enclosing(d, params.enclosing_half_width)?;
    let lattice = shift_lattice(d.dim(), params.h, params.shift_increment)?;
    let shifts = lattice
        .par_iter()
        .map(|delta| {
            let grid = build_grid(d.dim(), params.h, cap, delta, bound)?;
            run_shift(d, grid, params)
        })
        .collect::<Result<Vec<_>>>()?;
    let fields: Vec<VectorField> = shifts.iter().map(|s| s.field.clone()).collect();
    Ok(MgstdRun {
        field: canonical_average(&fields)?,
        shifts,
    })
}
