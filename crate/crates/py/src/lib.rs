//! Python bindings for `mgstd_core`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mgstd_core as core;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(mgstd, MgstdError, PyException);

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::InvalidParameter(m) => PyValueError::new_err(m),
        other => MgstdError::new_err(other.to_string()),
    }
}

#[pyclass(name = "GridSpec", module = "mgstd", frozen, from_py_object)]
#[derive(Clone)]
struct PyGrid(core::GridSpec);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (dim, h, half_width, shifts=None))]
    fn new(dim: usize, h: f64, half_width: f64, shifts: Option<Vec<f64>>) -> PyResult<Self> {
        let shifts = shifts.unwrap_or_else(|| vec![0.0; dim]);
        core::GridSpec::new(dim, h, half_width, shifts).map(PyGrid).map_err(err)
    }

    /// Smallest grid of size `h` and shift `shifts` covering `data`.
    #[staticmethod]
    #[pyo3(signature = (data, h, shifts=None))]
    fn covering(data: &PyDataset, h: f64, shifts: Option<Vec<f64>>) -> PyResult<Self> {
        let d = &data.0;
        let shifts = shifts.unwrap_or_else(|| vec![0.0; d.dim()]);
        core::build_grid(d.dim(), h, f64::INFINITY, &shifts, d.max_abs())
            .map(PyGrid)
            .map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.cell_size()
    }

    #[getter]
    fn half_width(&self) -> f64 {
        self.0.half_width()
    }

    #[getter]
    fn shifts(&self) -> Vec<f64> {
        self.0.shifts().to_vec()
    }

    #[getter]
    fn cells_per_axis(&self) -> usize {
        self.0.cells_per_axis()
    }

    fn locate(&self, point: Vec<f64>) -> PyResult<u64> {
        self.0.locate(&point).map(|c| c.0).map_err(err)
    }

    fn coords(&self, cell: u64) -> Vec<usize> {
        self.0.coords(core::CellIndex(cell))
    }

    fn cell_center(&self, cell: u64) -> Vec<f64> {
        self.0.cell_center(core::CellIndex(cell))
    }

    fn __repr__(&self) -> String {
        format!(
            "GridSpec(dim={}, h={}, half_width={}, shifts={:?})",
            self.0.dim(),
            self.0.cell_size(),
            self.0.half_width(),
            self.0.shifts()
        )
    }
}

#[pyclass(name = "Dataset", module = "mgstd", frozen)]
struct PyDataset(core::Dataset);

#[pymethods]
impl PyDataset {
    /// `series` is a list of series, each a list of points.
    #[new]
    #[pyo3(signature = (dim, series, ids=None))]
    fn new(dim: usize, series: Vec<Vec<Vec<f64>>>, ids: Option<Vec<String>>) -> PyResult<Self> {
        let ids = match ids {
            Some(ids) if ids.len() != series.len() => {
                return Err(PyValueError::new_err(format!(
                    "{} ids for {} series",
                    ids.len(),
                    series.len()
                )))
            }
            Some(ids) => ids,
            None => (0..series.len()).map(|k| k.to_string()).collect(),
        };
        core::Dataset::from_series(dim, ids.into_iter().zip(series))
            .map(PyDataset)
            .map_err(err)
    }

    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        core::read_csv(&path).map(PyDataset).map_err(err)
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let f = std::fs::File::create(&path).map_err(|e| err(e.into()))?;
        core::write_csv(&self.0, std::io::BufWriter::new(f)).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn series_count(&self) -> usize {
        self.0.series_count()
    }

    #[getter]
    fn point_count(&self) -> usize {
        self.0.point_count()
    }

    #[getter]
    fn pair_count(&self) -> usize {
        self.0.pair_count()
    }

    fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    fn series(&self, k: usize) -> PyResult<Vec<Vec<f64>>> {
        if k >= self.0.series_count() {
            return Err(PyValueError::new_err(format!("no series {k}")));
        }
        Ok(self.0.series(k).points().map(<[f64]>::to_vec).collect())
    }

    fn standardize(&self) -> PyResult<Self> {
        core::standardize(&self.0).map(PyDataset).map_err(err)
    }

    fn pca_project(&self, components: usize) -> PyResult<Self> {
        core::pca_project(&self.0, components).map(PyDataset).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.series_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(dim={}, series={}, points={})",
            self.0.dim(),
            self.0.series_count(),
            self.0.point_count()
        )
    }
}

#[pyclass(name = "TransitionCounts", module = "mgstd", frozen)]
struct PyCounts(core::TransitionCounts);

#[pymethods]
impl PyCounts {
    /// `{cell: nu}` over occupied cells.
    fn occupancy(&self) -> BTreeMap<u64, u64> {
        self.0.occupied().map(|(c, n)| (c.0, n)).collect()
    }

    /// `{(i, j): mu}` over observed transitions.
    fn flows(&self) -> BTreeMap<(u64, u64), u64> {
        self.0.flows().map(|((i, j), n)| ((i.0, j.0), n)).collect()
    }

    fn probability(&self, i: u64, j: u64) -> PyResult<f64> {
        core::transition_probability(&self.0, core::CellIndex(i), core::CellIndex(j)).map_err(err)
    }

    #[getter]
    fn total_points(&self) -> u64 {
        self.0.total_points()
    }

    #[getter]
    fn total_pairs(&self) -> u64 {
        self.0.total_pairs()
    }
}

#[pyfunction]
fn count_transitions(py: Python<'_>, data: &PyDataset, grid: &PyGrid) -> PyResult<PyCounts> {
    let (d, g) = (&data.0, &grid.0);
    py.detach(|| core::count_transitions(d, g))
        .map(PyCounts)
        .map_err(err)
}

/// Morse sets in `MSk` order with their barycenters and the reduced order.
#[pyclass(name = "MorseGraph", module = "mgstd", frozen, get_all)]
struct PyMorse {
    names: Vec<String>,
    sets: Vec<Vec<u64>>,
    barycenters: Vec<Vec<f64>>,
    order: Vec<(usize, usize)>,
    edges: Vec<(usize, usize)>,
    minimal: Vec<usize>,
    dot: String,
}

#[pymethods]
impl PyMorse {
    fn __len__(&self) -> usize {
        self.sets.len()
    }

    fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(Vec::len).collect()
    }

    fn __repr__(&self) -> String {
        format!("MorseGraph(sets={:?}, edges={:?})", self.sizes(), self.edges)
    }
}

fn morse_view(md: &core::MorseDecomposition, grid: &core::GridSpec) -> core::Result<PyMorse> {
    let mg = core::MorseGraph::new(md, grid)?;
    Ok(PyMorse {
        names: mg.nodes.iter().map(|n| n.name.clone()).collect(),
        sets: md.sets().iter().map(|s| s.iter().map(|c| c.0).collect()).collect(),
        barycenters: mg.nodes.iter().map(|n| n.barycenter.clone()).collect(),
        order: md.order().iter().copied().collect(),
        edges: md.reduced_edges().iter().copied().collect(),
        minimal: md.minimal_sets(),
        dot: core::export_dot(&mg),
    })
}

#[pyfunction]
#[pyo3(signature = (data, grid, rho, mu_star, min_size=1))]
fn morse_graph(
    py: Python<'_>,
    data: &PyDataset,
    grid: &PyGrid,
    rho: f64,
    mu_star: u64,
    min_size: usize,
) -> PyResult<PyMorse> {
    let (d, g) = (&data.0, &grid.0);
    py.detach(|| {
        let tc = core::count_transitions(d, g)?;
        let map = core::build_multivalued_map(&tc, rho, mu_star)?;
        let md = core::morse_decomposition(&map).with_min_size(min_size);
        morse_view(&md, g)
    })
    .map_err(err)
}

/// `(mu_star, [(mu, ratio), ...])` on one grid.
#[pyfunction]
#[pyo3(signature = (data, grid, rho=1.1, ratio_bound=5.0, mu_max=1000))]
fn select_mu_star(
    py: Python<'_>,
    data: &PyDataset,
    grid: &PyGrid,
    rho: f64,
    ratio_bound: f64,
    mu_max: u64,
) -> PyResult<(u64, Vec<(u64, f64)>)> {
    let (d, g) = (&data.0, &grid.0);
    py.detach(|| core::select_mu_star(d, g, rho, ratio_bound, mu_max))
        .map(|s| (s.mu_star, s.curve))
        .map_err(err)
}

/// `(chosen, mean, [(shift, mu_star or None), ...])` over the shift sweep.
#[pyfunction]
#[pyo3(signature = (data, h, rho=1.1, ratio_bound=5.0, mu_max=1000, shift_increment=0.01))]
#[allow(clippy::type_complexity)]
fn select_mu_star_averaged(
    py: Python<'_>,
    data: &PyDataset,
    h: f64,
    rho: f64,
    ratio_bound: f64,
    mu_max: u64,
    shift_increment: f64,
) -> PyResult<(u64, f64, Vec<(Vec<f64>, Option<u64>)>)> {
    let d = &data.0;
    let sweep = core::SweepSettings {
        shift_increment,
        enclosing_half_width: None,
    };
    py.detach(|| core::select_mu_star_averaged(d, h, rho, ratio_bound, mu_max, &sweep))
        .map(|a| (a.chosen, a.mean, a.per_shift))
        .map_err(err)
}

fn parse_interp(s: &str) -> PyResult<core::Interpolation> {
    match s {
        "source-major" => Ok(core::Interpolation::SourceMajor),
        "target-major" => Ok(core::Interpolation::TargetMajor),
        _ => Err(PyValueError::new_err(format!("unknown interpolation {s:?}"))),
    }
}

fn parse_arrows(s: &str) -> PyResult<core::ArrowSet> {
    match s {
        "reduced" => Ok(core::ArrowSet::Reduced),
        "full-order" => Ok(core::ArrowSet::FullOrder),
        _ => Err(PyValueError::new_err(format!("unknown arrow set {s:?}"))),
    }
}

/// Averaged field as `[(center, vector, support), ...]` plus the canonical grid.
#[pyfunction]
#[pyo3(signature = (data, h, rho, mu_star, shift_increment=0.01, interp="source-major", arrows="reduced"))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn run_mgstd(
    py: Python<'_>,
    data: &PyDataset,
    h: f64,
    rho: f64,
    mu_star: u64,
    shift_increment: f64,
    interp: &str,
    arrows: &str,
) -> PyResult<(Vec<(Vec<f64>, Vec<f64>, usize)>, PyGrid)> {
    let mut params = core::MgstdParams::new(h, rho, mu_star);
    params.shift_increment = shift_increment;
    params.interpolation = parse_interp(interp)?;
    params.arrows = parse_arrows(arrows)?;
    let d = &data.0;
    let run = py.detach(|| core::run_mgstd(d, &params)).map_err(err)?;
    let rows = run
        .field
        .rows()
        .map(|(c, v, n)| (c, v.to_vec(), n))
        .collect();
    Ok((rows, PyGrid(run.field.grid)))
}

/// Preset benchmark data from a builtin model (`dw1d` or `saddle2d`).
#[pyfunction]
#[pyo3(signature = (model, preset, seed=0, n_series=None, sigma2=None))]
fn simulate(
    py: Python<'_>,
    model: &str,
    preset: &str,
    seed: u64,
    n_series: Option<usize>,
    sigma2: Option<f64>,
) -> PyResult<PyDataset> {
    let model = core::BuiltinModel::parse(model).map_err(err)?;
    let preset = core::Preset::parse(preset).map_err(err)?;
    let mut spec = preset.spec(model, seed);
    if let Some(n) = n_series {
        spec.config.n_series = n;
    }
    if let Some(s) = sigma2 {
        spec.sigma2 = s;
    }
    py.detach(|| preset.generate(&spec)).map(PyDataset).map_err(err)
}

#[pymodule]
fn mgstd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MgstdError", m.py().get_type::<MgstdError>())?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyCounts>()?;
    m.add_class::<PyMorse>()?;
    m.add_function(wrap_pyfunction!(count_transitions, m)?)?;
    m.add_function(wrap_pyfunction!(morse_graph, m)?)?;
    m.add_function(wrap_pyfunction!(select_mu_star, m)?)?;
    m.add_function(wrap_pyfunction!(select_mu_star_averaged, m)?)?;
    m.add_function(wrap_pyfunction!(run_mgstd, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
