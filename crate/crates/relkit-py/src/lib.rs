//! Python bindings: grids, box sets, box relations, the block/omega/radius
//! operations, the finite-space oracle, and the scenario runner.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use relkit_core::finite;
use relkit_core::grid;
use relkit_core::relation;
use relkit_core::{attractor, persistence, runner, Expr, Interval, RunOptions};

fn err(e: relkit_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_rect(axes: &[(f64, f64)]) -> Vec<Interval> {
    axes.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect()
}

#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: Arc<grid::Grid>,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(bounds: Vec<(f64, f64)>, divisions: Vec<usize>) -> PyResult<Self> {
        Ok(PyGrid {
            inner: grid::Grid::new(bounds, divisions).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn divisions(&self) -> Vec<usize> {
        self.inner.divisions().to_vec()
    }

    #[getter]
    fn widths(&self) -> Vec<f64> {
        self.inner.widths().to_vec()
    }

    #[getter]
    fn bounds(&self) -> Vec<(f64, f64)> {
        self.inner.bounds().iter().map(|iv| (iv.lo, iv.hi)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Boxes whose closed box meets the closed rectangle (outer cover).
    fn cover(&self, rect: Vec<(f64, f64)>) -> PyResult<PyBoxSet> {
        Ok(PyBoxSet {
            inner: self.inner.cover(&to_rect(&rect)).map_err(err)?,
        })
    }

    fn full(&self) -> PyBoxSet {
        PyBoxSet {
            inner: self.inner.full(),
        }
    }

    fn empty_set(&self) -> PyBoxSet {
        PyBoxSet {
            inner: self.inner.empty_set(),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(bounds={:?}, divisions={:?})",
            self.bounds(),
            self.divisions()
        )
    }
}

#[pyclass(name = "BoxSet", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBoxSet {
    inner: grid::BoxSet,
}

#[pymethods]
impl PyBoxSet {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    fn is_full(&self) -> bool {
        self.inner.is_full()
    }

    /// Sorted multi-indices of the member boxes.
    fn boxes(&self) -> Vec<Vec<usize>> {
        self.inner.multi_indices()
    }

    fn bounding_rect(&self) -> Option<Vec<(f64, f64)>> {
        self.inner
            .bounding_rect()
            .map(|r| r.iter().map(|iv| (iv.lo, iv.hi)).collect())
    }

    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    fn interior(&self) -> PyBoxSet {
        PyBoxSet {
            inner: self.inner.interior(),
        }
    }

    fn closure_of_complement(&self) -> PyBoxSet {
        PyBoxSet {
            inner: self.inner.closure_of_complement(),
        }
    }

    fn union(&self, other: &PyBoxSet) -> PyResult<PyBoxSet> {
        Ok(PyBoxSet {
            inner: self.inner.union(&other.inner).map_err(err)?,
        })
    }

    fn intersection(&self, other: &PyBoxSet) -> PyResult<PyBoxSet> {
        Ok(PyBoxSet {
            inner: self.inner.intersection(&other.inner).map_err(err)?,
        })
    }

    fn is_subset(&self, other: &PyBoxSet) -> bool {
        self.inner.is_subset(&other.inner)
    }

    /// Minimum sup-metric distance between the denoted closed sets.
    fn distance(&self, other: &PyBoxSet) -> PyResult<f64> {
        self.inner.distance(&other.inner).map_err(err)
    }

    fn __eq__(&self, other: &PyBoxSet) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("BoxSet({} boxes)", self.inner.len())
    }
}

#[pyclass(name = "Relation", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRelation {
    inner: relation::BoxRelation,
}

#[pymethods]
impl PyRelation {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    fn image(&self, set: &PyBoxSet) -> PyResult<PyBoxSet> {
        Ok(PyBoxSet {
            inner: self.inner.image(&set.inner).map_err(err)?,
        })
    }

    fn transpose(&self) -> PyRelation {
        PyRelation {
            inner: self.inner.transpose(),
        }
    }

    fn compose(&self, inner: &PyRelation) -> PyResult<PyRelation> {
        Ok(PyRelation {
            inner: self.inner.compose(&inner.inner).map_err(err)?,
        })
    }

    fn iterate(&self, n: usize) -> PyResult<PyRelation> {
        Ok(PyRelation {
            inner: self.inner.iterate(n).map_err(err)?,
        })
    }

    fn bloat(&self, eps: f64) -> PyResult<PyRelation> {
        Ok(PyRelation {
            inner: self.inner.bloat(eps).map_err(err)?,
        })
    }

    fn union(&self, other: &PyRelation) -> PyResult<PyRelation> {
        Ok(PyRelation {
            inner: self.inner.union(&other.inner).map_err(err)?,
        })
    }

    fn is_subrelation(&self, other: &PyRelation) -> bool {
        self.inner.is_subrelation(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!("Relation({} box pairs)", self.inner.len())
    }
}

/// Rasterize the graph of a map given by one expression per component, e.g.
/// `rasterize_map(grid, ["(x - 1) * 0.5"])`.
#[pyfunction]
#[pyo3(signature = (grid, exprs, params = None))]
fn rasterize_map(
    grid: &PyGrid,
    exprs: Vec<String>,
    params: Option<BTreeMap<String, f64>>,
) -> PyResult<PyRelation> {
    let parsed: Vec<Expr> = exprs
        .iter()
        .map(|e| Expr::parse(e, grid.inner.dim()))
        .collect::<relkit_core::Result<_>>()
        .map_err(err)?;
    let mut spec = relation::RelationSpec::map(parsed);
    if let Some(p) = params {
        spec.params.extend(p);
    }
    Ok(PyRelation {
        inner: spec.rasterize(&grid.inner).map_err(err)?,
    })
}

/// Rasterize a union of rectangle products, each given as
/// `(source_rect, target_rect)` with one `(lo, hi)` pair per axis.
#[pyfunction]
fn rasterize_boxes(
    grid: &PyGrid,
    pairs: Vec<(Vec<(f64, f64)>, Vec<(f64, f64)>)>,
) -> PyResult<PyRelation> {
    let rects = pairs
        .iter()
        .map(|(s, t)| (to_rect(s), to_rect(t)))
        .collect();
    let spec = relation::RelationSpec::new(relation::SpecKind::BoxUnion(rects));
    Ok(PyRelation {
        inner: spec.rasterize(&grid.inner).map_err(err)?,
    })
}

#[pyfunction]
fn identity_relation(grid: &PyGrid) -> PyRelation {
    PyRelation {
        inner: relation::BoxRelation::identity(&grid.inner),
    }
}

#[pyfunction]
fn empty_relation(grid: &PyGrid) -> PyRelation {
    PyRelation {
        inner: relation::BoxRelation::empty(&grid.inner),
    }
}

/// Certify `rel ∩ (B x closure-of-complement(B)) = ∅`. Returns
/// `(is_block, witnesses)` with witnesses as multi-index pairs.
#[pyfunction]
fn is_attractor_block(
    rel: &PyRelation,
    block: &PyBoxSet,
) -> PyResult<(bool, Vec<(Vec<usize>, Vec<usize>)>)> {
    let v = attractor::is_attractor_block(&rel.inner, &block.inner).map_err(err)?;
    let g = block.inner.grid();
    Ok((
        v.is_block,
        v.witnesses
            .iter()
            .map(|&(p, q)| (g.to_multi(p), g.to_multi(q)))
            .collect(),
    ))
}

/// Omega limit; returns `(limit, transient, stabilized)`.
#[pyfunction]
fn omega_limit(rel: &PyRelation, set: &PyBoxSet) -> PyResult<(PyBoxSet, usize, bool)> {
    let res = attractor::omega_limit(&rel.inner, &set.inner).map_err(err)?;
    Ok((PyBoxSet { inner: res.limit }, res.transient, res.stabilized))
}

#[pyfunction]
fn attractor_from_block(rel: &PyRelation, block: &PyBoxSet) -> PyResult<PyBoxSet> {
    Ok(PyBoxSet {
        inner: attractor::attractor_from_block(&rel.inner, &block.inner).map_err(err)?,
    })
}

/// Search for a certified block inside the neighborhood; None when growth
/// escapes it.
#[pyfunction]
fn find_attractor_block(rel: &PyRelation, neighborhood: &PyBoxSet) -> PyResult<Option<PyBoxSet>> {
    Ok(attractor::find_attractor_block(&rel.inner, &neighborhood.inner)
        .map_err(err)?
        .found()
        .map(|inner| PyBoxSet { inner }))
}

#[pyfunction]
fn is_invariant(rel: &PyRelation, set: &PyBoxSet) -> PyResult<bool> {
    attractor::is_invariant(&rel.inner, &set.inner).map_err(err)
}

#[pyfunction]
fn separation_radius(rel: &PyRelation, block: &PyBoxSet) -> PyResult<f64> {
    persistence::separation_radius(&rel.inner, &block.inner).map_err(err)
}

#[pyfunction]
fn admits(rel: &PyRelation, block: &PyBoxSet) -> PyResult<bool> {
    Ok(persistence::admits(&rel.inner, &block.inner)
        .map_err(err)?
        .is_block)
}

/// Full persistence report as a dict.
#[pyfunction]
fn perturbation_report<'py>(
    py: Python<'py>,
    base: &PyRelation,
    block: &PyBoxSet,
    perturbed: &PyRelation,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = persistence::perturbation_report(&base.inner, &block.inner, &perturbed.inner)
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("admitted", rep.admitted)?;
    out.set_item("radius", rep.radius)?;
    out.set_item("witness_count", rep.witnesses.len())?;
    out.set_item(
        "perturbed_attractor",
        rep.perturbed_attractor.map(|inner| PyBoxSet { inner }),
    )?;
    out.set_item("contained", rep.contained)?;
    Ok(out)
}

/// Sweep one family parameter; rows come back as dicts in input order.
#[pyfunction]
#[pyo3(signature = (grid, exprs, param, block, values, params = None))]
fn parameter_sweep<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    exprs: Vec<String>,
    param: String,
    block: &PyBoxSet,
    values: Vec<f64>,
    params: Option<BTreeMap<String, f64>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let parsed: Vec<Expr> = exprs
        .iter()
        .map(|e| Expr::parse(e, grid.inner.dim()))
        .collect::<relkit_core::Result<_>>()
        .map_err(err)?;
    let mut spec = relation::RelationSpec::map(parsed);
    if let Some(p) = params {
        spec.params.extend(p);
    }
    let rows = persistence::parameter_sweep(&spec, &param, &block.inner, &values).map_err(err)?;
    rows.into_iter()
        .map(|row| {
            let d = PyDict::new(py);
            d.set_item("value", row.value)?;
            d.set_item("admitted", row.admitted)?;
            d.set_item("radius", row.radius)?;
            d.set_item("boxes", row.enclosure.len())?;
            d.set_item(
                "bounding_rect",
                row.enclosure
                    .bounding_rect()
                    .map(|r| r.iter().map(|iv| (iv.lo, iv.hi)).collect::<Vec<_>>()),
            )?;
            Ok(d)
        })
        .collect()
}

#[pyclass(name = "FiniteRelation", frozen)]
struct PyFiniteRelation {
    inner: finite::FiniteRelation,
}

#[pymethods]
impl PyFiniteRelation {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(PyFiniteRelation {
            inner: finite::FiniteRelation::new(n, edges).map_err(err)?,
        })
    }

    #[staticmethod]
    fn random(n: usize, density: f64, seed: u64) -> PyResult<Self> {
        Ok(PyFiniteRelation {
            inner: finite::FiniteRelation::random(n, density, seed).map_err(err)?,
        })
    }

    #[getter]
    fn states(&self) -> usize {
        self.inner.states()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges()
    }

    fn image(&self, set: Vec<usize>) -> PyResult<Vec<usize>> {
        let s = set.into_iter().collect();
        Ok(self.inner.image(&s).map_err(err)?.into_iter().collect())
    }

    fn omega(&self, set: Vec<usize>) -> PyResult<Vec<usize>> {
        let s = set.into_iter().collect();
        Ok(self.inner.omega(&s).map_err(err)?.into_iter().collect())
    }

    fn is_attractor_block(&self, set: Vec<usize>) -> PyResult<bool> {
        self.inner
            .is_attractor_block(&set.into_iter().collect())
            .map_err(err)
    }

    fn is_attractor(&self, set: Vec<usize>) -> PyResult<bool> {
        self.inner
            .is_attractor(&set.into_iter().collect())
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "FiniteRelation({} states, {} edges)",
            self.inner.states(),
            self.inner.edge_count()
        )
    }
}

/// Run the finite-space theorem suite; `mutate="drop-invariance"` corrupts
/// the omega computation to confirm the suite catches it.
#[pyfunction]
#[pyo3(signature = (n_max = 6, trials = 500, seed = 0, mutate = None))]
fn theorem_suite<'py>(
    py: Python<'py>,
    n_max: usize,
    trials: usize,
    seed: u64,
    mutate: Option<String>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut config = finite::SuiteConfig::new(n_max, trials, seed);
    config.mutation = match mutate.as_deref() {
        None => None,
        Some("drop-invariance") => Some(finite::Mutation::DropInvariance),
        Some(other) => return Err(PyValueError::new_err(format!("unknown mutation `{other}`"))),
    };
    let report = finite::theorem_suite(&config).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("trials", report.trials)?;
    out.set_item("checks", report.checks.to_vec())?;
    out.set_item("failures", report.failures.len())?;
    out.set_item(
        "first_counterexample",
        report
            .first_counterexample()
            .map(|f| format!("trial {} {}: {}", f.trial, f.check, f.detail)),
    )?;
    Ok(out)
}

/// Run a scenario file; returns `(report_path, failed_expectations)`.
#[pyfunction]
#[pyo3(signature = (path, out_dir, seed = 0))]
fn run_scenario(path: PathBuf, out_dir: PathBuf, seed: u64) -> PyResult<(String, usize)> {
    let opts = RunOptions { out_dir, seed };
    let report = runner::run_scenario_file(&path, &opts).map_err(err)?;
    let report_path = opts
        .out_dir
        .join(&report.scenario)
        .join("report.txt")
        .display()
        .to_string();
    Ok((report_path, report.failed_expectations()))
}

#[pymodule]
fn relkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyBoxSet>()?;
    m.add_class::<PyRelation>()?;
    m.add_class::<PyFiniteRelation>()?;
    m.add_function(wrap_pyfunction!(rasterize_map, m)?)?;
    m.add_function(wrap_pyfunction!(rasterize_boxes, m)?)?;
    m.add_function(wrap_pyfunction!(identity_relation, m)?)?;
    m.add_function(wrap_pyfunction!(empty_relation, m)?)?;
    m.add_function(wrap_pyfunction!(is_attractor_block, m)?)?;
    m.add_function(wrap_pyfunction!(omega_limit, m)?)?;
    m.add_function(wrap_pyfunction!(attractor_from_block, m)?)?;
    m.add_function(wrap_pyfunction!(find_attractor_block, m)?)?;
    m.add_function(wrap_pyfunction!(is_invariant, m)?)?;
    m.add_function(wrap_pyfunction!(separation_radius, m)?)?;
    m.add_function(wrap_pyfunction!(admits, m)?)?;
    m.add_function(wrap_pyfunction!(perturbation_report, m)?)?;
    m.add_function(wrap_pyfunction!(parameter_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_suite, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add("__version__", relkit_core::report::VERSION)?;
    Ok(())
}
