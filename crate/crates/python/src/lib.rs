//! Python bindings. Matrices cross the boundary as lists of rows.

use ndarray::Array2;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use svm_heuristics::data::{load_dataset as load_core, zero_rule_accuracy, Scaler};
use svm_heuristics::eval::{self, run_external_cv, run_semi_supervised, Direction};
use svm_heuristics::heuristics::{self as heur, Aggregate};
use svm_heuristics::kernel::{pairwise_distances, DEFAULT_PAIR_BUDGET};
use svm_heuristics::{
    svm, CvConfig, DataFormat, HeuristicId, HeuristicInput, LabelColumn, SolverConfig, Strategy, SubsampleConfig, SvmParams,
};

create_exception!(svmheur, SvmHeurError, PyValueError, "Raised for any failure inside the library.");

fn py_err(e: svm_heuristics::Error) -> PyErr {
    SvmHeurError::new_err(format!("[{}] {e}", e.code()))
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n) {
        return Err(SvmHeurError::new_err("rows must all have the same length"));
    }
    Array2::from_shape_vec((m, n), rows.into_iter().flatten().collect()).map_err(|e| SvmHeurError::new_err(e.to_string()))
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

fn n_classes_of(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |&l| l + 1)
}

#[pyclass(name = "Dataset", module = "svmheur", frozen)]
struct PyDataset {
    inner: svm_heuristics::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Builds a dataset from feature rows and integer labels `0..n_classes`.
    #[new]
    #[pyo3(signature = (features, labels, name = "dataset".to_string(), class_names = None))]
    fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, name: String, class_names: Option<Vec<String>>) -> PyResult<Self> {
        let names = class_names.unwrap_or_else(|| (0..n_classes_of(&labels)).map(|c| c.to_string()).collect());
        let inner = svm_heuristics::Dataset::new(matrix(features)?, labels, names, name).map_err(py_err)?;
        Ok(PyDataset { inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn n_examples(&self) -> usize {
        self.inner.n_examples()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.inner.class_names.clone()
    }

    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.labels.clone()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.features)
    }

    fn zero_rule(&self) -> f64 {
        zero_rule_accuracy(&self.inner)
    }

    /// Standardized copy of the features.
    fn standardized(&self) -> PyResult<Vec<Vec<f64>>> {
        let scaler = Scaler::fit(self.inner.features.view()).map_err(py_err)?;
        Ok(rows(&scaler.transform(self.inner.features.view()).map_err(py_err)?))
    }

    /// `(C, gamma)` of a heuristic on the standardized dataset.
    #[pyo3(signature = (heuristic, seed = 0))]
    fn estimate(&self, heuristic: &str, seed: u64) -> PyResult<(f64, f64)> {
        let z = matrix(self.standardized()?)?;
        estimate_on(&z, Some(&self.inner.labels), self.inner.n_classes(), heuristic, seed)
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(name={:?}, examples={}, features={}, classes={})",
            self.inner.name,
            self.inner.n_examples(),
            self.inner.n_features(),
            self.inner.n_classes()
        )
    }
}

fn estimate_on(x: &Array2<f64>, labels: Option<&[usize]>, n_classes: usize, heuristic: &str, seed: u64) -> PyResult<(f64, f64)> {
    let id: HeuristicId = heuristic.parse().map_err(py_err)?;
    let input = HeuristicInput::prepare(x.view(), labels, n_classes, DEFAULT_PAIR_BUDGET, seed).map_err(py_err)?;
    let p = heur::estimate(id, &input).map_err(py_err)?;
    Ok((p.c, p.gamma))
}

/// Loads and cleans a CSV or KEEL file.
#[pyfunction]
#[pyo3(signature = (path, format = None, label_column = "last"))]
fn load_dataset(path: &str, format: Option<&str>, label_column: &str) -> PyResult<PyDataset> {
    let p = std::path::Path::new(path);
    let format = match format {
        Some(f) => f.parse::<DataFormat>().map_err(py_err)?,
        None => DataFormat::from_extension(p),
    };
    let label: LabelColumn = label_column.parse().map_err(py_err)?;
    let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    Ok(PyDataset { inner: load_core(p, format, label, name).map_err(py_err)? })
}

/// Names accepted wherever a heuristic is expected.
#[pyfunction]
fn heuristics() -> Vec<&'static str> {
    HeuristicId::ALL.iter().map(|h| h.name()).collect()
}

/// `(C, gamma)` of a heuristic on raw (not re-standardized) feature rows.
#[pyfunction]
#[pyo3(signature = (features, heuristic, labels = None, seed = 0))]
fn estimate(features: Vec<Vec<f64>>, heuristic: &str, labels: Option<Vec<usize>>, seed: u64) -> PyResult<(f64, f64)> {
    let x = matrix(features)?;
    let n_classes = labels.as_deref().map_or(2, n_classes_of);
    estimate_on(&x, labels.as_deref(), n_classes, heuristic, seed)
}

#[pyfunction]
fn covtrace_gamma(features: Vec<Vec<f64>>) -> PyResult<f64> {
    heur::covtrace_gamma(matrix(features)?.view()).map_err(py_err)
}

#[pyfunction]
fn gelbart_gamma(features: Vec<Vec<f64>>) -> PyResult<f64> {
    heur::gelbart_gamma(matrix(features)?.view()).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (features, q, seed = 0))]
fn smola_gamma(features: Vec<Vec<f64>>, q: f64, seed: u64) -> PyResult<f64> {
    let d = pairwise_distances(matrix(features)?.view(), DEFAULT_PAIR_BUDGET, seed).map_err(py_err)?;
    heur::smola_gamma(&d, q).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (features, n_classes, seed = 0))]
fn chapelle_gamma(features: Vec<Vec<f64>>, n_classes: usize, seed: u64) -> PyResult<f64> {
    let d = pairwise_distances(matrix(features)?.view(), DEFAULT_PAIR_BUDGET, seed).map_err(py_err)?;
    heur::chapelle_gamma(&d, n_classes).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (features, median = false))]
fn soares_gamma(features: Vec<Vec<f64>>, median: bool) -> PyResult<f64> {
    let agg = if median { Aggregate::Median } else { Aggregate::Mean };
    heur::soares_gamma(matrix(features)?.view(), agg).map_err(py_err)
}

#[pyfunction]
fn jaakkola_gamma(features: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
    heur::jaakkola_gamma(matrix(features)?.view(), &labels).map_err(py_err)
}

#[pyfunction]
fn chapelle_c(features: Vec<Vec<f64>>, gamma: f64) -> PyResult<f64> {
    heur::chapelle_c(matrix(features)?.view(), gamma).map_err(py_err)
}

/// Close-pair variant of `chapelle_c` over every pair of examples.
#[pyfunction]
fn modified_chapelle_c(features: Vec<Vec<f64>>, gamma: f64) -> PyResult<f64> {
    heur::modified_chapelle_c_exact(matrix(features)?.view(), gamma).map_err(py_err)
}

/// One-vs-one RBF SVM.
#[pyclass(name = "SvmModel", module = "svmheur", frozen)]
struct PySvmModel {
    inner: svm::MulticlassModel,
}

#[pymethods]
impl PySvmModel {
    #[staticmethod]
    #[pyo3(signature = (features, labels, c = 1.0, gamma = 1.0, tolerance = 1e-3, max_passes = 10))]
    fn train(features: Vec<Vec<f64>>, labels: Vec<usize>, c: f64, gamma: f64, tolerance: f64, max_passes: usize) -> PyResult<Self> {
        let x = matrix(features)?;
        let params = SvmParams::new(c, gamma).map_err(py_err)?;
        let config = SolverConfig { tolerance, max_passes };
        let inner = svm::train_ovo(x.view(), &labels, n_classes_of(&labels), params, &config).map_err(py_err)?;
        Ok(PySvmModel { inner })
    }

    fn predict(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
        self.inner.predict_many(matrix(features)?.view()).map_err(py_err)
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.all_converged()
    }

    /// Number of support vectors of each pairwise model.
    #[getter]
    fn n_support(&self) -> Vec<usize> {
        self.inner.binaries.iter().map(|b| b.n_support()).collect()
    }
}

#[pyfunction]
fn zero_rule(dataset: &PyDataset) -> f64 {
    zero_rule_accuracy(&dataset.inner)
}

/// One-sided rank-sum test; returns `(U, p)`.
#[pyfunction]
#[pyo3(signature = (a, b, direction = "greater"))]
fn mww(a: Vec<f64>, b: Vec<f64>, direction: &str) -> PyResult<(f64, f64)> {
    let dir = match direction {
        "greater" => Direction::Greater,
        "less" => Direction::Less,
        other => return Err(SvmHeurError::new_err(format!("direction must be `greater` or `less`, got `{other}`"))),
    };
    let r = eval::mww_one_sided(&a, &b, dir).map_err(py_err)?;
    Ok((r.u_statistic, r.p_value))
}

/// Nested cross-validation of one method (`covtrace`, `gscv_default`,
/// `gscv_seeded:Chapelle`, ...). Passing `fraction` runs the semi-supervised
/// variant.
#[pyfunction]
#[pyo3(signature = (dataset, method, repetitions = 10, base_seed = 0, k_external = 5, k_internal = 3, fraction = None, min_per_class = 5))]
#[allow(clippy::too_many_arguments)]
fn cross_validate<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    method: &str,
    repetitions: usize,
    base_seed: u64,
    k_external: usize,
    k_internal: usize,
    fraction: Option<f64>,
    min_per_class: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let strategy: Strategy = method.parse().map_err(py_err)?;
    let cv = CvConfig { k_external, k_internal, repetitions, base_seed };
    let solver = SolverConfig::default();
    let scores = match fraction {
        None => run_external_cv(&dataset.inner, strategy, &cv, &solver),
        Some(fraction) => run_semi_supervised(&dataset.inner, strategy, &cv, SubsampleConfig { fraction, min_per_class }, &solver),
    }
    .map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("method", scores.method.clone())?;
    out.set_item("mean_oa", scores.mean_oa)?;
    out.set_item("mean_aa", scores.mean_aa)?;
    out.set_item("per_repetition_oa", scores.per_repetition_oa.clone())?;
    out.set_item("per_repetition_aa", scores.per_repetition_aa.clone())?;
    let params: Vec<(f64, f64)> = scores.folds.iter().map(|f| (f.params.c, f.params.gamma)).collect();
    out.set_item("params", params)?;
    Ok(out)
}

#[pymodule]
fn svmheur(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SvmHeurError", m.py().get_type::<SvmHeurError>())?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PySvmModel>()?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(heuristics, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(covtrace_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(gelbart_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(smola_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(chapelle_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(soares_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(jaakkola_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(chapelle_c, m)?)?;
    m.add_function(wrap_pyfunction!(modified_chapelle_c, m)?)?;
    m.add_function(wrap_pyfunction!(zero_rule, m)?)?;
    m.add_function(wrap_pyfunction!(mww, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    Ok(())
}
