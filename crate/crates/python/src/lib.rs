//! Python bindings for the decoupling toolkit.

use std::path::PathBuf;

use decouple_core::algebra::{gellmann_basis as core_gellmann, preset_split, OrthonormalBasis, PresetKind};
use decouple_core::cli;
use decouple_core::config::{preset, Scenario as CoreScenario, ScenarioConfig, PRESET_NAMES};
use decouple_core::decoupler::{self, Branch, ControlLaw as CoreLaw, SolveStatus};
use decouple_core::dynamics::{self, LidarStatus};
use decouple_core::error::{Error, ErrorCategory};
use decouple_core::linalg::CMatrix;
use decouple_core::vectorizer;
use nalgebra::DVector;
use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py_err(err: Error) -> PyErr {
    let msg = err.to_string();
    match err.category() {
        ErrorCategory::Config => PyValueError::new_err(msg),
        ErrorCategory::Io => PyOSError::new_err(msg),
        ErrorCategory::Infeasible | ErrorCategory::Numerical => PyRuntimeError::new_err(msg),
    }
}

fn json_to_py(py: Python<'_>, value: &impl serde::Serialize) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import_bound("json")?.call_method1("loads", (text,))?.unbind())
}

fn matrix_from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn basis_for(name: &str, dim: usize) -> PyResult<OrthonormalBasis> {
    match name {
        "gellmann" => core_gellmann(dim).map_err(to_py_err),
        other => {
            let kind: PresetKind = other.parse().map_err(to_py_err)?;
            let (basis, _) = preset_split(kind);
            if basis.dim() != dim {
                return Err(PyValueError::new_err(format!(
                    "basis '{other}' is for dimension {}, got {dim}",
                    basis.dim()
                )));
            }
            Ok((*basis).clone())
        }
    }
}

/// Scenario configuration with the check / solve / run pipeline.
#[pyclass(module = "decouple")]
#[derive(Clone)]
struct Scenario {
    cfg: ScenarioConfig,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(Self { cfg: preset(name).map_err(to_py_err)? })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { cfg: ScenarioConfig::from_toml(text).map_err(to_py_err)? })
    }

    /// `preset:<name>` or a TOML path.
    #[staticmethod]
    fn load(arg: &str) -> PyResult<Self> {
        Ok(Self { cfg: cli::load_config(arg).map_err(to_py_err)? })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.cfg.to_toml().map_err(to_py_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.cfg.name.clone()
    }

    fn check(&self, py: Python<'_>) -> PyResult<PyObject> {
        let scenario = CoreScenario::from_config(&self.cfg).map_err(to_py_err)?;
        let (report, _) = cli::check(&scenario).map_err(to_py_err)?;
        json_to_py(py, &report)
    }

    /// Returns the solve report and the control law.
    fn solve(&self, py: Python<'_>) -> PyResult<(PyObject, ControlLaw)> {
        let scenario = CoreScenario::from_config(&self.cfg).map_err(to_py_err)?;
        let (_, vs) = cli::check(&scenario).map_err(to_py_err)?;
        let solved = cli::solve(&self.cfg, &scenario, &vs).map_err(to_py_err)?;
        let report = json_to_py(py, &solved.report)?;
        Ok((
            report,
            ControlLaw {
                law: solved.law,
                names: scenario.control_names,
                exact: solved.report.solution.status == SolveStatus::Exact,
            },
        ))
    }

    /// Runs the full pipeline, writing outputs to `out_dir`; returns the summary.
    fn run(&self, py: Python<'_>, out_dir: PathBuf) -> PyResult<PyObject> {
        let outcome = py.allow_threads(|| cli::run(&self.cfg, &out_dir)).map_err(to_py_err)?;
        json_to_py(py, &outcome.summary)
    }

    fn __repr__(&self) -> String {
        format!("Scenario(name={:?})", self.cfg.name)
    }
}

/// Synthesized open-loop control law `u(t)`.
#[pyclass(module = "decouple")]
struct ControlLaw {
    law: CoreLaw,
    names: Vec<String>,
    #[pyo3(get)]
    exact: bool,
}

#[pymethods]
impl ControlLaw {
    fn __call__(&self, t: f64) -> Vec<f64> {
        decoupler::control_signal(&self.law, t).iter().copied().collect()
    }

    #[getter]
    fn channels(&self) -> Vec<String> {
        self.names.clone()
    }

    #[getter]
    fn xi(&self) -> Vec<f64> {
        self.law.xi.iter().copied().collect()
    }

    fn spectrum(&self, py: Python<'_>) -> PyResult<PyObject> {
        json_to_py(py, &decoupler::spectrum(&self.law))
    }

    fn __len__(&self) -> usize {
        self.law.len()
    }
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    PRESET_NAMES.to_vec()
}

/// Orthonormal generalized Gell-Mann basis of su(n).
#[pyfunction]
fn gellmann_basis(n: usize) -> PyResult<Vec<Vec<Vec<Complex64>>>> {
    let basis = core_gellmann(n).map_err(to_py_err)?;
    Ok(basis.elements().iter().map(matrix_to_rows).collect())
}

#[pyfunction]
#[pyo3(signature = (rho, basis = "gellmann"))]
fn rho_to_coherence(rho: Vec<Vec<Complex64>>, basis: &str) -> PyResult<Vec<f64>> {
    let rho = matrix_from_rows(rho)?;
    let b = basis_for(basis, rho.nrows())?;
    let cv = vectorizer::rho_to_coherence(&rho, &b).map_err(to_py_err)?;
    Ok(cv.m.iter().copied().collect())
}

#[pyfunction]
#[pyo3(signature = (m, dim, basis = "gellmann"))]
fn coherence_to_rho(m: Vec<f64>, dim: usize, basis: &str) -> PyResult<Vec<Vec<Complex64>>> {
    let b = basis_for(basis, dim)?;
    let rho = vectorizer::coherence_to_rho(&DVector::from_vec(m), &b).map_err(to_py_err)?;
    Ok(matrix_to_rows(&rho))
}

/// Closed-form qubit solution in Bloch coordinates.
#[pyfunction]
#[pyo3(signature = (m0, gamma, branch = "minus"))]
fn analytic_one_qubit(py: Python<'_>, m0: [f64; 3], gamma: f64, branch: &str) -> PyResult<PyObject> {
    let branch = match branch {
        "minus" => Branch::Minus,
        "plus" => Branch::Plus,
        other => return Err(PyValueError::new_err(format!("unknown branch '{other}'"))),
    };
    let a = decoupler::analytic_one_qubit(m0, gamma, branch).map_err(to_py_err)?;
    let d = PyDict::new_bound(py);
    d.set_item("xi", a.solution.xi.iter().copied().collect::<Vec<f64>>())?;
    d.set_item("eta", a.solution.eta[0])?;
    d.set_item("amplitude", a.amplitude)?;
    d.set_item("phase", a.phase)?;
    d.set_item("degenerate", a.degenerate)?;
    Ok(d.into_any().unbind())
}

#[pyfunction]
fn entanglement_measure(rho: Vec<Vec<Complex64>>) -> PyResult<f64> {
    dynamics::entanglement_measure(&matrix_from_rows(rho)?).map_err(to_py_err)
}

/// `"convergent"` or `"diverged"` for the exact-decoupling laws.
#[pyfunction]
fn lidar_prediction(m0: [f64; 3]) -> &'static str {
    match dynamics::lidar_prediction(m0) {
        LidarStatus::Convergent => "convergent",
        LidarStatus::Diverged => "diverged",
    }
}

#[pymodule]
fn decouple(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<ControlLaw>()?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(gellmann_basis, m)?)?;
    m.add_function(wrap_pyfunction!(rho_to_coherence, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_to_rho, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_one_qubit, m)?)?;
    m.add_function(wrap_pyfunction!(entanglement_measure, m)?)?;
    m.add_function(wrap_pyfunction!(lidar_prediction, m)?)?;
    Ok(())
}
