//! Python bindings: symmetric functions, the operator, eigen-decomposition,
//! problem construction and the continuity solve.

use hmix_core::problems::{check_problem, presets, ManufacturedProblem, ProblemConfig};
use hmix_core::solver::{continuity_solve, SolverConfig};
use hmix_core::{operator, oracle, spectral, symfun, Coefficients, GridFunction, HermitianMatrix, ProblemSpec};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

create_exception!(hmix, HmixError, PyException);

fn err(e: hmix_core::HmixError) -> PyErr {
    HmixError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v).map_err(|e| HmixError::new_err(e.to_string()))?;
    json_to_py(py, &value)
}

fn hermitian(re: Vec<Vec<f64>>, im: Option<Vec<Vec<f64>>>) -> PyResult<HermitianMatrix> {
    let n = re.len();
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        if re[i].len() != n {
            return Err(HmixError::new_err("matrix must be square"));
        }
        for j in 0..n {
            let b = match &im {
                Some(m) => *m.get(i).and_then(|r| r.get(j)).ok_or_else(|| HmixError::new_err("imaginary part must match"))?,
                None => 0.0,
            };
            data.push(Complex64::new(re[i][j], b));
        }
    }
    HermitianMatrix::new(n, data).map_err(err)
}

/// σ_k(λ).
#[pyfunction]
fn sigma(k: usize, lam: Vec<f64>) -> PyResult<f64> {
    symfun::sigma(k, &lam).map_err(err)
}

/// [σ_0, …, σ_n](λ).
#[pyfunction]
fn sigma_all(lam: Vec<f64>) -> Vec<f64> {
    symfun::sigma_all(&lam)
}

/// Largest k with λ ∈ Γ_k.
#[pyfunction]
fn cone_order(lam: Vec<f64>) -> usize {
    symfun::cone_membership(&lam).max_k
}

#[pyfunction]
fn newton_maclaurin(lam: Vec<f64>, k: usize, l: usize, r: usize, s: usize) -> PyResult<(f64, f64, bool)> {
    let nm = symfun::newton_maclaurin(&lam, k, l, r, s).map_err(err)?;
    Ok((nm.lhs, nm.rhs, nm.holds))
}

/// (β_l, β) from α_0..α_{k−1}.
#[pyfunction]
fn normalize_coefficients(alpha: Vec<f64>, n: usize, k: usize) -> PyResult<(Vec<f64>, f64)> {
    let c = operator::normalize_coefficients(&alpha, n, k).map_err(err)?;
    Ok((c.beta_l, c.beta))
}

/// G(λ) for normalized coefficients β_l.
#[pyfunction]
fn evaluate(lam: Vec<f64>, k: usize, beta_l: Vec<f64>) -> PyResult<f64> {
    let c = Coefficients::new(lam.len(), k, beta_l, 0.0).map_err(err)?;
    operator::evaluate(&lam, &c).map_err(err)
}

/// (G, ∂G/∂λ) at λ, gradient aligned with sorted λ.
#[pyfunction]
fn gradient(lam: Vec<f64>, k: usize, beta_l: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
    let c = Coefficients::new(lam.len(), k, beta_l, 0.0).map_err(err)?;
    let spec = symfun::Spectrum::new(lam).map_err(err)?;
    operator::value_and_gradient(&spec, &c).map_err(err)
}

/// Ascending eigenvalues of a Hermitian matrix given by real and imaginary parts.
#[pyfunction]
#[pyo3(signature = (re, im=None))]
fn eigvalsh(re: Vec<Vec<f64>>, im: Option<Vec<Vec<f64>>>) -> PyResult<Vec<f64>> {
    let a = hermitian(re, im)?;
    Ok(spectral::eig_hermitian(&a).map_err(err)?.lambda.values().to_vec())
}

/// Runs a named property suite and returns its report.
#[pyfunction]
#[pyo3(signature = (name, seed=0))]
fn run_suite<'py>(py: Python<'py>, name: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let rep = py.detach(|| oracle::run_suite(name, seed)).map_err(err)?;
    to_py(py, &rep)
}

/// A Dirichlet problem built from a configuration.
#[pyclass(module = "hmix")]
struct Problem {
    config: ProblemConfig,
    spec: ProblemSpec,
    manufactured: Option<ManufacturedProblem>,
}

#[pymethods]
impl Problem {
    #[staticmethod]
    #[pyo3(signature = (text, grid_scale=1))]
    fn from_json(text: &str, grid_scale: usize) -> PyResult<Self> {
        let config = ProblemConfig::from_json(text).map_err(err)?;
        Self::build(config, grid_scale)
    }

    /// Named configuration: ci, quadratic, n3k2, n3k3.
    #[staticmethod]
    #[pyo3(signature = (name, points=None))]
    fn preset(name: &str, points: Option<usize>) -> PyResult<Self> {
        let config = presets::by_name(name, points).ok_or_else(|| HmixError::new_err(format!("unknown preset '{name}'")))?;
        Self::build(config, 1)
    }

    fn to_json(&self) -> String {
        self.config.to_json()
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.spec.grid.shape.clone()
    }

    #[getter]
    fn unknowns(&self) -> usize {
        self.spec.grid.interior().len()
    }

    /// Admissibility, subsolution, supersolution and cone-bound margins.
    fn check<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let rep = check_problem(&self.spec).map_err(err)?;
        let out = to_py(py, &rep)?;
        out.set_item("ok", rep.ok())?;
        Ok(out)
    }

    /// Continuity solve; `solver` overrides individual settings.
    #[pyo3(signature = (**solver))]
    fn solve(&self, py: Python<'_>, solver: Option<&Bound<'_, PyDict>>) -> PyResult<Solution> {
        let mut cfg = self.config.solver.clone().unwrap_or_default();
        if let Some(d) = solver {
            let mut v = serde_json::to_value(&cfg).expect("solver config serializes");
            for (k, val) in d.iter() {
                let key: String = k.extract()?;
                let num: f64 = val.extract()?;
                let entry = v.get_mut(&key).ok_or_else(|| HmixError::new_err(format!("unknown solver setting '{key}'")))?;
                *entry = if entry.is_u64() { Value::from(num as u64) } else { Value::from(num) };
            }
            cfg = serde_json::from_value::<SolverConfig>(v).map_err(|e| HmixError::new_err(e.to_string()))?;
        }
        let spec = &self.spec;
        let sol = py.detach(|| continuity_solve(spec, &cfg)).map_err(err)?;
        let error = self.manufactured.as_ref().map(|mp| sol.u.max_abs_diff(&mp.ustar));
        let report = serde_json::to_value(&sol.report).map_err(|e| HmixError::new_err(e.to_string()))?;
        Ok(Solution { u: sol.u, report, error })
    }
}

impl Problem {
    fn build(config: ProblemConfig, grid_scale: usize) -> PyResult<Self> {
        let built = config.build(grid_scale).map_err(err)?;
        Ok(Problem { config, spec: built.spec, manufactured: built.manufactured })
    }
}

#[pyclass(module = "hmix")]
struct Solution {
    u: GridFunction,
    report: Value,
    error: Option<f64>,
}

#[pymethods]
impl Solution {
    /// Grid values in row-major order (last axis fastest).
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.u.values.clone()
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.u.grid.shape.clone()
    }

    #[getter]
    fn final_residual(&self) -> f64 {
        self.report["final_residual"].as_f64().unwrap_or(f64::NAN)
    }

    #[getter]
    fn newton_iterations(&self) -> u64 {
        self.report["total_newton_iterations"].as_u64().unwrap_or(0)
    }

    /// max |u − u*| for manufactured problems.
    #[getter]
    fn error(&self) -> Option<f64> {
        self.error
    }

    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.report)
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    fn write(&self, stem: &str) -> PyResult<()> {
        hmix_core::io::write_field(std::path::Path::new(stem), &self.u).map_err(err)?;
        Ok(())
    }
}

#[pymodule]
fn hmix(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HmixError", m.py().get_type::<HmixError>())?;
    m.add_function(wrap_pyfunction!(sigma, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_all, m)?)?;
    m.add_function(wrap_pyfunction!(cone_order, m)?)?;
    m.add_function(wrap_pyfunction!(newton_maclaurin, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(gradient, m)?)?;
    m.add_function(wrap_pyfunction!(eigvalsh, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_class::<Problem>()?;
    m.add_class::<Solution>()?;
    Ok(())
}
