//! Python bindings for `tvformation`.
//!
//! ```python
//! import tvformation as tv
//! s = tv.Scenario.from_file("scenarios/case_a.cfg")
//! bc = tv.run(s.with_controller("bc"))
//! fabc = tv.run(s.with_controller("fabc"))
//! print(tv.compare(bc, fabc)["followers"][0]["left_wheel_decrease_pct"])
//! ```

use std::fs::File;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyIndexError, PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tvformation::config::{check_scenario, load_scenario, parse_scenario};
use tvformation::controllers::derive_gains;
use tvformation::exprlang::{self, check_rate_consistency, RATE_CHECK_TOLERANCE};
use tvformation::formation::{self, GlobalError, LocalError};
use tvformation::sim::{self, ControllerKind, ControllerMetrics, RunSummary, SETTLING_FRACTION};
use tvformation::trace_csv::{header, row_values, write_trace};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn kind(name: &str) -> PyResult<ControllerKind> {
    ControllerKind::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown controller `{name}`")))
}

/// A parsed time expression.
#[pyclass(frozen, module = "tvformation")]
struct Expression {
    inner: exprlang::Expr,
}

#[pymethods]
impl Expression {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        exprlang::parse(text).map(|inner| Self { inner }).map_err(value_err)
    }

    fn __call__(&self, t: f64) -> PyResult<f64> {
        self.inner.eval(t).map_err(value_err)
    }

    #[getter]
    fn is_constant(&self) -> bool {
        self.inner.is_constant()
    }

    /// Relative mismatch between `rate` and the numerical derivative of this
    /// expression over `[t0, t1]`.
    #[pyo3(signature = (rate, t0, t1, samples=10_000))]
    fn rate_mismatch(&self, rate: &Expression, t0: f64, t1: f64, samples: usize) -> PyResult<f64> {
        check_rate_consistency(&self.inner, &rate.inner, t0, t1, samples)
            .map(|c| c.relative_error())
            .map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Expression({:?})", self.inner.to_string())
    }
}

/// A loaded scenario. Use `from_file` or `from_text`.
#[pyclass(frozen, module = "tvformation")]
struct Scenario {
    inner: sim::Scenario,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        load_scenario(&path).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        parse_scenario(text).map(|inner| Self { inner }).map_err(value_err)
    }

    /// Diagnostics from checking the profiles over the horizon, as strings.
    fn check(&self) -> Vec<String> {
        check_scenario(&self.inner).iter().map(ToString::to_string).collect()
    }

    fn with_controller(&self, controller: &str) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_controller(kind(controller)?),
        })
    }

    /// Copy with every follower starting on its desired pose.
    fn at_equilibrium(&self) -> PyResult<Self> {
        self.inner
            .at_equilibrium()
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    fn with_horizon(&self, horizon: f64) -> Self {
        let mut inner = self.inner.clone();
        inner.horizon = horizon;
        Self { inner }
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }

    #[getter]
    fn follower_names(&self) -> Vec<String> {
        self.inner.followers.iter().map(|f| f.name.clone()).collect()
    }
}

/// The recorded output of one run.
#[pyclass(frozen, module = "tvformation")]
struct Trace {
    inner: sim::Trace,
}

impl Trace {
    fn index(&self, name: &str) -> PyResult<usize> {
        self.inner
            .follower_index(name)
            .ok_or_else(|| PyKeyError::new_err(name.to_string()))
    }
}

#[pymethods]
impl Trace {
    fn __len__(&self) -> usize {
        self.inner.rows.len()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn follower_names(&self) -> Vec<String> {
        self.inner.follower_names.clone()
    }

    #[getter]
    fn controllers(&self) -> Vec<&'static str> {
        self.inner.kinds.iter().map(|k| k.short_name()).collect()
    }

    /// Column names, matching the CSV header.
    fn columns(&self) -> Vec<String> {
        header(&self.inner.follower_names)
    }

    /// One column by name, e.g. `"t"` or `"f1.wR"`.
    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        let j = self
            .columns()
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| PyKeyError::new_err(name.to_string()))?;
        Ok((0..self.inner.rows.len())
            .map(|i| row_values(&self.inner, i)[j])
            .collect())
    }

    fn row(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.inner.rows.len() {
            return Err(PyIndexError::new_err(i));
        }
        Ok(row_values(&self.inner, i))
    }

    #[pyo3(signature = (follower, fraction=SETTLING_FRACTION))]
    fn settling_time(&self, follower: &str, fraction: f64) -> PyResult<Option<f64>> {
        Ok(self.inner.settling_time(self.index(follower)?, fraction))
    }

    fn metrics<'py>(&self, py: Python<'py>, follower: &str) -> PyResult<Bound<'py, PyDict>> {
        metrics_dict(py, &ControllerMetrics::from_trace(&self.inner, self.index(follower)?))
    }

    fn summary(&self) -> String {
        RunSummary::from_trace(&self.inner).to_string()
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let file = File::create(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        write_trace(&self.inner, file).map_err(|e| PyIOError::new_err(e.to_string()))
    }
}

fn metrics_dict<'py>(py: Python<'py>, m: &ControllerMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("max_abs_left_wheel", m.max_abs_left_wheel)?;
    d.set_item("max_abs_right_wheel", m.max_abs_right_wheel)?;
    d.set_item("max_abs_v", m.max_abs_v)?;
    d.set_item("max_abs_omega", m.max_abs_omega)?;
    d.set_item("settling_time", m.settling_time)?;
    d.set_item("initial_error_norm", m.initial_error_norm)?;
    d.set_item("final_error_norm", m.final_error_norm)?;
    Ok(d)
}

/// Simulate a scenario. The GIL is released while the run is in progress.
#[pyfunction]
fn run(py: Python<'_>, scenario: &Scenario) -> PyResult<Trace> {
    let s = scenario.inner.clone();
    py.detach(move || sim::run(&s))
        .map(|inner| Trace { inner })
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Compare a backstepping trace with a fuzzy-adaptive trace of the same
/// scenario. Returns the report as a dict.
#[pyfunction]
fn compare<'py>(py: Python<'py>, bc: &Trace, fabc: &Trace) -> PyResult<Bound<'py, PyDict>> {
    let rep = sim::compare(&bc.inner, &fabc.inner).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("dt", rep.dt)?;
    out.set_item("horizon", rep.horizon)?;
    out.set_item("settling_fraction", rep.settling_fraction)?;
    let mut followers = Vec::new();
    for c in &rep.followers {
        let d = PyDict::new(py);
        d.set_item("name", &c.name)?;
        d.set_item("bc", metrics_dict(py, &c.bc)?)?;
        d.set_item("fabc", metrics_dict(py, &c.fabc)?)?;
        d.set_item("left_wheel_decrease_pct", c.left_wheel_decrease_pct)?;
        d.set_item("right_wheel_decrease_pct", c.right_wheel_decrease_pct)?;
        d.set_item("v_decrease_pct", c.v_decrease_pct)?;
        d.set_item("omega_decrease_pct", c.omega_decrease_pct)?;
        followers.push(d);
    }
    out.set_item("followers", followers)?;
    out.set_item("text", rep.to_string())?;
    Ok(out)
}

/// Rotate a world-frame error `(ex, ey, etheta)` into the follower frame.
#[pyfunction]
fn to_local(ex: f64, ey: f64, etheta: f64, theta_f: f64) -> (f64, f64, f64) {
    let l = formation::to_local(&GlobalError { ex, ey, etheta }, theta_f);
    (l.ex_hat, l.ey_hat, l.etheta_hat)
}

#[pyfunction]
fn from_local(ex_hat: f64, ey_hat: f64, etheta_hat: f64, theta_f: f64) -> (f64, f64, f64) {
    let g = formation::from_local(
        &LocalError {
            ex_hat,
            ey_hat,
            etheta_hat,
        },
        theta_f,
    );
    (g.ex, g.ey, g.etheta)
}

/// `(V1, V2, dV2/dt)` for a follower-frame error under gains `k1..k3`.
#[pyfunction]
#[pyo3(signature = (ex_hat, ey_hat, etheta_hat, k1, k2, k3, c=0.1))]
fn lyapunov(ex_hat: f64, ey_hat: f64, etheta_hat: f64, k1: f64, k2: f64, k3: f64, c: f64) -> PyResult<(f64, f64, f64)> {
    let g = derive_gains(k1, k2, k3, c).map_err(value_err)?;
    let e = LocalError {
        ex_hat,
        ey_hat,
        etheta_hat,
    };
    let v = sim::lyapunov(&e, &g);
    Ok((v.v1, v.v2, sim::lyapunov_rate(&e, &g)))
}

#[pymodule]
#[pyo3(name = "tvformation")]
fn tvformation_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Expression>()?;
    m.add_class::<Scenario>()?;
    m.add_class::<Trace>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(to_local, m)?)?;
    m.add_function(wrap_pyfunction!(from_local, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov, m)?)?;
    m.add("RATE_CHECK_TOLERANCE", RATE_CHECK_TOLERANCE)?;
    m.add("SETTLING_FRACTION", SETTLING_FRACTION)?;
    Ok(())
}
