//! Python bindings: special functions, detection probabilities, scenarios,
//! channel snapshots, the three allocation schemes and sweeps as CSV text.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use isac_core::allocator::{self, AllocationResult};
use isac_core::channel::{self, ChannelRealization};
use isac_core::detection::{self, DetectionSetup};
use isac_core::harness::{self, Grid, Scheme, SweepSpec, SweepVariable};
use isac_core::specfun;
use isac_core::{Error, PowerVector, ScenarioConfig};

create_exception!(comp_isac, ConfigError, PyValueError, "Invalid scenario or argument.");
create_exception!(
    comp_isac,
    InfeasibleError,
    PyValueError,
    "No allocation satisfies the constraints."
);
create_exception!(comp_isac, NumericalError, PyRuntimeError, "A numerical routine failed.");

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Config { .. } | Error::Parse { .. } | Error::Io { .. } | Error::Domain { .. } => {
            ConfigError::new_err(msg)
        }
        Error::Infeasible { .. } | Error::InfeasibleTarget { .. } | Error::SamplingExhausted { .. } => {
            InfeasibleError::new_err(msg)
        }
        _ => NumericalError::new_err(msg),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for isac_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// `ln Γ(x)` for `x > 0`.
#[pyfunction]
fn ln_gamma(x: f64) -> PyResult<f64> {
    specfun::ln_gamma(x).py_err()
}

/// Regularized upper incomplete gamma `Γ(L, x)/Γ(L)`.
#[pyfunction]
fn upper_gamma_regularized(order: u32, x: f64) -> PyResult<f64> {
    specfun::upper_gamma_regularized(order, x).py_err().map(f64::from)
}

/// `x` with `Γ(L, x)/Γ(L) = p`.
#[pyfunction]
fn inv_upper_gamma_regularized(order: u32, p: f64) -> PyResult<f64> {
    specfun::inv_upper_gamma_regularized(order, p).py_err()
}

/// Generalized Marcum-Q function `Q_L(a, b)`.
#[pyfunction]
fn marcum_q(order: u32, a: f64, b: f64) -> PyResult<f64> {
    specfun::marcum_q(order, a, b).py_err().map(f64::from)
}

/// `a` with `Q_L(a, b) = p`.
#[pyfunction]
fn inv_marcum_q_a(order: u32, b: f64, p: f64) -> PyResult<f64> {
    specfun::inv_marcum_q_a(order, b, p).py_err()
}

#[pyfunction]
fn db_to_linear(x_db: f64) -> f64 {
    channel::db_to_linear(x_db)
}

/// GLRT threshold for `cells` BSs at false-alarm probability `pfa`.
#[pyfunction]
fn detection_threshold(cells: usize, pfa: f64) -> PyResult<f64> {
    detection::detection_threshold(cells, pfa).py_err()
}

/// Large-sample detection probability for powers `powers` and two-round
/// gains `gains` toward one target.
#[pyfunction]
fn pod_closed_form(powers: Vec<f64>, gains: Vec<f64>, sigma_s2: f64, samples: usize, delta: f64) -> PyResult<f64> {
    let p = PowerVector::new(powers).py_err()?;
    detection::pod_closed_form(&p, &gains, sigma_s2, samples, delta)
        .py_err()
        .map(f64::from)
}

/// Scenario parameters. `Scenario()` is the default three-cell setup.
#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    #[new]
    fn new() -> Self {
        PyScenario {
            inner: ScenarioConfig::default(),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(PyScenario {
            inner: ScenarioConfig::from_toml_str(text).py_err()?,
        })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(PyScenario {
            inner: ScenarioConfig::from_path(&path).py_err()?,
        })
    }

    #[getter]
    fn cells(&self) -> usize {
        self.inner.cells
    }

    #[getter]
    fn samples(&self) -> usize {
        self.inner.samples
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn power_budget_db(&self) -> f64 {
        self.inner.power_budget_db
    }

    #[getter]
    fn pod_thresholds(&self) -> Vec<f64> {
        self.inner.pod_thresholds.clone()
    }

    #[getter]
    fn rate_thresholds(&self) -> Vec<f64> {
        self.inner.rate_thresholds.clone()
    }

    fn with_power_budget_db(&self, budget_db: f64) -> Self {
        PyScenario {
            inner: self.inner.with_power_budget_db(budget_db),
        }
    }

    fn with_pod_threshold(&self, xi: f64) -> Self {
        PyScenario {
            inner: self.inner.with_pod_threshold(xi),
        }
    }

    fn with_seed(&self, seed: u64) -> Self {
        PyScenario {
            inner: ScenarioConfig {
                seed,
                ..self.inner.clone()
            },
        }
    }

    /// Channel snapshot number `index`.
    #[pyo3(signature = (index=0))]
    fn snapshot(&self, index: u64) -> PyResult<PyChannel> {
        Ok(PyChannel {
            inner: channel::snapshot(&self.inner, index).py_err()?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(cells={}, samples={}, power_budget_db={}, seed={})",
            self.inner.cells, self.inner.samples, self.inner.power_budget_db, self.inner.seed
        )
    }
}

/// Power gains of one snapshot: `rho[l][i]` BS `l` to user `i`, `g[l][i]`
/// BS `l` via target `i` back to BS `i`.
#[pyclass(name = "Channel", from_py_object)]
#[derive(Clone)]
struct PyChannel {
    inner: ChannelRealization,
}

#[pymethods]
impl PyChannel {
    #[new]
    fn new(rho: Vec<Vec<f64>>, g: Vec<Vec<f64>>, sigma_c2: Vec<f64>, sigma_s2: Vec<f64>) -> PyResult<Self> {
        Ok(PyChannel {
            inner: ChannelRealization::new(rho, g, sigma_c2, sigma_s2).py_err()?,
        })
    }

    #[getter]
    fn rho(&self) -> Vec<Vec<f64>> {
        self.inner.rho.clone()
    }

    #[getter]
    fn g(&self) -> Vec<Vec<f64>> {
        self.inner.g.clone()
    }

    #[getter]
    fn sigma_c2(&self) -> Vec<f64> {
        self.inner.sigma_c2.clone()
    }

    #[getter]
    fn sigma_s2(&self) -> Vec<f64> {
        self.inner.sigma_s2.clone()
    }

    fn __repr__(&self) -> String {
        format!("Channel(cells={})", self.inner.cells())
    }
}

/// Outcome of one allocation scheme.
#[pyclass(name = "Allocation", frozen, skip_from_py_object)]
struct PyAllocation {
    inner: AllocationResult,
}

#[pymethods]
impl PyAllocation {
    #[getter]
    fn powers(&self) -> Vec<f64> {
        self.inner.powers.as_slice().to_vec()
    }

    #[getter]
    fn per_user_rate(&self) -> Vec<f64> {
        self.inner.per_user_rate.clone()
    }

    #[getter]
    fn sum_rate(&self) -> f64 {
        self.inner.sum_rate
    }

    #[getter]
    fn per_target_pod(&self) -> Vec<f64> {
        self.inner.per_target_pod.iter().map(|p| p.value()).collect()
    }

    #[getter]
    fn feasible(&self) -> bool {
        self.inner.feasible
    }

    #[getter]
    fn outer_iterations(&self) -> usize {
        self.inner.outer_iterations
    }

    #[getter]
    fn objective_trace(&self) -> Vec<f64> {
        self.inner.objective_trace.clone()
    }

    #[getter]
    fn kkt_residual(&self) -> Option<f64> {
        Some(self.inner.kkt_residual).filter(|k| !k.is_nan())
    }

    #[getter]
    fn slacks(&self) -> Vec<f64> {
        self.inner.slacks.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Allocation(sum_rate={:.6}, feasible={}, powers={:?})",
            self.inner.sum_rate,
            self.inner.feasible,
            self.inner.powers.as_slice()
        )
    }
}

/// Proposed allocation (alternating surrogate maximization, multi-start).
#[pyfunction]
fn optimize_ppa(py: Python<'_>, scenario: &PyScenario, channel: &PyChannel) -> PyResult<PyAllocation> {
    let inner = py
        .detach(|| allocator::optimize_ppa_default(&scenario.inner, &channel.inner))
        .py_err()?;
    Ok(PyAllocation { inner })
}

/// Equal power allocation; infeasible results are flagged, not raised.
#[pyfunction]
fn epa(scenario: &PyScenario, channel: &PyChannel) -> PyResult<PyAllocation> {
    let inner = allocator::epa(&scenario.inner, &channel.inner).py_err()?;
    Ok(PyAllocation { inner })
}

/// Random feasible allocation by rejection sampling.
#[pyfunction]
#[pyo3(signature = (scenario, channel, seed=None))]
fn rpa(scenario: &PyScenario, channel: &PyChannel, seed: Option<u64>) -> PyResult<PyAllocation> {
    let seed = seed.unwrap_or(scenario.inner.solver.rpa_seed);
    let inner = allocator::rpa(&scenario.inner, &channel.inner, seed).py_err()?;
    Ok(PyAllocation { inner })
}

/// Monte Carlo false-alarm and detection rates at BS `target`.
#[pyfunction]
#[pyo3(signature = (scenario, channel, powers, target, trials=10_000, seed=0))]
fn simulate_detection<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    channel: &PyChannel,
    powers: Vec<f64>,
    target: usize,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    if target >= scenario.inner.cells {
        return Err(ConfigError::new_err(format!("target {target} out of range")));
    }
    let setup = DetectionSetup::for_target(&scenario.inner, target).py_err()?;
    let p = PowerVector::new(powers).py_err()?;
    let est = py
        .detach(|| detection::simulate_detection(&setup, &p, &channel.inner, target, trials, seed))
        .py_err()?;
    let out = PyDict::new(py);
    out.set_item("trials", est.trials)?;
    out.set_item("pfa", est.pfa_hat)?;
    out.set_item("pod", est.pod_hat)?;
    out.set_item("pfa_stderr", est.pfa_stderr)?;
    out.set_item("pod_stderr", est.pod_stderr)?;
    Ok(out)
}

/// Run a sweep and return its CSV text. `variable` is `power_budget_db` or
/// `pod_threshold`; `validate=True` adds Monte Carlo detection estimates.
#[pyfunction]
#[pyo3(signature = (scenario, variable, start, stop, step, schemes="ppa,epa,rpa", trials=10_000, validate=false))]
#[allow(clippy::too_many_arguments)]
fn sweep_csv(
    py: Python<'_>,
    scenario: &PyScenario,
    variable: &str,
    start: f64,
    stop: f64,
    step: f64,
    schemes: &str,
    trials: u64,
    validate: bool,
) -> PyResult<String> {
    let variable: SweepVariable = variable.parse().py_err()?;
    let grid = Grid::new(start, stop, step).py_err()?;
    let schemes: Vec<Scheme> = harness::parse_schemes(schemes).py_err()?;
    let mut spec = SweepSpec::new(variable, grid, schemes);
    spec.trials = trials;
    let rows = py
        .detach(|| {
            if validate {
                harness::run_pod_validation(&scenario.inner, &spec)
            } else {
                harness::run_rate_sweep(&scenario.inner, &spec)
            }
        })
        .py_err()?;
    let mut buf = Vec::new();
    harness::write_csv(&rows, &mut buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn comp_isac(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("InfeasibleError", py.get_type::<InfeasibleError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyAllocation>()?;
    m.add_function(wrap_pyfunction!(ln_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(upper_gamma_regularized, m)?)?;
    m.add_function(wrap_pyfunction!(inv_upper_gamma_regularized, m)?)?;
    m.add_function(wrap_pyfunction!(marcum_q, m)?)?;
    m.add_function(wrap_pyfunction!(inv_marcum_q_a, m)?)?;
    m.add_function(wrap_pyfunction!(db_to_linear, m)?)?;
    m.add_function(wrap_pyfunction!(detection_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(pod_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_ppa, m)?)?;
    m.add_function(wrap_pyfunction!(epa, m)?)?;
    m.add_function(wrap_pyfunction!(rpa, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_detection, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    Ok(())
}
