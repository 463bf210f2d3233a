//! Python bindings for `vofrac`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use vofrac::cli::{run as run_command, Command, RunConfig};
use vofrac::covariance::{cov_const_order as cov_const, cov_vo};
use vofrac::ctrw::{limit_experiment, CtrwConfig, JumpLaw};
use vofrac::kernels::kernels as kernel_pair;
use vofrac::laplace::Method;
use vofrac::mittag_leffler::{ml1, ml3, MlParams};
use vofrac::relaxation::solve;
use vofrac::renewal::{epoch_cdf, factorial_moment, pmf, pmf_table, simulate_counts};
use vofrac::{ContourPlan, Error};

create_exception!(vofrac, VofracError, PyException, "Numerical failure inside vofrac.");
create_exception!(vofrac, InversionError, VofracError, "A Laplace inversion missed its accuracy target.");
create_exception!(vofrac, BudgetError, VofracError, "A node or event budget was exceeded.");

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::InvalidParameter(_) | Error::Domain(_) | Error::Config(_) | Error::DegenerateRates(_) => {
            PyValueError::new_err(msg)
        }
        Error::InversionFailure { .. } => InversionError::new_err(msg),
        Error::Budget(_) => BudgetError::new_err(msg),
        _ => VofracError::new_err(msg),
    }
}

fn plan_or(plan: Option<&PyContourPlan>, default: ContourPlan) -> ContourPlan {
    plan.map_or(default, |p| p.inner)
}

/// Order function `α(t)` and its Laplace symbol `sA(s)`.
#[pyclass(name = "OrderFunction", module = "vofrac", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyOrderFunction {
    inner: vofrac::OrderFunction,
}

#[pymethods]
impl PyOrderFunction {
    #[staticmethod]
    fn constant(alpha: f64) -> PyResult<Self> {
        Ok(Self { inner: vofrac::OrderFunction::constant(alpha).map_err(to_py)? })
    }

    #[staticmethod]
    fn exp_transition(alpha1: f64, alpha2: f64, c: f64) -> PyResult<Self> {
        Ok(Self { inner: vofrac::OrderFunction::exp_transition(alpha1, alpha2, c).map_err(to_py)? })
    }

    #[staticmethod]
    fn exp_transition_return(alpha1: f64, alpha2: f64, c1: f64, c2: f64) -> PyResult<Self> {
        Ok(Self { inner: vofrac::OrderFunction::exp_transition_return(alpha1, alpha2, c1, c2).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(|inner| Self { inner }).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[allow(clippy::wrong_self_convention)]
    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("order functions serialize")
    }

    /// `α(t)`.
    fn alpha(&self, t: f64) -> f64 {
        self.inner.alpha_of_t(t)
    }

    #[getter]
    fn alpha_initial(&self) -> f64 {
        self.inner.alpha_initial()
    }

    #[getter]
    fn alpha_final(&self) -> f64 {
        self.inner.alpha_final()
    }

    /// `sA(s)` for complex `s` off the negative real axis.
    fn symbol(&self, s: Complex64) -> PyResult<Complex64> {
        self.inner.symbol_sa(s).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("OrderFunction({})", self.to_json())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// Inversion engine, node count and accuracy target.
#[pyclass(name = "ContourPlan", module = "vofrac", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyContourPlan {
    inner: ContourPlan,
}

#[pymethods]
impl PyContourPlan {
    #[new]
    #[pyo3(signature = (method = "talbot", nodes = None, target_rel_err = None, spot_check = true))]
    fn new(method: &str, nodes: Option<usize>, target_rel_err: Option<f64>, spot_check: bool) -> PyResult<Self> {
        let mut inner = match method {
            "talbot" => ContourPlan::talbot(),
            "dehoog" => ContourPlan::dehoog(),
            other => return Err(PyValueError::new_err(format!("method must be 'talbot' or 'dehoog', got {other:?}"))),
        };
        if let Some(n) = nodes {
            inner.nodes = n;
        }
        if let Some(e) = target_rel_err {
            inner.target_rel_err = e;
        }
        inner.spot_check = spot_check;
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Plan used for double inversions.
    #[staticmethod]
    fn double_default() -> Self {
        Self { inner: ContourPlan::double_default() }
    }

    #[getter]
    fn method(&self) -> &'static str {
        match self.inner.method {
            Method::TalbotFixed => "talbot",
            Method::DeHoog => "dehoog",
        }
    }

    #[getter]
    fn nodes(&self) -> usize {
        self.inner.nodes
    }

    #[getter]
    fn target_rel_err(&self) -> f64 {
        self.inner.target_rel_err
    }

    fn __repr__(&self) -> String {
        format!(
            "ContourPlan(method={:?}, nodes={}, target_rel_err={:e})",
            self.method(),
            self.inner.nodes,
            self.inner.target_rel_err
        )
    }
}

/// Renewal counting process with interarrival survival `u_A`.
#[pyclass(name = "RenewalModel", module = "vofrac", frozen)]
struct PyRenewalModel {
    inner: vofrac::renewal::RenewalModel,
    plan: ContourPlan,
}

#[pymethods]
impl PyRenewalModel {
    #[new]
    #[pyo3(signature = (order, lam, plan = None))]
    fn new(py: Python<'_>, order: PyOrderFunction, lam: f64, plan: Option<PyContourPlan>) -> PyResult<Self> {
        let plan = plan_or(plan.as_ref(), ContourPlan::default());
        let inner = py
            .detach(|| {
                vofrac::renewal::RenewalModel::new(&order.inner, lam, &plan, &vofrac::order::log_grid(1e-4, 1e3, 200))
            })
            .map_err(to_py)?;
        Ok(Self { inner, plan })
    }

    /// `P(N(t) = k)` at each of `ts`.
    fn pmf(&self, py: Python<'_>, k: usize, ts: Vec<f64>) -> PyResult<Vec<f64>> {
        py.detach(|| pmf(&self.inner, k, &ts, &self.plan)).map(|f| f.values().to_vec()).map_err(to_py)
    }

    /// Rows `p_0..p_K` truncated once the mass left is below 1e-6.
    #[pyo3(signature = (ts, k_min = 0))]
    fn pmf_table(&self, py: Python<'_>, ts: Vec<f64>, k_min: usize) -> PyResult<Vec<Vec<f64>>> {
        py.detach(|| pmf_table(&self.inner, &ts, k_min, &self.plan)).map(|t| t.rows).map_err(to_py)
    }

    /// `E[N(N−1)…(N−r+1)]` at each of `ts`.
    fn factorial_moment(&self, py: Python<'_>, r: usize, ts: Vec<f64>) -> PyResult<Vec<f64>> {
        py.detach(|| factorial_moment(&self.inner, r, &ts, &self.plan)).map(|f| f.values().to_vec()).map_err(to_py)
    }

    /// `P(T_k ≤ t)` at each of `ts`.
    fn epoch_cdf(&self, py: Python<'_>, k: usize, ts: Vec<f64>) -> PyResult<Vec<f64>> {
        py.detach(|| epoch_cdf(&self.inner, k, &ts, &self.plan)).map(|f| f.values().to_vec()).map_err(to_py)
    }

    /// Monte Carlo counts at the sorted `times`, one row per path.
    fn simulate_counts(&self, py: Python<'_>, times: Vec<f64>, n_paths: usize, seed: u64) -> PyResult<Vec<Vec<u64>>> {
        py.detach(|| simulate_counts(&self.inner, &times, n_paths, seed)).map_err(to_py)
    }

    /// One interarrival quantile `u_A⁻¹(level)`.
    fn quantile(&self, level: f64) -> PyResult<f64> {
        if !(level > 0.0 && level < 1.0) {
            return Err(PyValueError::new_err(format!("level must lie in (0, 1), got {level}")));
        }
        Ok(self.inner.sampler.quantile(level))
    }
}

/// Mittag-Leffler function `E^γ_{α,β}(x)`.
#[pyfunction]
#[pyo3(signature = (alpha, x, beta = 1.0, gamma = 1.0))]
fn mittag_leffler(alpha: f64, x: f64, beta: f64, gamma: f64) -> PyResult<f64> {
    if beta == 1.0 && gamma == 1.0 && alpha <= 1.0 && x <= 0.0 {
        return ml1(alpha, x).map_err(to_py);
    }
    ml3(MlParams::new(alpha, beta, gamma).map_err(to_py)?, x).map_err(to_py)
}

/// Kernel pair `(φ_A, ψ_A)` sampled at `ts`.
#[pyfunction]
#[pyo3(signature = (order, ts, plan = None))]
fn kernels(
    py: Python<'_>,
    order: PyOrderFunction,
    ts: Vec<f64>,
    plan: Option<PyContourPlan>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let plan = plan_or(plan.as_ref(), ContourPlan::default());
    let pair = py.detach(|| kernel_pair(&order.inner, &plan, &ts)).map_err(to_py)?;
    Ok((pair.phi.values().to_vec(), pair.psi.values().to_vec()))
}

/// Relaxation function `u_A` and its derivative at `ts`.
#[pyfunction]
#[pyo3(signature = (order, lam, ts, plan = None))]
fn relax(
    py: Python<'_>,
    order: PyOrderFunction,
    lam: f64,
    ts: Vec<f64>,
    plan: Option<PyContourPlan>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let plan = plan_or(plan.as_ref(), ContourPlan::default());
    let sol = py.detach(|| solve(&order.inner, lam, &plan, &ts)).map_err(to_py)?;
    Ok((sol.u.values().to_vec(), sol.du.values().to_vec()))
}

/// `Cov[N(t₁), N(t₂)]` for each pair.
#[pyfunction]
#[pyo3(signature = (order, lam, pairs, plan = None))]
fn covariance(
    py: Python<'_>,
    order: PyOrderFunction,
    lam: f64,
    pairs: Vec<(f64, f64)>,
    plan: Option<PyContourPlan>,
) -> PyResult<Vec<f64>> {
    let plan = plan_or(plan.as_ref(), ContourPlan::double_default());
    py.detach(|| cov_vo(&order.inner, lam, &pairs, &plan)).map(|g| g.values).map_err(to_py)
}

/// Closed-form covariance of the fractional Poisson process.
#[pyfunction]
fn cov_const_order(alpha: f64, lam: f64, t1: f64, t2: f64) -> PyResult<f64> {
    cov_const(alpha, lam, t1, t2).map_err(to_py)
}

/// Empirical chf of the rescaled CTRW against its limit, as a dict.
#[pyfunction]
#[pyo3(signature = (order, lam, beta, jump, t, kappas, ladder, n_paths, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn ctrw_limit<'py>(
    py: Python<'py>,
    order: PyOrderFunction,
    lam: f64,
    beta: f64,
    jump: &str,
    t: f64,
    kappas: Vec<f64>,
    ladder: Vec<f64>,
    n_paths: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let jump: JumpLaw = serde_json::from_value(serde_json::Value::String(jump.to_owned())).map_err(|_| {
        PyValueError::new_err(format!("jump must be gaussian, pareto-symmetric or stable, got {jump:?}"))
    })?;
    let scale = *ladder.first().unwrap_or(&1.0);
    let cfg = CtrwConfig::new(order.inner, lam, beta, scale, jump).map_err(to_py)?;
    let report = py.detach(|| limit_experiment(&cfg, t, &kappas, &ladder, n_paths, seed)).map_err(to_py)?;
    let text = serde_json::to_string(&report).expect("reports serialize");
    py.import("json")?.call_method1("loads", (text,))
}

/// Runs a CLI command on a JSON configuration and returns `{file name: contents}`
/// without touching the filesystem.
#[pyfunction]
fn run<'py>(py: Python<'py>, command: &str, config_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let cmd = *Command::ALL
        .iter()
        .find(|c| c.name() == command)
        .ok_or_else(|| PyValueError::new_err(format!("unknown command {command:?}")))?;
    let cfg = RunConfig::from_json(config_json).map_err(to_py)?;
    let artifacts = py.detach(|| run_command(cmd, &cfg)).map_err(to_py)?;
    let out = PyDict::new(py);
    for a in artifacts {
        out.set_item(a.file_name, a.contents)?;
    }
    Ok(out)
}

#[pymodule]
#[pyo3(name = "vofrac")]
fn vofrac_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("VofracError", m.py().get_type::<VofracError>())?;
    m.add("InversionError", m.py().get_type::<InversionError>())?;
    m.add("BudgetError", m.py().get_type::<BudgetError>())?;
    m.add_class::<PyOrderFunction>()?;
    m.add_class::<PyContourPlan>()?;
    m.add_class::<PyRenewalModel>()?;
    m.add_function(wrap_pyfunction!(mittag_leffler, m)?)?;
    m.add_function(wrap_pyfunction!(kernels, m)?)?;
    m.add_function(wrap_pyfunction!(relax, m)?)?;
    m.add_function(wrap_pyfunction!(covariance, m)?)?;
    m.add_function(wrap_pyfunction!(cov_const_order, m)?)?;
    m.add_function(wrap_pyfunction!(ctrw_limit, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
