//! Python bindings: `import afpo`.

use std::path::PathBuf;

use afpo_core::app::{self, Overrides};
use afpo_core::dist::{self, CompoundPoissonSpec, LatticeDistribution, KMAX_CAP};
use afpo_core::preferences::DisutilityModel;
use afpo_core::solver::{self, Pool as CorePool, SharingRule, SolverSettings, WeightVector};
use afpo_core::stochorder::{self, DiscreteCdf};
use afpo_core::{oracles, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) | Error::Solver { .. } | Error::Io { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn weights(v: Vec<f64>) -> PyResult<WeightVector> {
    WeightVector::new(v).map_err(to_py)
}

/// Probability mass function on the lattice `{0, δ, 2δ, …}`.
#[pyclass(name = "Distribution", module = "afpo", frozen, from_py_object)]
#[derive(Clone)]
struct PyDistribution(LatticeDistribution);

#[pymethods]
impl PyDistribution {
    #[new]
    #[pyo3(signature = (pmf, step = 1.0, name = "x"))]
    fn new(pmf: Vec<f64>, step: f64, name: &str) -> PyResult<Self> {
        LatticeDistribution::new(step, pmf, name).map(Self).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (r, q, k_max = KMAX_CAP))]
    fn negbinom(r: u32, q: f64, k_max: usize) -> PyResult<Self> {
        dist::negbinom_pmf(r, q, k_max).map(Self).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (lam, severity, cap = KMAX_CAP))]
    fn compound_poisson(lam: f64, severity: &PyDistribution, cap: usize) -> PyResult<Self> {
        let spec = CompoundPoissonSpec::new(lam, severity.0.clone()).map_err(to_py)?;
        dist::compound_poisson_auto(&spec, cap).map(Self).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (shape, rate, delta = 1.0, k_max = KMAX_CAP))]
    fn gamma(shape: f64, rate: f64, delta: f64, k_max: usize) -> PyResult<Self> {
        dist::discretize_gamma(shape, rate, delta, k_max).map(Self).map_err(to_py)
    }

    #[getter]
    fn step(&self) -> f64 {
        self.0.step()
    }

    #[getter]
    fn pmf(&self) -> Vec<f64> {
        self.0.pmf().to_vec()
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn max_support(&self) -> f64 {
        self.0.max_support()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn variance(&self) -> f64 {
        self.0.variance()
    }

    fn cdf(&self) -> Vec<f64> {
        self.0.cdf()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Distribution(name={:?}, step={}, points={}, mean={})", self.0.name(), self.0.step(), self.0.len(), self.0.mean())
    }
}

/// Loss-side preferences.
#[pyclass(name = "Disutility", module = "afpo", frozen, from_py_object)]
#[derive(Clone)]
struct PyDisutility(DisutilityModel);

#[pymethods]
impl PyDisutility {
    /// `v′(s) = s^σ`.
    #[staticmethod]
    fn crra(sigma: f64) -> PyResult<Self> {
        DisutilityModel::crra(sigma).map(Self).map_err(to_py)
    }

    /// `v′(s) = exp(s/γ) − 1`.
    #[staticmethod]
    fn exp(gamma: f64) -> PyResult<Self> {
        DisutilityModel::exp_type(gamma).map(Self).map_err(to_py)
    }

    fn marginal(&self, s: f64) -> PyResult<f64> {
        self.0.marginal(s).map_err(to_py)
    }

    fn inverse_marginal(&self, z: f64) -> PyResult<f64> {
        if !(z >= 0.0) {
            return Err(PyValueError::new_err("z must be non-negative"));
        }
        Ok(self.0.inverse_marginal(z))
    }

    fn risk_tolerance(&self, s: f64) -> PyResult<f64> {
        self.0.risk_tolerance(s).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Disutility({})", self.0.describe())
    }
}

/// Result of the fixed-point iteration.
#[pyclass(name = "Solution", module = "afpo", frozen, get_all)]
struct PySolution {
    names: Vec<String>,
    step: f64,
    alpha: Vec<f64>,
    h: Vec<Vec<f64>>,
    converged: bool,
    iterations: usize,
    distance_trace: Vec<f64>,
    hilbert_trace: Vec<f64>,
    eigen_residual: f64,
    fairness_residuals: Vec<f64>,
    allocation_residual: f64,
}

impl PySolution {
    fn new(rule: SharingRule, report: solver::FixedPointReport) -> Self {
        Self {
            names: rule.names,
            step: rule.step,
            alpha: rule.alpha.into_vec(),
            h: rule.h,
            converged: report.converged,
            iterations: report.iterations,
            distance_trace: report.distance_trace,
            hilbert_trace: report.hilbert_trace,
            eigen_residual: report.eigen_residual,
            fairness_residuals: rule.fairness_residuals,
            allocation_residual: rule.allocation_residual,
        }
    }
}

#[pymethods]
impl PySolution {
    fn __repr__(&self) -> String {
        format!(
            "Solution(converged={}, iterations={}, alpha={:?})",
            if self.converged { "True" } else { "False" },
            self.iterations,
            self.alpha
        )
    }
}

/// Participants with their losses and preferences.
#[pyclass(name = "Pool", module = "afpo", frozen)]
struct PyPool(CorePool);

#[pymethods]
impl PyPool {
    /// `members`: sequence of `(name, Distribution, Disutility)`.
    #[new]
    fn new(members: Vec<(String, PyDistribution, PyDisutility)>) -> PyResult<Self> {
        let members = members.into_iter().map(|(n, d, m)| (n, d.0, m.0)).collect();
        CorePool::new(members).map(Self).map_err(to_py)
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.0.names()
    }

    #[getter]
    fn expected_losses(&self) -> Vec<f64> {
        self.0.expected_losses()
    }

    #[getter]
    fn aggregate(&self) -> PyDistribution {
        PyDistribution(self.0.aggregate().clone())
    }

    #[pyo3(signature = (epsilon = 1e-14, max_iter = 200, initial = None))]
    fn solve(&self, py: Python<'_>, epsilon: f64, max_iter: usize, initial: Option<Vec<f64>>) -> PyResult<PySolution> {
        let initial = initial.map(weights).transpose()?;
        let settings = SolverSettings { epsilon, max_iter, initial };
        let (rule, report) = py.detach(|| solver::iterate(&self.0, &settings)).map_err(to_py)?;
        Ok(PySolution::new(rule, report))
    }

    /// `φ(α)`, the un-normalized composite map.
    fn phi(&self, alpha: Vec<f64>) -> PyResult<Vec<f64>> {
        solver::phi(&weights(alpha)?, &self.0).map(WeightVector::into_vec).map_err(to_py)
    }

    /// `ψ(α) = φ(α)/‖φ(α)‖₁`.
    fn psi(&self, alpha: Vec<f64>) -> PyResult<Vec<f64>> {
        solver::psi(&weights(alpha)?, &self.0).map(WeightVector::into_vec).map_err(to_py)
    }

    /// Returns `(holds, worst_ratio)` over random simplex pairs.
    #[pyo3(signature = (samples = 100, seed = 0))]
    fn verify_contraction(&self, py: Python<'_>, samples: usize, seed: u64) -> PyResult<(bool, f64)> {
        let r = py.detach(|| solver::verify_contraction(&self.0, samples, seed)).map_err(to_py)?;
        Ok((r.holds, r.worst_ratio))
    }
}

#[pyfunction]
fn hilbert_distance(w: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    solver::hilbert_distance(&weights(w)?, &weights(y)?).map_err(to_py)
}

#[pyfunction]
fn convolve(a: &PyDistribution, b: &PyDistribution) -> PyResult<PyDistribution> {
    dist::convolve(&a.0, &b.0).map(PyDistribution).map_err(to_py)
}

#[pyfunction]
fn aggregate(laws: Vec<PyDistribution>) -> PyResult<PyDistribution> {
    let laws: Vec<LatticeDistribution> = laws.into_iter().map(|d| d.0).collect();
    dist::aggregate(&laws).map(PyDistribution).map_err(to_py)
}

/// Closed form for two CRRA participants with `σ₂ = 2σ₁`; returns a dict
/// with `a`, `alpha_tilde`, and the shares `h1`, `h2` on the lattice of `s`.
#[pyfunction]
fn two_crra_solution<'py>(py: Python<'py>, sigma1: f64, s: &PyDistribution, ex2: f64) -> PyResult<Bound<'py, PyDict>> {
    let sol = oracles::two_crra_solution(sigma1, &s.0, ex2).map_err(to_py)?;
    let grid: Vec<f64> = (0..s.0.len()).map(|k| s.0.value(k)).collect();
    let out = PyDict::new(py);
    out.set_item("a", sol.a)?;
    out.set_item("alpha_tilde", sol.alpha_tilde.to_vec())?;
    out.set_item("h1", grid.iter().map(|x| sol.h1(*x)).collect::<Vec<_>>())?;
    out.set_item("h2", grid.iter().map(|x| sol.h2(*x)).collect::<Vec<_>>())?;
    Ok(out)
}

fn verdict_name(v: stochorder::Verdict) -> &'static str {
    match v {
        stochorder::Verdict::CxSmaller => "cx-smaller",
        stochorder::Verdict::CxLarger => "cx-larger",
        stochorder::Verdict::Inconclusive => "inconclusive",
        stochorder::Verdict::Equal => "equal",
    }
}

/// Sign changes of `G − F` for the laws of `h_f(S_f)` and `h_g(S_g)`.
#[pyfunction]
#[pyo3(signature = (h_f, s_f, h_g, s_g, tol = stochorder::TIE_TOL, mean_tol = None))]
fn compare_shares<'py>(
    py: Python<'py>,
    h_f: Vec<f64>,
    s_f: &PyDistribution,
    h_g: Vec<f64>,
    s_g: &PyDistribution,
    tol: f64,
    mean_tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let f: DiscreteCdf = stochorder::pushforward_cdf(&h_f, &s_f.0).map_err(to_py)?;
    let g: DiscreteCdf = stochorder::pushforward_cdf(&h_g, &s_g.0).map_err(to_py)?;
    let options = stochorder::CrossingOptions {
        tol,
        mean_tol: mean_tol.unwrap_or(10.0 * s_f.0.step()),
        evaluation: stochorder::Evaluation::Linear,
    };
    let r = stochorder::count_sign_changes_with(&f, &g, &options);
    let out = PyDict::new(py);
    out.set_item("sign_changes", r.sign_changes)?;
    out.set_item("crossing_locations", r.crossing_locations)?;
    out.set_item("verdict", verdict_name(r.verdict))?;
    out.set_item("mean_gap", r.mean_gap)?;
    Ok(out)
}

/// Runs the `solve` command on a TOML config; returns `(converged, report_path)`.
#[pyfunction]
#[pyo3(signature = (config, emit_cdf = false))]
fn solve_config(py: Python<'_>, config: PathBuf, emit_cdf: bool) -> PyResult<(bool, PathBuf)> {
    let overrides = Overrides { emit_cdf: emit_cdf.then_some(None), ..Overrides::default() };
    let out = py.detach(|| app::run_solve(&config, &overrides)).map_err(to_py)?;
    Ok((out.converged, out.report))
}

#[pymodule]
fn afpo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyDisutility>()?;
    m.add_class::<PyPool>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(hilbert_distance, m)?)?;
    m.add_function(wrap_pyfunction!(convolve, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate, m)?)?;
    m.add_function(wrap_pyfunction!(two_crra_solution, m)?)?;
    m.add_function(wrap_pyfunction!(compare_shares, m)?)?;
    m.add_function(wrap_pyfunction!(solve_config, m)?)?;
    Ok(())
}
