//! Python bindings. Records (solutions, verdicts, reports, sweep results)
//! cross the boundary as plain dicts and lists.

use fjsp_stnu::calibrate::{self, SweepConfig};
use fjsp_stnu::dc;
use fjsp_stnu::instance::{self, Alpha, BoundsConvention, DeadlineMode, DeadlineSpec, Tu, UncertaintyModel};
use fjsp_stnu::rte::{self, ExecutionPolicy};
use fjsp_stnu::sim::{self, Sampler};
use fjsp_stnu::solver::{self, ObjectiveWeights, SolveConfig};
use fjsp_stnu::stnu;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pythonize::pythonize;
use serde::Serialize;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<PyObject> {
    Ok(pythonize(py, v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?.unbind())
}

fn parse_alpha(a: &str) -> PyResult<Alpha> {
    a.parse().map_err(value_err)
}

fn parse_mode(m: &str) -> PyResult<DeadlineMode> {
    match m {
        "soft" => Ok(DeadlineMode::Soft),
        "hard" => Ok(DeadlineMode::Hard),
        other => Err(value_err(format!("unknown mode {other:?}"))),
    }
}

fn uncertainty(alpha: &str, envelope: bool) -> PyResult<UncertaintyModel> {
    let c = if envelope { BoundsConvention::ModeEnvelope } else { BoundsConvention::PerMode };
    Ok(UncertaintyModel::new(parse_alpha(alpha)?).with_convention(c))
}

/// A flexible job shop instance.
#[pyclass(frozen)]
#[derive(Clone)]
struct Instance(instance::Instance);

#[pymethods]
impl Instance {
    /// Parses .fjs text.
    #[staticmethod]
    fn from_fjs(text: &str) -> PyResult<Self> {
        instance::parse_fjs(text).map(Instance).map_err(value_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| value_err(format!("{path}: {e}")))?;
        Self::from_fjs(&text)
    }

    fn to_fjs(&self) -> String {
        instance::to_fjs(&self.0)
    }

    #[getter]
    fn job_count(&self) -> usize {
        self.0.job_count()
    }

    #[getter]
    fn machine_count(&self) -> usize {
        self.0.machine_count()
    }

    #[getter]
    fn task_count(&self) -> usize {
        self.0.task_count()
    }

    /// Per-job deadlines `sum of minimum lower bounds + delta`.
    #[pyo3(signature = (alpha, delta, envelope=false))]
    fn deadlines(&self, alpha: &str, delta: Tu, envelope: bool) -> PyResult<Vec<Tu>> {
        let u = uncertainty(alpha, envelope)?;
        Ok(DeadlineSpec::derive(&self.0, &u, DeadlineMode::Soft, delta).per_job)
    }

    /// Critical slack: the largest per-job duration spread.
    #[pyo3(signature = (alpha, envelope=false))]
    fn delta_star(&self, alpha: &str, envelope: bool) -> PyResult<Tu> {
        Ok(calibrate::delta_star(&self.0, &uncertainty(alpha, envelope)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(jobs={}, machines={}, tasks={})",
            self.0.job_count(),
            self.0.machine_count(),
            self.0.task_count()
        )
    }
}

/// A solved schedule.
#[pyclass(frozen)]
#[derive(Clone)]
struct Solution(solver::Solution);

#[pymethods]
impl Solution {
    #[getter]
    fn makespan(&self) -> Tu {
        self.0.makespan
    }

    #[getter]
    fn objective_value(&self) -> i64 {
        self.0.objective_value
    }

    #[getter]
    fn start(&self) -> Vec<Tu> {
        self.0.start.clone()
    }

    #[getter]
    fn job_completion(&self) -> Vec<Tu> {
        self.0.job_completion.clone()
    }

    /// (machine, duration) chosen for each task.
    #[getter]
    fn assignment(&self) -> Vec<(usize, Tu)> {
        self.0.assignment.iter().map(|m| (m.machine, m.duration)).collect()
    }

    #[getter]
    fn machine_sequences(&self) -> Vec<Vec<usize>> {
        self.0.machine_sequences.clone()
    }

    #[getter]
    fn optimal(&self) -> bool {
        self.0.optimal()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        solver::Solution::from_json(text).map(Solution).map_err(value_err)
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.0)
    }

    fn __repr__(&self) -> String {
        format!("Solution(makespan={}, objective={})", self.0.makespan, self.0.objective_value)
    }
}

/// A simple temporal network with uncertainty.
#[pyclass(frozen)]
#[derive(Clone)]
struct Stnu(stnu::Stnu);

#[pymethods]
impl Stnu {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        stnu::parse_stnu(text).map(Stnu).map_err(value_err)
    }

    fn to_text(&self) -> String {
        stnu::write_stnu(&self.0)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.0.node_count()
    }

    /// (lower, upper) per contingent link, in link order.
    #[getter]
    fn link_bounds(&self) -> Vec<(Tu, Tu)> {
        self.0.contingents.iter().map(|c| (c.lower, c.upper)).collect()
    }

    /// Copy with origin -> job finish arcs set to `deadlines`.
    fn with_deadline_arcs(&self, deadlines: Vec<Tu>) -> Self {
        Stnu(self.0.with_deadline_arcs(&deadlines))
    }

    fn __repr__(&self) -> String {
        format!(
            "Stnu(nodes={}, requirements={}, contingent={})",
            self.0.node_count(),
            self.0.requirements.len(),
            self.0.contingents.len()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (instance, alpha="0.5", delta=0, mode="soft", w_e=0, w_t=0, node_limit=200_000, time_limit=60.0, envelope=false))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    instance: &Instance,
    alpha: &str,
    delta: Tu,
    mode: &str,
    w_e: i64,
    w_t: i64,
    node_limit: u64,
    time_limit: f64,
    envelope: bool,
) -> PyResult<Solution> {
    let u = uncertainty(alpha, envelope)?;
    let d = DeadlineSpec::derive(&instance.0, &u, parse_mode(mode)?, delta);
    let mut cfg = SolveConfig::new(ObjectiveWeights::new(w_e, w_t), d);
    cfg.node_limit = node_limit;
    cfg.time_limit = std::time::Duration::from_secs_f64(time_limit);
    let inst = instance.0.clone();
    py.allow_threads(|| solver::solve(&inst, &cfg)).map(Solution).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
#[pyo3(signature = (solution, instance, alpha="0.5", delta=0, mode="soft", envelope=false))]
fn build_stnu(solution: &Solution, instance: &Instance, alpha: &str, delta: Tu, mode: &str, envelope: bool) -> PyResult<Stnu> {
    let u = uncertainty(alpha, envelope)?;
    let d = DeadlineSpec::derive(&instance.0, &u, parse_mode(mode)?, delta);
    stnu::build_stnu(&solution.0, &instance.0, &u, &d).map(Stnu).map_err(value_err)
}

/// Verdict dict: `controllable`, `witness` (None when controllable), `stats`.
#[pyfunction]
fn check_dc(py: Python<'_>, network: &Stnu) -> PyResult<PyObject> {
    let g = network.0.clone();
    let v = py.allow_threads(|| dc::check_dc(&g));
    to_py(py, &v)
}

fn dispatchable(network: &Stnu) -> PyResult<dc::DispatchableForm> {
    dc::dispatchable_form(&network.0).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

fn policy(p: &str) -> PyResult<ExecutionPolicy> {
    p.parse().map_err(value_err)
}

/// One online execution for a duration vector (one value per link).
#[pyfunction]
#[pyo3(signature = (network, durations, policy="earliest_feasible"))]
fn execute(py: Python<'_>, network: &Stnu, durations: Vec<Tu>, policy: &str) -> PyResult<PyObject> {
    let df = dispatchable(network)?;
    let t = rte::execute(&df, &durations, self::policy(policy)?).map_err(value_err)?;
    to_py(py, &t)
}

#[pyfunction]
#[pyo3(signature = (network, deadlines, samples=500, seed=0, policy="earliest_feasible", jobs=1))]
fn run_monte_carlo(
    py: Python<'_>,
    network: &Stnu,
    deadlines: Vec<Tu>,
    samples: usize,
    seed: u64,
    policy: &str,
    jobs: usize,
) -> PyResult<PyObject> {
    let df = dispatchable(network)?;
    let spec = DeadlineSpec::explicit(DeadlineMode::Soft, deadlines);
    let p = self::policy(policy)?;
    let (rep, _) = py
        .allow_threads(|| sim::run_monte_carlo_traces(&df, &spec, Sampler::uniform(seed), samples, p, jobs))
        .map_err(value_err)?;
    to_py(py, &rep)
}

/// Duration vectors as the Monte-Carlo driver would draw them.
#[pyfunction]
#[pyo3(signature = (network, n, seed=0))]
fn sample_durations(network: &Stnu, n: usize, seed: u64) -> Vec<Vec<Tu>> {
    sim::sample_durations(&network.0, Sampler::uniform(seed), n)
}

fn sweep_config(
    alphas: Option<Vec<String>>,
    delta_range: Option<(Tu, Tu, Tu)>,
    w_e_grid: Option<Vec<i64>>,
    w_t_grid: Option<Vec<i64>>,
    samples: usize,
    seed: u64,
    node_limit: u64,
    jobs: usize,
) -> PyResult<SweepConfig> {
    let mut cfg = SweepConfig { n_samples: samples, seed, node_limit, jobs, ..Default::default() };
    if let Some(a) = alphas {
        cfg.alphas = a.iter().map(|s| parse_alpha(s)).collect::<PyResult<_>>()?;
    }
    if let Some(r) = delta_range {
        cfg.delta_range = r;
    }
    if let Some(g) = w_e_grid {
        cfg.w_e_grid = g;
    }
    if let Some(g) = w_t_grid {
        cfg.w_t_grid = g;
    }
    cfg.validate().map_err(value_err)?;
    Ok(cfg)
}

/// Hard-mode feasibility and controllability over (alpha, delta).
#[pyfunction]
#[pyo3(signature = (instance, alphas=None, delta_range=None, node_limit=200_000, jobs=1))]
fn sweep_slack(
    py: Python<'_>,
    instance: &Instance,
    alphas: Option<Vec<String>>,
    delta_range: Option<(Tu, Tu, Tu)>,
    node_limit: u64,
    jobs: usize,
) -> PyResult<PyObject> {
    let cfg = sweep_config(alphas, delta_range, None, None, 1, 0, node_limit, jobs)?;
    let inst = instance.0.clone();
    let prof = py.allow_threads(|| calibrate::sweep_slack(&inst, &cfg)).map_err(value_err)?;
    to_py(py, &prof)
}

/// Soft-mode weight grid, Monte-Carlo per cell.
#[pyfunction]
#[pyo3(signature = (instance, alpha, delta_soft, w_e_grid=None, w_t_grid=None, samples=500, seed=0, node_limit=200_000, jobs=1))]
#[allow(clippy::too_many_arguments)]
fn sweep_weights(
    py: Python<'_>,
    instance: &Instance,
    alpha: &str,
    delta_soft: Tu,
    w_e_grid: Option<Vec<i64>>,
    w_t_grid: Option<Vec<i64>>,
    samples: usize,
    seed: u64,
    node_limit: u64,
    jobs: usize,
) -> PyResult<PyObject> {
    let cfg = sweep_config(None, None, w_e_grid, w_t_grid, samples, seed, node_limit, jobs)?;
    let u = uncertainty(alpha, false)?;
    let inst = instance.0.clone();
    let grid = py.allow_threads(|| calibrate::sweep_weights(&inst, &cfg, &u, delta_soft)).map_err(value_err)?;
    let front = calibrate::pareto_front(&grid).unwrap_or_default();
    let out = pyo3::types::PyDict::new_bound(py);
    out.set_item("grid", to_py(py, &grid)?)?;
    out.set_item("pareto", to_py(py, &front)?)?;
    Ok(out.into_any().unbind())
}

/// One schedule, evaluated for every alpha against fixed deadlines.
#[pyfunction]
#[pyo3(signature = (instance, w_e, w_t, delta_soft, base_alpha, alphas=None, samples=500, seed=0, node_limit=200_000, jobs=1))]
#[allow(clippy::too_many_arguments)]
fn robustness_profile(
    py: Python<'_>,
    instance: &Instance,
    w_e: i64,
    w_t: i64,
    delta_soft: Tu,
    base_alpha: &str,
    alphas: Option<Vec<String>>,
    samples: usize,
    seed: u64,
    node_limit: u64,
    jobs: usize,
) -> PyResult<PyObject> {
    let cfg = sweep_config(alphas, None, None, None, samples, seed, node_limit, jobs)?;
    let base = uncertainty(base_alpha, false)?;
    let inst = instance.0.clone();
    let prof = py
        .allow_threads(|| calibrate::robustness_profile(&inst, ObjectiveWeights::new(w_e, w_t), delta_soft, &cfg, &base))
        .map_err(value_err)?;
    to_py(py, &prof)
}

/// Least-squares line through `(x, y)` points: dict with slope,
/// intercept and r_squared.
#[pyfunction]
fn slack_regression(py: Python<'_>, points: Vec<(f64, f64)>) -> PyResult<PyObject> {
    let r = calibrate::slack_regression(&points).map_err(value_err)?;
    to_py(py, &r)
}

#[pymodule]
#[pyo3(name = "fjsp_stnu")]
fn fjsp_stnu_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_class::<Solution>()?;
    m.add_class::<Stnu>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(build_stnu, m)?)?;
    m.add_function(wrap_pyfunction!(check_dc, m)?)?;
    m.add_function(wrap_pyfunction!(execute, m)?)?;
    m.add_function(wrap_pyfunction!(run_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(sample_durations, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_slack, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_weights, m)?)?;
    m.add_function(wrap_pyfunction!(robustness_profile, m)?)?;
    m.add_function(wrap_pyfunction!(slack_regression, m)?)?;
    Ok(())
}
