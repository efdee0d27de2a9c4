use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use safecontract_core::oracle;
use safecontract_core::scheduler::{Assignment, InspectionSchedule};
use safecontract_core::{
    agent_best_response, allocate as core_allocate, min_beta, needs_inspection, solve_single,
    sweep_parameter, AgentSpec, AllocationProblem, BetaCurve, Contract, Error, Resolution,
    Response, SingleSolution, SweepParam, UtilityCurve,
};

create_exception!(
    safecontract,
    InfeasibleError,
    PyException,
    "The instance admits no safe contract or allocation."
);

fn to_py(e: Error) -> PyErr {
    if e.is_infeasible() {
        InfeasibleError::new_err(e.to_string())
    } else if e.is_invalid_input() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Optimal contract: payment share, inspection probability, implemented
/// action (0-based) and principal utility.
#[pyclass(name = "Solution", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PySolution {
    gamma: f64,
    beta: f64,
    action: usize,
    utility: f64,
}

impl From<SingleSolution> for PySolution {
    fn from(s: SingleSolution) -> Self {
        PySolution {
            gamma: s.contract.gamma,
            beta: s.contract.beta,
            action: s.action,
            utility: s.utility,
        }
    }
}

#[pymethods]
impl PySolution {
    fn __repr__(&self) -> String {
        format!(
            "Solution(gamma={}, beta={}, action={}, utility={})",
            self.gamma, self.beta, self.action, self.utility
        )
    }
}

#[pyclass(name = "Agent", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyAgent {
    inner: AgentSpec,
}

#[pymethods]
impl PyAgent {
    #[new]
    #[pyo3(signature = (rewards, costs, kappa_s, kappa_i, alpha = 0.0))]
    fn new(
        rewards: Vec<f64>,
        costs: Vec<f64>,
        kappa_s: f64,
        kappa_i: f64,
        alpha: f64,
    ) -> PyResult<Self> {
        let inner =
            AgentSpec::from_parts(&rewards, &costs, kappa_s, kappa_i, alpha).map_err(to_py)?;
        Ok(PyAgent { inner })
    }

    #[getter]
    fn kappa_s(&self) -> f64 {
        self.inner.kappa_s()
    }

    #[getter]
    fn kappa_i(&self) -> f64 {
        self.inner.kappa_i()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    fn needs_inspection(&self) -> bool {
        needs_inspection(&self.inner)
    }

    fn solve(&self) -> PyResult<PySolution> {
        solve_single(&self.inner).map(Into::into).map_err(to_py)
    }

    /// Smallest inspection probability that keeps the agent safe at `gamma`.
    fn beta(&self, gamma: f64) -> PyResult<f64> {
        BetaCurve::new(&self.inner)
            .and_then(|c| c.beta_at(gamma))
            .map_err(to_py)
    }

    fn gamma_ir(&self) -> PyResult<f64> {
        BetaCurve::new(&self.inner)
            .map(|c| c.gamma_ir())
            .map_err(to_py)
    }

    fn min_beta(&self) -> PyResult<f64> {
        min_beta(&self.inner).map_err(to_py)
    }

    /// Best principal utility when inspection is capped at `beta_bar`.
    fn utility_at(&self, beta_bar: f64) -> PyResult<f64> {
        UtilityCurve::new(&self.inner)
            .and_then(|c| c.utility_at(beta_bar))
            .map_err(to_py)
    }

    /// `(action, safe)` chosen under the contract, or `None` if the agent
    /// declines it.
    fn best_response(&self, gamma: f64, beta: f64) -> PyResult<Option<(usize, bool)>> {
        let contract = Contract::new(gamma, beta).map_err(to_py)?;
        Ok(match agent_best_response(&self.inner, contract) {
            Response::Accept { action, safe } => Some((action, safe)),
            Response::Reject => None,
        })
    }

    /// Re-solves for each value of `param` ("kappa_i", "kappa_s" or "alpha").
    /// Infeasible values give `None`.
    fn sweep(&self, param: &str, values: Vec<f64>) -> PyResult<Vec<Option<PySolution>>> {
        let param: SweepParam = param.parse().map_err(to_py)?;
        sweep_parameter(&self.inner, param, &values)
            .into_iter()
            .map(|row| match row.result {
                Ok(s) => Ok(Some(s.into())),
                Err(e) if e.is_infeasible() => Ok(None),
                Err(e) => Err(to_py(e)),
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Agent(n_actions={}, kappa_s={}, kappa_i={}, alpha={})",
            self.inner.actions().len(),
            self.inner.kappa_s(),
            self.inner.kappa_i(),
            self.inner.alpha()
        )
    }
}

#[pyclass(name = "Allocation", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyAllocation {
    caps: Vec<f64>,
    contracts: Vec<(f64, f64)>,
    actions: Vec<usize>,
    utilities: Vec<f64>,
    total_utility: f64,
    gap_bound: f64,
    delta: f64,
}

/// Splits `budget` inspectors across the agents. Pass either `delta` (grid
/// step) or `epsilon` (relative accuracy); the default is `delta=0.01`.
#[pyfunction]
#[pyo3(signature = (agents, budget, delta = None, epsilon = None))]
fn allocate(
    py: Python<'_>,
    agents: Vec<PyRef<'_, PyAgent>>,
    budget: u32,
    delta: Option<f64>,
    epsilon: Option<f64>,
) -> PyResult<PyAllocation> {
    let resolution = match (delta, epsilon) {
        (Some(_), Some(_)) => return Err(PyValueError::new_err("pass delta or epsilon, not both")),
        (_, Some(e)) => Resolution::Epsilon(e),
        (d, None) => Resolution::Delta(d.unwrap_or(0.01)),
    };
    let problem = AllocationProblem::new(
        agents.iter().map(|a| a.inner.clone()).collect(),
        budget,
        resolution,
    );
    let a = py.detach(|| core_allocate(&problem)).map_err(to_py)?;
    Ok(PyAllocation {
        caps: a.caps(),
        contracts: a
            .agents
            .iter()
            .map(|r| (r.contract.gamma, r.contract.beta))
            .collect(),
        actions: a.agents.iter().map(|r| r.action).collect(),
        utilities: a.agents.iter().map(|r| r.utility).collect(),
        total_utility: a.total_utility,
        gap_bound: a.gap_bound,
        delta: a.delta,
    })
}

#[pyclass(name = "Schedule", frozen, skip_from_py_object)]
struct PySchedule {
    inner: InspectionSchedule,
}

#[pymethods]
impl PySchedule {
    #[new]
    fn new(targets: Vec<f64>, budget: u32) -> PyResult<Self> {
        let inner = InspectionSchedule::new(&targets, budget).map_err(to_py)?;
        Ok(PySchedule { inner })
    }

    fn exact_marginals(&self) -> Vec<f64> {
        self.inner.exact_marginals()
    }

    /// Agent picked by each inspector, `None` for an idle inspector.
    fn sample(&self, seed: u64) -> Vec<Option<usize>> {
        self.inner
            .sample(seed)
            .into_iter()
            .map(|a| match a {
                Assignment::Agent(l) => Some(l),
                Assignment::Idle => None,
            })
            .collect()
    }

    #[getter]
    fn boundaries(&self) -> Vec<Option<usize>> {
        self.inner.boundaries().to_vec()
    }
}

/// Grid search for the best safe contract: `(gamma, beta, utility)`.
#[pyfunction]
fn brute_force_single(
    py: Python<'_>,
    agent: PyRef<'_, PyAgent>,
    step: f64,
) -> PyResult<(f64, f64, f64)> {
    let spec = agent.inner.clone();
    let (c, u) = py
        .detach(|| oracle::brute_force_single(&spec, step))
        .map_err(to_py)?;
    Ok((c.gamma, c.beta, u))
}

#[pymodule]
fn safecontract(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_class::<PyAgent>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyAllocation>()?;
    m.add_class::<PySchedule>()?;
    m.add_function(wrap_pyfunction!(allocate, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_single, m)?)?;
    Ok(())
}
