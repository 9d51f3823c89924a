//! Python bindings for the sosim network simulator.
//!
//! The module mirrors the core workflow: build or load a network, solve
//! prices, allocate flows, run scenarios, and inspect supply curves. All
//! handles wrap the Rust types by value; networks are cheap to clone and
//! every operation is deterministic, so the bindings stay free of shared
//! mutable state.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sosim_core::{
    allocate, build_paper_scenario, flow_invariants, from_gml_string, parse_scenario,
    price_fixed_point, run, satisfied_fraction, to_gml_string, total_cost, validate_network, Cost,
    Demands, FlowState, PriceState, RoleMix, ScenarioSpec, SourceKind, REFERENCE_PRICE,
    RNG_ALGORITHM, SEVERITY_ORDER,
};

fn sim_err(e: sosim_core::SimError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A network of agents and infrastructure links.
#[pyclass(name = "Network")]
#[derive(Clone)]
struct PyNetwork {
    inner: sosim_core::Network,
}

#[pymethods]
impl PyNetwork {
    /// Three agents in a line: a raw provider, an intermediate producer,
    /// and a consumer that finishes its own goods.
    #[staticmethod]
    fn three_node_fixture() -> Self {
        PyNetwork {
            inner: sosim_core::validation_fixture_3node(),
        }
    }

    /// City-block fixture: providers, a power plant, three producers, and
    /// nine households behind a capacitated commercial spine.
    #[staticmethod]
    fn block_fixture() -> Self {
        PyNetwork {
            inner: sosim_core::block_fixture(),
        }
    }

    /// Random connected Erdos-Renyi network with the default role mix.
    #[staticmethod]
    #[pyo3(signature = (n, p, resources, seed))]
    fn erdos_renyi(n: usize, p: f64, resources: usize, seed: u64) -> PyResult<Self> {
        let net =
            sosim_core::erdos_renyi(n, p, &RoleMix::default(), resources, seed).map_err(sim_err)?;
        Ok(PyNetwork { inner: net })
    }

    /// Parses GML text; returns the network and any tolerated warnings.
    #[staticmethod]
    fn from_gml(text: &str) -> PyResult<(Self, Vec<String>)> {
        let (net, warnings) =
            from_gml_string(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok((PyNetwork { inner: net }, warnings))
    }

    /// Renders the network as GML text, byte-stable for equal networks.
    fn to_gml(&self) -> String {
        to_gml_string(&self.inner)
    }

    /// Structural problems, formatted "location: message"; empty if valid.
    fn validate(&self) -> Vec<String> {
        validate_network(&self.inner)
            .violations
            .iter()
            .map(|v| format!("{}: {}", v.location, v.message))
            .collect()
    }

    /// Final demand per agent id, including all-zero rows.
    fn final_demands(&self) -> BTreeMap<usize, Vec<f64>> {
        self.inner.final_demands()
    }

    #[getter]
    fn agent_count(&self) -> usize {
        self.inner.agents.len()
    }

    #[getter]
    fn link_count(&self) -> usize {
        self.inner.links.len()
    }

    #[getter]
    fn resource_names(&self) -> Vec<String> {
        self.inner.catalog.names().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(agents={}, links={}, resources={})",
            self.inner.agents.len(),
            self.inner.links.len(),
            self.inner.resources()
        )
    }
}

/// Converged sell costs and sourcing decisions for one network state.
#[pyclass(name = "Prices")]
struct PyPrices {
    inner: PriceState,
}

#[pymethods]
impl PyPrices {
    /// Unit cost at which the agent can supply the resource, or None when
    /// no finite-cost derivation exists.
    fn sell_cost(&self, agent: usize, resource: usize) -> Option<f64> {
        match self.inner.sell_cost(agent, resource) {
            Cost::Finite(c) => Some(c),
            Cost::Unavailable => None,
        }
    }

    /// Chosen source as (kind, unit_cost); kind is "make", "provider", or
    /// "link:<id>".
    fn decision(&self, agent: usize, resource: usize) -> Option<(String, f64)> {
        self.inner.decision(agent, resource).map(|d| {
            let kind = match d.kind {
                SourceKind::Make => "make".to_string(),
                SourceKind::Provider => "provider".to_string(),
                SourceKind::Edge(lid) => format!("link:{lid}"),
            };
            (kind, d.unit_cost)
        })
    }

    #[getter]
    fn agent_ids(&self) -> Vec<usize> {
        self.inner.agent_ids().to_vec()
    }

    #[getter]
    fn sweeps(&self) -> usize {
        self.inner.sweeps_used
    }
}

/// Rationed flows for one set of demands.
#[pyclass(name = "Allocation")]
struct PyAllocation {
    flow: FlowState,
    demands: Demands,
}

#[pymethods]
impl PyAllocation {
    #[getter]
    fn total_cost(&self) -> f64 {
        total_cost(&self.flow, &self.demands)
    }

    #[getter]
    fn total_shortfall(&self) -> f64 {
        self.flow.total_shortfall()
    }

    #[getter]
    fn rounds(&self) -> usize {
        self.flow.iterations
    }

    /// Final demand actually delivered to the agent for the resource.
    fn served(&self, agent: usize, resource: usize) -> f64 {
        self.flow.served(&self.demands, agent, resource)
    }

    fn shortfall(&self, agent: usize, resource: usize) -> f64 {
        self.flow.shortfall.get(&agent).map_or(0.0, |v| v[resource])
    }

    /// Quantity moving over the link for the resource.
    fn edge_flow(&self, link: usize, resource: usize) -> f64 {
        self.flow.edge_flow.get(&link).map_or(0.0, |v| v[resource])
    }

    /// Conservation and capacity violations against the given network;
    /// empty on every healthy allocation.
    fn check(&self, net: &PyNetwork) -> Vec<String> {
        flow_invariants(&net.inner, &self.demands, &self.flow)
    }
}

/// Deliverable quantity as a non-decreasing function of unit cost.
#[pyclass(name = "SupplyCurve")]
struct PySupplyCurve {
    inner: sosim_core::SupplyCurve,
}

#[pymethods]
impl PySupplyCurve {
    /// Cumulative (quantity, unit_cost) steps in ascending cost order.
    #[getter]
    fn steps(&self) -> Vec<(f64, f64)> {
        self.inner.steps.clone()
    }

    #[getter]
    fn total_demanded(&self) -> f64 {
        self.inner.total_demanded
    }

    #[getter]
    fn truncated(&self) -> bool {
        self.inner.truncated
    }

    /// Largest cumulative quantity deliverable at unit cost <= price.
    fn deliverable_at(&self, price: f64) -> f64 {
        self.inner.deliverable_at(price)
    }

    /// Fraction of total demand deliverable at unit cost <= price.
    fn satisfied_fraction(&self, price: f64) -> f64 {
        satisfied_fraction(&self.inner, price)
    }
}

/// Everything a scenario run produces.
#[pyclass(name = "RunResult")]
struct PyRunResult {
    inner: sosim_core::RunResult,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn scenario(&self) -> String {
        self.inner.scenario.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn config_hash(&self) -> String {
        self.inner.config_hash.clone()
    }

    /// Total delivered cost per timestep.
    #[getter]
    fn total_costs(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.total_cost).collect()
    }

    /// Unserved final demand per timestep.
    #[getter]
    fn total_shortfalls(&self) -> Vec<f64> {
        self.inner
            .records
            .iter()
            .map(|r| r.total_shortfall)
            .collect()
    }

    /// Total delivered cost at the last timestep.
    #[getter]
    fn final_total_cost(&self) -> f64 {
        self.inner.records.last().map_or(0.0, |r| r.total_cost)
    }

    /// Supply curve swept on the final network state.
    #[getter]
    fn curve(&self) -> PySupplyCurve {
        PySupplyCurve {
            inner: self.inner.curve.clone(),
        }
    }
}

/// Solves the self-organized price fixed point for a network.
#[pyfunction(name = "solve_prices")]
fn solve_prices(net: &PyNetwork) -> PyResult<PyPrices> {
    let inner = price_fixed_point(&net.inner).map_err(sim_err)?;
    Ok(PyPrices { inner })
}

/// Allocates flows for the given demands (agent id -> per-resource
/// quantities); defaults to the network's built-in final demands.
#[pyfunction(name = "allocate")]
#[pyo3(signature = (net, demands = None))]
fn py_allocate(net: &PyNetwork, demands: Option<Demands>) -> PyResult<PyAllocation> {
    let demands = demands.unwrap_or_else(|| net.inner.final_demands());
    let flow = allocate(&net.inner, &demands).map_err(sim_err)?;
    Ok(PyAllocation { flow, demands })
}

/// Runs an undisrupted scenario over the given horizon.
#[pyfunction(name = "run_stationary")]
#[pyo3(signature = (net, horizon = 1, name = "stationary"))]
fn run_stationary(net: &PyNetwork, horizon: usize, name: &str) -> PyResult<PyRunResult> {
    let spec = ScenarioSpec::stationary(name, horizon);
    let inner = run(&net.inner, &spec).map_err(sim_err)?;
    Ok(PyRunResult { inner })
}

/// Runs one of the eight numbered disruption scenarios against the
/// network; `severity_order()` lists their ids from mild to heavy.
#[pyfunction(name = "run_severity_scenario")]
fn run_severity_scenario(net: &PyNetwork, id: usize) -> PyResult<PyRunResult> {
    let spec = build_paper_scenario(id, &net.inner).map_err(sim_err)?;
    let inner = run(&net.inner, &spec).map_err(sim_err)?;
    Ok(PyRunResult { inner })
}

/// Runs a scenario described as TOML text (same schema as the CLI).
#[pyfunction(name = "run_scenario_toml")]
fn run_scenario_toml(net: &PyNetwork, text: &str) -> PyResult<PyRunResult> {
    let spec = parse_scenario(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let inner = run(&net.inner, &spec).map_err(sim_err)?;
    Ok(PyRunResult { inner })
}

/// Scenario ids ordered from mildest to heaviest total-cost impact.
#[pyfunction]
fn severity_order() -> Vec<usize> {
    SEVERITY_ORDER.to_vec()
}

#[pyfunction]
fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

#[pymodule]
fn sosim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyPrices>()?;
    m.add_class::<PyAllocation>()?;
    m.add_class::<PySupplyCurve>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(solve_prices, m)?)?;
    m.add_function(wrap_pyfunction!(py_allocate, m)?)?;
    m.add_function(wrap_pyfunction!(run_stationary, m)?)?;
    m.add_function(wrap_pyfunction!(run_severity_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario_toml, m)?)?;
    m.add_function(wrap_pyfunction!(severity_order, m)?)?;
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add("REFERENCE_PRICE", REFERENCE_PRICE)?;
    m.add("RNG_ALGORITHM", RNG_ALGORITHM)?;
    Ok(())
}
