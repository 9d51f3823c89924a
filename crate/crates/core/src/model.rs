//! Core data model: resources, technology matrices, agents, links, and the
//! network container, plus structural validation.
//!
//! A network is immutable once validated; disruptions and scenarios work on
//! copies. All id-keyed collections are `BTreeMap`s so iteration order is
//! the id order and every downstream computation is deterministic.

use std::collections::BTreeMap;
use std::fmt;

/// A per-resource unit cost that may be unavailable. Brokenness is a
/// distinct marker, never a floating-point infinity sentinel, so arithmetic
/// on finite costs can assume finiteness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cost {
    Finite(f64),
    Unavailable,
}

impl Cost {
    pub fn is_available(self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Cost::Finite(v) => Some(v),
            Cost::Unavailable => None,
        }
    }

    /// Adds two costs; any unavailable operand poisons the sum.
    pub fn plus(self, other: Cost) -> Cost {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite(a + b),
            _ => Cost::Unavailable,
        }
    }

    /// Minimum where Unavailable is the identity (acts as +infinity).
    pub fn min_with(self, other: Cost) -> Cost {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite(a.min(b)),
            (Cost::Finite(a), Cost::Unavailable) => Cost::Finite(a),
            (Cost::Unavailable, b) => b,
        }
    }

    /// True when `self` is strictly cheaper than `other`; any finite cost
    /// beats Unavailable.
    pub fn cheaper_than(self, other: Cost) -> bool {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => a < b,
            (Cost::Finite(_), Cost::Unavailable) => true,
            (Cost::Unavailable, _) => false,
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(v) => write!(f, "{v}"),
            Cost::Unavailable => write!(f, "INF"),
        }
    }
}

/// A per-resource link capacity. Unbounded links never ration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Capacity {
    Finite(f64),
    Unbounded,
}

impl Capacity {
    pub fn limit(self) -> Option<f64> {
        match self {
            Capacity::Finite(v) => Some(v),
            Capacity::Unbounded => None,
        }
    }

    pub fn allows(self, flow: f64) -> bool {
        match self {
            Capacity::Finite(v) => flow <= v,
            Capacity::Unbounded => true,
        }
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Finite(v) => write!(f, "{v}"),
            Capacity::Unbounded => write!(f, "UNB"),
        }
    }
}

/// Ordered list of resource names. Indices are the canonical resource ids
/// used everywhere else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceCatalog {
    names: Vec<String>,
}

impl ResourceCatalog {
    pub fn new<S: Into<String>>(names: Vec<S>) -> Self {
        ResourceCatalog {
            names: names.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Square technology matrix for one agent: entry `(i, j)` is the quantity
/// of resource `i` consumed per unit of resource `j` produced. Column `j`
/// all zero means the agent cannot produce `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TechnologyMatrix {
    n: usize,
    /// Row-major, length n*n.
    data: Vec<f64>,
}

impl TechnologyMatrix {
    pub fn zero(n: usize) -> Self {
        TechnologyMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "technology matrix must be square");
            data.extend_from_slice(row);
        }
        TechnologyMatrix { n, data }
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "row-major data must have n*n entries");
        TechnologyMatrix { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n + col] = value;
    }

    pub fn scale_cell(&mut self, row: usize, col: usize, factor: f64) {
        self.data[row * self.n + col] *= factor;
    }

    pub fn scale_row(&mut self, row: usize, factor: f64) {
        for col in 0..self.n {
            self.data[row * self.n + col] *= factor;
        }
    }

    pub fn scale_col(&mut self, col: usize, factor: f64) {
        for row in 0..self.n {
            self.data[row * self.n + col] *= factor;
        }
    }

    pub fn row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// y = A * x over the full index range.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let mut acc = 0.0;
            for (aij, xj) in row.iter().zip(x) {
                acc += aij * xj;
            }
            y[i] = acc;
        }
        y
    }
}

/// One economic actor: a producer, a raw-material provider, a final
/// consumer, or any mix of the three depending on its fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: usize,
    pub label: String,
    pub tech: TechnologyMatrix,
    /// Per-resource raw-material price; None where this agent introduces
    /// nothing.
    pub provider_costs: Vec<Option<f64>>,
    /// Per-resource final consumption drawn from the agent's own pool.
    pub final_demand: Vec<f64>,
    /// Rank of the agent's own final demand among the consumers of its
    /// output pools (competing with outgoing links' priorities).
    pub final_demand_priority: i64,
}

impl Agent {
    pub fn new(id: usize, label: impl Into<String>, resources: usize) -> Self {
        Agent {
            id,
            label: label.into(),
            tech: TechnologyMatrix::zero(resources),
            provider_costs: vec![None; resources],
            final_demand: vec![0.0; resources],
            final_demand_priority: i64::MAX,
        }
    }

    pub fn is_provider(&self) -> bool {
        self.provider_costs.iter().any(Option::is_some)
    }

    pub fn has_final_demand(&self) -> bool {
        self.final_demand.iter().any(|&d| d > 0.0)
    }
}

/// Directed transport link. Costs and capacities are per resource: a link
/// may carry some resources and not others.
#[derive(Debug, Clone, PartialEq)]
pub struct InfraLink {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub transport_cost: Vec<Cost>,
    pub capacity: Vec<Capacity>,
    /// Rank of this link among the consumers of the origin's output pools;
    /// lower ranks are served first under scarcity.
    pub priority: i64,
}

impl InfraLink {
    pub fn new(id: usize, from: usize, to: usize, resources: usize) -> Self {
        InfraLink {
            id,
            from,
            to,
            transport_cost: vec![Cost::Unavailable; resources],
            capacity: vec![Capacity::Unbounded; resources],
            priority: 0,
        }
    }
}

/// The simulated system: a resource catalog, agents keyed by id, and links
/// keyed by id. Construction is free-form; run [`validate_network`] before
/// simulating and treat the instance as immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub catalog: ResourceCatalog,
    pub agents: BTreeMap<usize, Agent>,
    pub links: BTreeMap<usize, InfraLink>,
    /// Free-form label for the length of one timestep (e.g. "15min").
    pub timestep: String,
}

impl Network {
    pub fn new(catalog: ResourceCatalog) -> Self {
        Network {
            catalog,
            agents: BTreeMap::new(),
            links: BTreeMap::new(),
            timestep: String::from("15min"),
        }
    }

    pub fn add_agent(&mut self, agent: Agent) {
        assert!(
            !self.agents.contains_key(&agent.id),
            "duplicate agent id {}",
            agent.id
        );
        self.agents.insert(agent.id, agent);
    }

    pub fn add_link(&mut self, link: InfraLink) {
        assert!(
            !self.links.contains_key(&link.id),
            "duplicate link id {}",
            link.id
        );
        self.links.insert(link.id, link);
    }

    pub fn resources(&self) -> usize {
        self.catalog.len()
    }

    pub fn agent(&self, id: usize) -> Option<&Agent> {
        self.agents.get(&id)
    }

    pub fn link(&self, id: usize) -> Option<&InfraLink> {
        self.links.get(&id)
    }

    /// Links entering `agent`, in id order.
    pub fn incoming(&self, agent: usize) -> impl Iterator<Item = &InfraLink> {
        self.links.values().filter(move |l| l.to == agent)
    }

    /// Links leaving `agent`, in id order.
    pub fn outgoing(&self, agent: usize) -> impl Iterator<Item = &InfraLink> {
        self.links.values().filter(move |l| l.from == agent)
    }

    /// Per-agent final demand vectors; the default demand configuration for
    /// allocation and scenarios.
    pub fn final_demands(&self) -> BTreeMap<usize, Vec<f64>> {
        self.agents
            .iter()
            .map(|(&id, a)| (id, a.final_demand.clone()))
            .collect()
    }
}

/// One structural violation found by [`validate_network`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Where the problem is, e.g. "agent 3" or "link 7".
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Result of structural validation; empty means the network is usable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            write!(f, "valid")
        } else {
            for v in &self.violations {
                writeln!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Checks every structural invariant of a network and reports all
/// violations rather than stopping at the first.
pub fn validate_network(net: &Network) -> ValidationReport {
    let mut report = ValidationReport::default();
    let r = net.resources();

    if r == 0 {
        report.push("catalog", "at least one resource is required");
    }
    for (i, name) in net.catalog.names().iter().enumerate() {
        if name.is_empty() {
            report.push("catalog", format!("resource {i} has an empty name"));
        }
        if name.chars().any(char::is_whitespace) {
            report.push(
                "catalog",
                format!("resource {i} ({name:?}) contains whitespace"),
            );
        }
        if net.catalog.names()[..i].contains(name) {
            report.push("catalog", format!("duplicate resource name {name:?}"));
        }
    }

    if net.agents.is_empty() {
        report.push("network", "at least one agent is required");
    }

    for (&id, agent) in &net.agents {
        let loc = format!("agent {id}");
        if agent.id != id {
            report.push(
                &loc,
                format!("keyed under {id} but carries id {}", agent.id),
            );
        }
        if agent.tech.size() != r {
            report.push(
                &loc,
                format!(
                    "technology matrix is {0}x{0}, expected {r}x{r}",
                    agent.tech.size()
                ),
            );
        } else {
            for i in 0..r {
                for j in 0..r {
                    let v = agent.tech.get(i, j);
                    if !v.is_finite() || v < 0.0 {
                        report.push(
                            &loc,
                            format!("technology coefficient ({i},{j}) = {v} must be finite and non-negative"),
                        );
                    }
                }
            }
        }
        if agent.provider_costs.len() != r {
            report.push(
                &loc,
                format!(
                    "provider cost vector has {} entries, expected {r}",
                    agent.provider_costs.len()
                ),
            );
        } else {
            for (i, c) in agent.provider_costs.iter().enumerate() {
                if let Some(v) = c {
                    if !v.is_finite() || *v < 0.0 {
                        report.push(
                            &loc,
                            format!("provider cost for resource {i} = {v} must be finite and non-negative"),
                        );
                    }
                }
            }
        }
        if agent.final_demand.len() != r {
            report.push(
                &loc,
                format!(
                    "final demand vector has {} entries, expected {r}",
                    agent.final_demand.len()
                ),
            );
        } else {
            for (i, d) in agent.final_demand.iter().enumerate() {
                if !d.is_finite() || *d < 0.0 {
                    report.push(
                        &loc,
                        format!("negative demand: final demand for resource {i} = {d}"),
                    );
                }
            }
        }
    }

    for (&id, link) in &net.links {
        let loc = format!("link {id}");
        if link.id != id {
            report.push(&loc, format!("keyed under {id} but carries id {}", link.id));
        }
        if !net.agents.contains_key(&link.from) {
            report.push(
                &loc,
                format!(
                    "dangling endpoint: origin agent {} does not exist",
                    link.from
                ),
            );
        }
        if !net.agents.contains_key(&link.to) {
            report.push(
                &loc,
                format!("dangling endpoint: target agent {} does not exist", link.to),
            );
        }
        if link.from == link.to {
            report.push(&loc, "self-loop links are not allowed");
        }
        if link.transport_cost.len() != r {
            report.push(
                &loc,
                format!(
                    "transport cost vector has {} entries, expected {r}",
                    link.transport_cost.len()
                ),
            );
        } else {
            for (i, c) in link.transport_cost.iter().enumerate() {
                if let Cost::Finite(v) = c {
                    if !v.is_finite() || *v < 0.0 {
                        report.push(
                            &loc,
                            format!("negative cost: transport cost for resource {i} = {v}"),
                        );
                    }
                }
            }
        }
        if link.capacity.len() != r {
            report.push(
                &loc,
                format!(
                    "capacity vector has {} entries, expected {r}",
                    link.capacity.len()
                ),
            );
        } else {
            for (i, c) in link.capacity.iter().enumerate() {
                if let Capacity::Finite(v) = c {
                    if !v.is_finite() || *v < 0.0 {
                        report.push(
                            &loc,
                            format!("negative capacity: capacity for resource {i} = {v}"),
                        );
                    }
                }
            }
        }
    }

    report
}

/// Resources an agent can produce: columns of its technology matrix with at
/// least one strictly positive input coefficient.
pub fn producible_set(agent: &Agent) -> Vec<usize> {
    let n = agent.tech.size();
    (0..n)
        .filter(|&j| (0..n).any(|i| agent.tech.get(i, j) > 0.0))
        .collect()
}
