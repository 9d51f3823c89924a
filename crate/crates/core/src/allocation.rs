//! Quantity allocation: turns priced sourcing decisions into concrete
//! production levels, link flows, provider draws, and served final demand.
//!
//! Three layers:
//! * [`plan_quantities`] propagates demand upstream along the recorded
//!   decisions, ignoring capacities.
//! * [`ration`] fits a tentative plan into link capacities. Each agent
//!   assigns its deliverable output to the consumers of its pools
//!   (outgoing links and its own final demand) in ascending priority
//!   order, and the cut cascades downstream over repeated sweeps.
//! * [`allocate`] iterates plan/ration rounds: demand that rationing left
//!   unserved spills to the next-cheapest source by re-pricing with
//!   saturated link/resource pairs excluded, until nothing improves.
//!
//! Delivered cost is marginal: the sell cost of the round in which the
//! last unit was served.

use std::collections::BTreeMap;

use crate::error::SimError;
use crate::model::{Capacity, Cost, InfraLink, Network};
use crate::pricing::{
    price_fixed_point_excluding, ExcludedEdges, PriceState, SourceDecision, SourceKind,
};
use crate::production::{leontief_solve, ProductionPlan};

/// Quantities realized by one allocation: per-link flows, per-agent
/// production plans and draws, marginal delivered costs, and shortfalls.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    /// link id -> per-resource flow.
    pub edge_flow: BTreeMap<usize, Vec<f64>>,
    /// agent id -> gross production / served make-demand / requirements.
    pub production: BTreeMap<usize, ProductionPlan>,
    /// agent id -> per-resource raw material drawn from the agent's provider.
    pub provider_draw: BTreeMap<usize, Vec<f64>>,
    /// agent id -> requirements covered by the agent's own production.
    pub self_supply: BTreeMap<usize, Vec<f64>>,
    /// agent id -> per-resource inflow received over incoming links.
    pub import_inflow: BTreeMap<usize, Vec<f64>>,
    /// agent id -> per-resource marginal unit cost actually paid.
    pub delivered_cost: BTreeMap<usize, Vec<Cost>>,
    /// agent id -> unserved final demand.
    pub shortfall: BTreeMap<usize, Vec<f64>>,
    /// Rounds (for allocate) or sweeps (for ration) used.
    pub iterations: usize,
}

impl FlowState {
    pub fn zero(net: &Network) -> Self {
        let r = net.resources();
        let zeros = |v: f64| -> BTreeMap<usize, Vec<f64>> {
            net.agents.keys().map(|&id| (id, vec![v; r])).collect()
        };
        FlowState {
            edge_flow: net.links.keys().map(|&id| (id, vec![0.0; r])).collect(),
            production: net
                .agents
                .keys()
                .map(|&id| (id, ProductionPlan::zero(r)))
                .collect(),
            provider_draw: zeros(0.0),
            self_supply: zeros(0.0),
            import_inflow: zeros(0.0),
            delivered_cost: net
                .agents
                .keys()
                .map(|&id| (id, vec![Cost::Unavailable; r]))
                .collect(),
            shortfall: zeros(0.0),
            iterations: 0,
        }
    }

    /// Total unserved final demand.
    pub fn total_shortfall(&self) -> f64 {
        self.shortfall.values().flatten().sum()
    }

    /// Served final demand per agent, given the demands that were placed.
    pub fn served(&self, demands: &BTreeMap<usize, Vec<f64>>, agent: usize, res: usize) -> f64 {
        let demanded = demands.get(&agent).map_or(0.0, |d| d[res]);
        demanded - self.shortfall.get(&agent).map_or(0.0, |s| s[res])
    }

    fn merge(&mut self, other: &FlowState) {
        for (id, flow) in &other.edge_flow {
            let dst = self.edge_flow.get_mut(id).expect("same network");
            for (a, b) in dst.iter_mut().zip(flow) {
                *a += b;
            }
        }
        for (id, plan) in &other.production {
            self.production
                .get_mut(id)
                .expect("same network")
                .add_assign(plan);
        }
        for (map, src) in [
            (&mut self.provider_draw, &other.provider_draw),
            (&mut self.self_supply, &other.self_supply),
            (&mut self.import_inflow, &other.import_inflow),
        ] {
            for (id, v) in src {
                let dst = map.get_mut(id).expect("same network");
                for (a, b) in dst.iter_mut().zip(v) {
                    *a += b;
                }
            }
        }
    }
}

/// Demand vectors keyed by agent id; agents not present demand nothing.
pub type Demands = BTreeMap<usize, Vec<f64>>;

fn demand_scale(demands: &Demands) -> f64 {
    let total: f64 = demands.values().flatten().copied().sum();
    total.max(1.0)
}

/// Cached unit production response for one (agent, resource): the gross
/// production and requirements for serving one unit of demand.
struct UnitPlan {
    x: Vec<f64>,
    s: Vec<f64>,
}

struct MakeCache {
    made: BTreeMap<usize, Vec<usize>>,
    units: BTreeMap<(usize, usize), UnitPlan>,
}

impl MakeCache {
    fn new(net: &Network, prices: &PriceState) -> Self {
        let r = net.resources();
        let made = net
            .agents
            .keys()
            .map(|&id| {
                let set: Vec<usize> = (0..r)
                    .filter(|&res| {
                        matches!(
                            prices.decision(id, res),
                            Some(SourceDecision {
                                kind: SourceKind::Make,
                                ..
                            })
                        )
                    })
                    .collect();
                (id, set)
            })
            .collect();
        MakeCache {
            made,
            units: BTreeMap::new(),
        }
    }

    fn unit(&mut self, net: &Network, agent: usize, res: usize) -> Result<&UnitPlan, SimError> {
        if !self.units.contains_key(&(agent, res)) {
            let made = &self.made[&agent];
            let tech = &net.agents[&agent].tech;
            let mut d = vec![0.0; net.resources()];
            d[res] = 1.0;
            let plan = leontief_solve(tech, &d, made)?;
            self.units.insert(
                (agent, res),
                UnitPlan {
                    x: plan.x,
                    s: plan.s,
                },
            );
        }
        Ok(&self.units[&(agent, res)])
    }
}

const PROPAGATION_BUDGET: usize = 2_000_000;
/// Fraction of the aggregate demand below which a propagated quantity is
/// dropped; bounds work on attenuating decision cycles.
const PROPAGATION_EPS: f64 = 1e-14;

/// Propagates demand upstream along the recorded decisions, ignoring link
/// capacities. Errors with UnpricedDemand if demand sits on an (agent,
/// resource) pair without a feasible source, and NotProductive if a
/// make-set cannot sustain its demand.
pub fn plan_quantities(
    net: &Network,
    prices: &PriceState,
    demands: &Demands,
) -> Result<FlowState, SimError> {
    let r = net.resources();
    let mut flow = FlowState::zero(net);
    let mut cache = MakeCache::new(net, prices);

    let mut pending: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&agent, vec) in demands {
        assert_eq!(vec.len(), r, "demand vector length mismatch");
        for (res, &q) in vec.iter().enumerate() {
            if q > 0.0 {
                if prices.decision(agent, res).is_none() {
                    return Err(SimError::UnpricedDemand {
                        agent,
                        resource: res,
                    });
                }
                *pending.entry((agent, res)).or_insert(0.0) += q;
            }
        }
    }
    let eps = PROPAGATION_EPS * demand_scale(demands);

    let mut budget = PROPAGATION_BUDGET;
    while let Some((&(agent, res), &q)) = pending.iter().next() {
        pending.remove(&(agent, res));
        if q < eps {
            continue;
        }
        budget -= 1;
        if budget == 0 {
            return Err(SimError::NonConvergence {
                what: "quantity propagation",
                limit: PROPAGATION_BUDGET,
            });
        }
        // Demand on an entry the planner itself generated (an import of a
        // make decision) always has a decision: its price was finite.
        let decision = prices
            .decision(agent, res)
            .ok_or(SimError::UnpricedDemand {
                agent,
                resource: res,
            })?;
        match decision.kind {
            SourceKind::Provider => {
                flow.provider_draw.get_mut(&agent).expect("agent")[res] += q;
            }
            SourceKind::Edge(lid) => {
                let link = net.link(lid).expect("link exists");
                flow.edge_flow.get_mut(&lid).expect("link")[res] += q;
                flow.import_inflow.get_mut(&agent).expect("agent")[res] += q;
                *pending.entry((link.from, res)).or_insert(0.0) += q;
            }
            SourceKind::Make => {
                let unit = cache.unit(net, agent, res)?;
                let (x, s) = (unit.x.clone(), unit.s.clone());
                let made = cache.made[&agent].clone();
                let plan = flow.production.get_mut(&agent).expect("agent");
                plan.d[res] += q;
                for i in 0..r {
                    plan.x[i] += q * x[i];
                    plan.s[i] += q * s[i];
                }
                let self_supply = flow.self_supply.get_mut(&agent).expect("agent");
                for &i in &made {
                    self_supply[i] += q * s[i];
                }
                for i in 0..r {
                    if !made.contains(&i) && s[i] > 0.0 {
                        *pending.entry((agent, i)).or_insert(0.0) += q * s[i];
                    }
                }
            }
        }
    }

    for (&agent, costs) in flow.delivered_cost.iter_mut() {
        for res in 0..r {
            costs[res] = prices.sell_cost(agent, res);
        }
    }
    flow.iterations = 1;
    Ok(flow)
}

/// Per-(link, resource) capacity still available.
pub type RemainingCaps = BTreeMap<usize, Vec<Capacity>>;

fn initial_caps(net: &Network) -> RemainingCaps {
    net.links
        .iter()
        .map(|(&id, l)| (id, l.capacity.clone()))
        .collect()
}

/// A consumer of an agent's output pools: either an outgoing link or the
/// agent's own final demand. Ordering defines the service sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Consumer {
    /// (priority, 0, link id)
    Link(i64, u8, usize),
    /// (priority, 1, agent id)
    OwnDemand(i64, u8, usize),
}

const RATION_TOLERANCE: f64 = 1e-12;

/// Fits a tentative plan into the remaining link capacities. Quantities
/// start from the tentative (requested) values and shrink monotonically:
/// each sweep every agent re-grants its consumers in priority order from
/// what its pools can still deliver, and re-states its own upstream pulls.
/// Converges when flows stop changing.
pub fn ration(
    net: &Network,
    prices: &PriceState,
    tentative: &FlowState,
    demands: &Demands,
    remaining: &RemainingCaps,
) -> Result<FlowState, SimError> {
    let r = net.resources();

    // Fast path: nothing to cut.
    let within_caps = tentative.edge_flow.iter().all(|(lid, flows)| {
        flows
            .iter()
            .enumerate()
            .all(|(res, &f)| match remaining[lid][res] {
                Capacity::Finite(c) => f <= c,
                Capacity::Unbounded => true,
            })
    });
    if within_caps {
        return Ok(tentative.clone());
    }

    let cap_of = |lid: usize, res: usize| -> f64 {
        match remaining[&lid][res] {
            Capacity::Finite(c) => c,
            Capacity::Unbounded => f64::INFINITY,
        }
    };

    let mut cache = MakeCache::new(net, prices);

    // request: what the target still wants on each link; deliverable: what
    // the origin can actually push. Both start optimistic.
    let mut request: BTreeMap<usize, Vec<f64>> = tentative.edge_flow.clone();
    let mut deliverable: BTreeMap<usize, Vec<f64>> = request
        .iter()
        .map(|(&lid, v)| {
            let capped: Vec<f64> = v
                .iter()
                .enumerate()
                .map(|(res, &f)| f.min(cap_of(lid, res)))
                .collect();
            (lid, capped)
        })
        .collect();
    let mut fd_grant: BTreeMap<usize, Vec<f64>> = net
        .agents
        .keys()
        .map(|&id| {
            (
                id,
                demands.get(&id).cloned().unwrap_or_else(|| vec![0.0; r]),
            )
        })
        .collect();

    let mut outgoing: BTreeMap<usize, Vec<&InfraLink>> =
        net.agents.keys().map(|&id| (id, Vec::new())).collect();
    for link in net.links.values() {
        outgoing.get_mut(&link.from).expect("agent").push(link);
    }

    let max_sweeps = 10 * net.agents.len() + 50;
    let mut sweeps = 0;

    let mut result = loop {
        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(SimError::NonConvergence {
                what: "capacity rationing",
                limit: max_sweeps,
            });
        }
        let prev_deliverable = deliverable.clone();
        let prev_fd = fd_grant.clone();
        let mut result = FlowState::zero(net);

        for (&agent, a) in &net.agents {
            // Pools: what has arrived over each decision edge this state.
            let mut pool = vec![0.0; r];
            for res in 0..r {
                if let Some(SourceDecision {
                    kind: SourceKind::Edge(lid),
                    ..
                }) = prices.decision(agent, res)
                {
                    pool[res] = deliverable[&lid][res];
                }
            }
            let mut pull = vec![0.0; r];

            // Grants are re-earned every sweep. A cell whose request has
            // since collapsed to zero would otherwise keep a stale grant
            // from an earlier sweep and leak an unconsumed flow.
            for link in &outgoing[&agent] {
                for v in deliverable.get_mut(&link.id).expect("link").iter_mut() {
                    *v = 0.0;
                }
            }

            let mut consumers: Vec<Consumer> = outgoing[&agent]
                .iter()
                .filter(|l| request[&l.id].iter().any(|&q| q > 0.0))
                .map(|l| Consumer::Link(l.priority, 0, l.id))
                .collect();
            let fd_requested = demands
                .get(&agent)
                .is_some_and(|d| d.iter().any(|&q| q > 0.0));
            if fd_requested {
                consumers.push(Consumer::OwnDemand(a.final_demand_priority, 1, agent));
            }
            consumers.sort();

            for consumer in consumers {
                for res in 0..r {
                    let want = match consumer {
                        Consumer::Link(_, _, lid) => request[&lid][res].min(cap_of(lid, res)),
                        Consumer::OwnDemand(..) => demands[&agent][res],
                    };
                    if want <= 0.0 {
                        continue;
                    }
                    let granted = grant(
                        net,
                        prices,
                        &mut cache,
                        &mut result,
                        agent,
                        res,
                        want,
                        &mut pool,
                        &mut pull,
                    )?;
                    match consumer {
                        Consumer::Link(_, _, lid) => {
                            deliverable.get_mut(&lid).expect("link")[res] = granted;
                        }
                        Consumer::OwnDemand(..) => {
                            fd_grant.get_mut(&agent).expect("agent")[res] = granted;
                        }
                    }
                }
            }

            // Restate upstream pulls: ask next sweep for exactly what was
            // consumed from each decision edge.
            for res in 0..r {
                if let Some(SourceDecision {
                    kind: SourceKind::Edge(lid),
                    ..
                }) = prices.decision(agent, res)
                {
                    if request[&lid][res] > 0.0 || pull[res] > 0.0 {
                        request.get_mut(&lid).expect("link")[res] = pull[res];
                    }
                }
            }
        }

        let stable = deliverable.iter().all(|(lid, v)| {
            v.iter()
                .zip(&prev_deliverable[lid])
                .all(|(a, b)| (a - b).abs() <= RATION_TOLERANCE)
        }) && fd_grant.iter().all(|(id, v)| {
            v.iter()
                .zip(&prev_fd[id])
                .all(|(a, b)| (a - b).abs() <= RATION_TOLERANCE)
        });
        if stable {
            break result;
        }
    };

    // Assemble the converged state.
    result.edge_flow = deliverable.clone();
    for link in net.links.values() {
        let inflow = result.import_inflow.get_mut(&link.to).expect("agent");
        for res in 0..r {
            inflow[res] += deliverable[&link.id][res];
        }
    }
    for &agent in net.agents.keys() {
        let shortfall = result.shortfall.get_mut(&agent).expect("agent");
        if let Some(d) = demands.get(&agent) {
            for res in 0..r {
                shortfall[res] = (d[res] - fd_grant[&agent][res]).max(0.0);
            }
        }
        let costs = result.delivered_cost.get_mut(&agent).expect("agent");
        for res in 0..r {
            costs[res] = prices.sell_cost(agent, res);
        }
    }
    result.iterations = sweeps;
    Ok(result)
}

/// Serves one request of `want` units of `res` at `agent` through the
/// recorded decision, draining pools and recording production and draws.
/// Returns the granted amount.
#[allow(clippy::too_many_arguments)]
fn grant(
    net: &Network,
    prices: &PriceState,
    cache: &mut MakeCache,
    result: &mut FlowState,
    agent: usize,
    res: usize,
    want: f64,
    pool: &mut [f64],
    pull: &mut [f64],
) -> Result<f64, SimError> {
    let Some(decision) = prices.decision(agent, res) else {
        return Ok(0.0);
    };
    let r = net.resources();
    match decision.kind {
        SourceKind::Provider => {
            result.provider_draw.get_mut(&agent).expect("agent")[res] += want;
            Ok(want)
        }
        SourceKind::Edge(_) => {
            let granted = want.min(pool[res]).max(0.0);
            pool[res] -= granted;
            pull[res] += granted;
            Ok(granted)
        }
        SourceKind::Make => {
            let unit = cache.unit(net, agent, res)?;
            let (x_unit, s_unit) = (unit.x.clone(), unit.s.clone());
            let made = cache.made[&agent].clone();
            // Imports bound the feasible output.
            let mut feasible = want;
            for i in 0..r {
                if made.contains(&i) || s_unit[i] <= 0.0 {
                    continue;
                }
                match prices.decision(agent, i).map(|d| d.kind) {
                    Some(SourceKind::Provider) => {}
                    Some(SourceKind::Edge(_)) => {
                        feasible = feasible.min(pool[i] / s_unit[i]);
                    }
                    Some(SourceKind::Make) | None => {
                        // A make-set import routed to Make would have been
                        // in the made set; no route means no feasibility.
                        feasible = 0.0;
                    }
                }
            }
            let granted = feasible.max(0.0);
            if granted > 0.0 {
                let plan = result.production.get_mut(&agent).expect("agent");
                plan.d[res] += granted;
                for i in 0..r {
                    plan.x[i] += granted * x_unit[i];
                    plan.s[i] += granted * s_unit[i];
                }
                let self_supply = result.self_supply.get_mut(&agent).expect("agent");
                for &i in &made {
                    self_supply[i] += granted * s_unit[i];
                }
                for i in 0..r {
                    if made.contains(&i) || s_unit[i] <= 0.0 {
                        continue;
                    }
                    let amount = granted * s_unit[i];
                    match prices.decision(agent, i).map(|d| d.kind) {
                        Some(SourceKind::Provider) => {
                            result.provider_draw.get_mut(&agent).expect("agent")[i] += amount;
                        }
                        Some(SourceKind::Edge(_)) => {
                            pool[i] -= amount;
                            pull[i] += amount;
                        }
                        _ => unreachable!("feasibility pinned granted to zero"),
                    }
                }
            }
            Ok(granted)
        }
    }
}

/// Options for [`allocate`].
#[derive(Debug, Clone, Copy)]
pub struct AllocateOptions {
    /// Re-route residual demand to the next-cheapest non-saturated source.
    pub spill: bool,
    /// Outer plan/ration rounds before accepting residual shortfall.
    pub max_rounds: usize,
}

impl Default for AllocateOptions {
    fn default() -> Self {
        AllocateOptions {
            spill: true,
            max_rounds: 50,
        }
    }
}

/// Full allocation with default options.
pub fn allocate(net: &Network, demands: &Demands) -> Result<FlowState, SimError> {
    allocate_with(net, demands, AllocateOptions::default())
}

/// Prices the network, plans quantities, rations them into capacities, and
/// (with spill enabled) repeats on the residual demand with saturated
/// link/resource pairs priced out, accumulating flows. Delivered costs are
/// the marginal (last-serving round's) sell costs.
pub fn allocate_with(
    net: &Network,
    demands: &Demands,
    opts: AllocateOptions,
) -> Result<FlowState, SimError> {
    let r = net.resources();
    let scale = demand_scale(demands);
    let served_eps = 1e-12 * scale;

    let mut committed = FlowState::zero(net);
    let mut residual: Demands = demands
        .iter()
        .filter(|(_, v)| v.iter().any(|&q| q > 0.0))
        .map(|(&id, v)| (id, v.clone()))
        .collect();
    let mut remaining = initial_caps(net);
    let mut excluded = ExcludedEdges::new();
    let mut rounds = 0;

    while rounds < opts.max_rounds {
        rounds += 1;
        let prices = price_fixed_point_excluding(net, &excluded)?;

        // Split residual into the priceable part; on the first round an
        // unpriceable demand is a caller error, afterwards it is shortfall
        // pending no alternative.
        let mut priceable: Demands = BTreeMap::new();
        for (&agent, vec) in &residual {
            let mut kept = vec![0.0; r];
            let mut any = false;
            for res in 0..r {
                if vec[res] > served_eps {
                    if prices.decision(agent, res).is_none() {
                        if rounds == 1 {
                            return Err(SimError::UnpricedDemand {
                                agent,
                                resource: res,
                            });
                        }
                    } else {
                        kept[res] = vec[res];
                        any = true;
                    }
                }
            }
            if any {
                priceable.insert(agent, kept);
            }
        }
        if priceable.is_empty() {
            break;
        }

        let plan = plan_quantities(net, &prices, &priceable)?;
        let rationed = ration(net, &prices, &plan, &priceable, &remaining)?;

        // Progress bookkeeping.
        let mut served_any = false;
        for (&agent, vec) in &priceable {
            for res in 0..r {
                let served = vec[res] - rationed.shortfall[&agent][res];
                if served > served_eps {
                    served_any = true;
                    let left = residual.get_mut(&agent).expect("residual entry");
                    left[res] = (left[res] - served).max(0.0);
                    committed.delivered_cost.get_mut(&agent).expect("agent")[res] =
                        prices.sell_cost(agent, res);
                }
            }
        }
        // First round fixes the baseline delivered cost for untouched
        // entries so uncapacitated allocation reports plain sell costs.
        if rounds == 1 {
            for (&agent, costs) in committed.delivered_cost.iter_mut() {
                for res in 0..r {
                    if let Cost::Unavailable = costs[res] {
                        costs[res] = prices.sell_cost(agent, res);
                    }
                }
            }
        }
        if !served_any {
            break;
        }

        committed.merge(&rationed);
        for (&lid, caps) in remaining.iter_mut() {
            for res in 0..r {
                if let Capacity::Finite(c) = caps[res] {
                    caps[res] = Capacity::Finite((c - rationed.edge_flow[&lid][res]).max(0.0));
                }
            }
        }
        excluded = saturated_pairs(&remaining, scale);

        let residual_total: f64 = residual.values().flatten().sum();
        if residual_total <= served_eps {
            break;
        }
        if !opts.spill {
            break;
        }
    }

    for (&agent, vec) in &residual {
        committed
            .shortfall
            .get_mut(&agent)
            .expect("agent")
            .copy_from_slice(vec);
    }
    committed.iterations = rounds;
    Ok(committed)
}

fn saturated_pairs(remaining: &RemainingCaps, scale: f64) -> ExcludedEdges {
    let eps = 1e-9 * scale.max(1.0);
    let mut out = ExcludedEdges::new();
    for (&lid, caps) in remaining {
        for (res, cap) in caps.iter().enumerate() {
            if let Capacity::Finite(c) = cap {
                if *c <= eps {
                    out.insert((lid, res));
                }
            }
        }
    }
    out
}

/// Checks flow conservation, capacity respect, and shortfall bounds;
/// returns human-readable violations (empty when clean). Conservation per
/// agent and resource:
///   production + link inflow + provider draw
///     = intermediate consumption + link outflow + served final demand.
pub fn flow_invariants(net: &Network, demands: &Demands, flow: &FlowState) -> Vec<String> {
    let r = net.resources();
    let tol = 1e-9 * (1.0 + demand_scale(demands));
    let mut out = Vec::new();

    for (&lid, link) in &net.links {
        for res in 0..r {
            let f = flow.edge_flow[&lid][res];
            if f < -tol {
                out.push(format!("link {lid} res {res}: negative flow {f}"));
            }
            if let Capacity::Finite(c) = link.capacity[res] {
                if f > c + tol {
                    out.push(format!(
                        "link {lid} res {res}: flow {f} exceeds capacity {c}"
                    ));
                }
            }
        }
    }

    for &agent in net.agents.keys() {
        let plan = &flow.production[&agent];
        for res in 0..r {
            let inflow: f64 = net
                .incoming(agent)
                .map(|l| flow.edge_flow[&l.id][res])
                .sum();
            let outflow: f64 = net
                .outgoing(agent)
                .map(|l| flow.edge_flow[&l.id][res])
                .sum();
            let demanded = demands.get(&agent).map_or(0.0, |d| d[res]);
            let shortfall = flow.shortfall[&agent][res];
            let served = demanded - shortfall;
            let lhs = plan.x[res] + inflow + flow.provider_draw[&agent][res];
            let rhs = plan.s[res] + outflow + served;
            if (lhs - rhs).abs() > tol {
                out.push(format!(
                    "agent {agent} res {res}: conservation broken ({lhs} vs {rhs})"
                ));
            }
            if shortfall > demanded + tol {
                out.push(format!(
                    "agent {agent} res {res}: shortfall {shortfall} exceeds demand {demanded}"
                ));
            }
            if shortfall < -tol {
                out.push(format!(
                    "agent {agent} res {res}: negative shortfall {shortfall}"
                ));
            }
        }
    }
    out
}
