//! Self-organized sourcing: every (agent, resource) pair settles on the
//! cheapest way to obtain one unit, either making it from inputs, buying it
//! from the agent's own raw-material provider, or importing it over an
//! incoming link from another agent's pool.
//!
//! Unit sell costs satisfy
//!   sell(n, r) = min(make_cost(n, r), acquire_cost(n, r))
//! where make prices inputs at min(own sell, acquire) and acquire is the
//! best provider or link offer. The system is solved by value iteration
//! from all-Unavailable, relaxing strictly downward, which lands on the
//! economically meaningful fixed point: entries that never ground out in a
//! provider or a productive make chain stay Unavailable.
//!
//! Capacities deliberately do not enter pricing; rationing is allocation's
//! job. Allocation re-prices with saturated link/resource pairs excluded to
//! find the next-cheapest source at the margin.

use std::collections::BTreeSet;

use crate::error::SimError;
use crate::model::{producible_set, Agent, Cost, Network};

/// How a unit of a resource is sourced at an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    /// Produced in-house through the technology matrix.
    Make,
    /// Bought from the agent's own raw-material provider.
    Provider,
    /// Imported over the identified incoming link.
    Edge(usize),
}

/// A sourcing choice together with the unit cost it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceDecision {
    pub kind: SourceKind,
    pub unit_cost: f64,
}

/// Converged sell costs and recorded decisions for a network.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceState {
    /// Dense agent index: ids[i] is the agent id at position i.
    ids: Vec<usize>,
    sell: Vec<Vec<Cost>>,
    decision: Vec<Vec<Option<SourceDecision>>>,
    pub sweeps_used: usize,
}

impl PriceState {
    fn position(&self, agent: usize) -> usize {
        self.ids
            .binary_search(&agent)
            .unwrap_or_else(|_| panic!("agent {agent} not in price state"))
    }

    pub fn sell_cost(&self, agent: usize, resource: usize) -> Cost {
        self.sell[self.position(agent)][resource]
    }

    pub fn decision(&self, agent: usize, resource: usize) -> Option<SourceDecision> {
        self.decision[self.position(agent)][resource]
    }

    pub fn agent_ids(&self) -> &[usize] {
        &self.ids
    }
}

/// Pairs of (link id, resource index) to treat as unavailable when pricing;
/// used by allocation to exclude saturated links at the margin.
pub type ExcludedEdges = BTreeSet<(usize, usize)>;

/// Best external source for `resource` at `agent` given current sell
/// costs: the agent's provider or an incoming link offer (origin sell cost
/// plus transport). Provider wins cost ties against links; among links the
/// lowest id wins. Returns None when no external source is available.
pub fn acquire_cost(
    net: &Network,
    prices: &PriceState,
    agent: usize,
    resource: usize,
) -> Option<SourceDecision> {
    let a = net.agent(agent).expect("agent exists");
    let incoming: Vec<&crate::model::InfraLink> = net.incoming(agent).collect();
    acquire_over(
        &incoming,
        resource,
        &a.provider_costs,
        &EMPTY_EXCLUSIONS,
        |m, r| prices.sell_cost(m, r),
    )
}

static EMPTY_EXCLUSIONS: ExcludedEdges = ExcludedEdges::new();

/// Shared acquire logic over any view of current sell costs. `incoming`
/// must be this agent's in-links in ascending id order.
fn acquire_over<F>(
    incoming: &[&crate::model::InfraLink],
    resource: usize,
    provider_costs: &[Option<f64>],
    excluded: &ExcludedEdges,
    sell_of: F,
) -> Option<SourceDecision>
where
    F: Fn(usize, usize) -> Cost,
{
    let mut best: Option<SourceDecision> = provider_costs[resource].map(|c| SourceDecision {
        kind: SourceKind::Provider,
        unit_cost: c,
    });
    for link in incoming {
        if excluded.contains(&(link.id, resource)) {
            continue;
        }
        let offer = sell_of(link.from, resource).plus(link.transport_cost[resource]);
        if let Cost::Finite(cost) = offer {
            let better = match best {
                None => true,
                // Strict: ties keep the earlier winner, which is the
                // provider or the lowest link id (links iterate in id
                // order).
                Some(b) => cost < b.unit_cost,
            };
            if better {
                best = Some(SourceDecision {
                    kind: SourceKind::Edge(link.id),
                    unit_cost: cost,
                });
            }
        }
    }
    best
}

/// Unit cost of producing `resource` in-house when inputs are priced by
/// `input_costs`: the coefficient-weighted sum over required inputs. Any
/// unavailable required input makes the product unavailable. Errors if the
/// agent cannot produce `resource` at all.
pub fn make_cost(agent: &Agent, input_costs: &[Cost], resource: usize) -> Result<Cost, SimError> {
    let n = agent.tech.size();
    if !(0..n).any(|i| agent.tech.get(i, resource) > 0.0) {
        return Err(SimError::NotProducible {
            agent: agent.id,
            resource,
        });
    }
    let mut total = 0.0;
    for i in 0..n {
        let coeff = agent.tech.get(i, resource);
        if coeff > 0.0 {
            match input_costs[i] {
                Cost::Finite(c) => total += coeff * c,
                Cost::Unavailable => return Ok(Cost::Unavailable),
            }
        }
    }
    Ok(Cost::Finite(total))
}

/// Convergence tolerance on sell costs.
pub const PRICE_TOLERANCE: f64 = 1e-9;

/// Sweep budget factor: at most `100 * agents` sweeps before giving up.
const SWEEP_FACTOR: usize = 100;

/// Computes converged sell costs and sourcing decisions for the whole
/// network. See the module docs for the fixed-point definition.
pub fn price_fixed_point(net: &Network) -> Result<PriceState, SimError> {
    price_fixed_point_excluding(net, &ExcludedEdges::new())
}

/// Like [`price_fixed_point`] but treating the given (link, resource)
/// pairs as unavailable.
pub fn price_fixed_point_excluding(
    net: &Network,
    excluded: &ExcludedEdges,
) -> Result<PriceState, SimError> {
    let ids: Vec<usize> = net.agents.keys().copied().collect();
    let r = net.resources();
    let n = ids.len();
    let pos_of = |id: usize| ids.binary_search(&id).expect("agent id");

    // Incoming adjacency in link-id order, and producible sets, both fixed.
    let mut incoming: Vec<Vec<&crate::model::InfraLink>> = vec![Vec::new(); n];
    for link in net.links.values() {
        incoming[pos_of(link.to)].push(link);
    }
    let producible: Vec<Vec<usize>> = ids
        .iter()
        .map(|id| producible_set(&net.agents[id]))
        .collect();

    let mut sell: Vec<Vec<Cost>> = vec![vec![Cost::Unavailable; r]; n];
    let max_sweeps = SWEEP_FACTOR * n.max(1);
    let mut sweeps_used = 0;

    for sweep in 1..=max_sweeps {
        sweeps_used = sweep;
        let mut max_change = 0.0f64;
        let mut new_finite = false;

        for (p, &id) in ids.iter().enumerate() {
            let agent = &net.agents[&id];
            // External offers per resource from the current state.
            let mut acquire = vec![Cost::Unavailable; r];
            for res in 0..r {
                if let Some(d) = acquire_over(
                    &incoming[p],
                    res,
                    &agent.provider_costs,
                    excluded,
                    |m, rr| sell[pos_of(m)][rr],
                ) {
                    acquire[res] = Cost::Finite(d.unit_cost);
                }
            }
            // Inputs price at the cheaper of own stock and fresh acquire.
            let input_costs: Vec<Cost> = (0..r).map(|i| sell[p][i].min_with(acquire[i])).collect();
            for &res in &producible[p] {
                let mk = make_cost(agent, &input_costs, res).expect("producible");
                let cand = mk.min_with(acquire[res]);
                track_change(sell[p][res], cand, &mut max_change, &mut new_finite);
                sell[p][res] = cand;
            }
            for res in 0..r {
                if producible[p].contains(&res) {
                    continue;
                }
                let cand = acquire[res];
                track_change(sell[p][res], cand, &mut max_change, &mut new_finite);
                sell[p][res] = cand;
            }
        }

        if !new_finite && max_change < PRICE_TOLERANCE {
            break;
        }
        if sweep == max_sweeps {
            return Err(SimError::NonConvergence {
                what: "price fixed point",
                limit: max_sweeps,
            });
        }
    }

    // Record decisions from the converged values with the deterministic
    // tie-break chain Make > Provider > lowest link id.
    let mut decision: Vec<Vec<Option<SourceDecision>>> = vec![vec![None; r]; n];
    for (p, &id) in ids.iter().enumerate() {
        let agent = &net.agents[&id];
        for res in 0..r {
            decision[p][res] = decide(
                r,
                agent,
                &incoming[p],
                res,
                p,
                &producible[p],
                &sell,
                excluded,
                &pos_of,
                None,
            );
        }
    }

    let mut state = PriceState {
        ids,
        sell,
        decision,
        sweeps_used,
    };
    break_forwarding_cycles(net, excluded, &mut state)?;
    Ok(state)
}

fn track_change(old: Cost, new: Cost, max_change: &mut f64, new_finite: &mut bool) {
    match (old, new) {
        (Cost::Finite(a), Cost::Finite(b)) => *max_change = max_change.max((a - b).abs()),
        (Cost::Unavailable, Cost::Finite(_)) => *new_finite = true,
        (Cost::Finite(_), Cost::Unavailable) => {
            // Downward relaxation never revokes availability.
            unreachable!("sell cost became unavailable");
        }
        (Cost::Unavailable, Cost::Unavailable) => {}
    }
}

/// Picks the best source for (agent, resource) from converged values.
/// `forbidden_edge` lets the cycle breaker exclude one specific link.
#[allow(clippy::too_many_arguments)]
fn decide<P: Fn(usize) -> usize>(
    r: usize,
    agent: &Agent,
    incoming: &[&crate::model::InfraLink],
    res: usize,
    p: usize,
    producible: &[usize],
    sell: &[Vec<Cost>],
    excluded: &ExcludedEdges,
    pos_of: &P,
    forbidden_edge: Option<usize>,
) -> Option<SourceDecision> {
    let acquire: Vec<Cost> = (0..r)
        .map(|i| {
            acquire_over(incoming, i, &agent.provider_costs, excluded, |m, rr| {
                sell[pos_of(m)][rr]
            })
            .map_or(Cost::Unavailable, |d| Cost::Finite(d.unit_cost))
        })
        .collect();

    let mut best: Option<SourceDecision> = None;
    if producible.contains(&res) {
        let input_costs: Vec<Cost> = (0..r).map(|i| sell[p][i].min_with(acquire[i])).collect();
        if let Cost::Finite(c) = make_cost(agent, &input_costs, res).expect("producible") {
            best = Some(SourceDecision {
                kind: SourceKind::Make,
                unit_cost: c,
            });
        }
    }
    if let Some(pc) = agent.provider_costs[res] {
        if best.is_none_or(|b| pc < b.unit_cost) {
            best = Some(SourceDecision {
                kind: SourceKind::Provider,
                unit_cost: pc,
            });
        }
    }
    for link in incoming {
        if excluded.contains(&(link.id, res)) || forbidden_edge == Some(link.id) {
            continue;
        }
        if let Cost::Finite(c) = sell[pos_of(link.from)][res].plus(link.transport_cost[res]) {
            if best.is_none_or(|b| c < b.unit_cost) {
                best = Some(SourceDecision {
                    kind: SourceKind::Edge(link.id),
                    unit_cost: c,
                });
            }
        }
    }
    best
}

/// Id tie-breaks alone cannot prevent two agents joined by zero-cost links
/// from electing each other as source. Quantity gain around such a pure
/// forwarding cycle is exactly one, so demand planning would never
/// terminate. Every finite value was grounded during relaxation, so some
/// cycle member must have an equal-cost alternative; re-point it.
fn break_forwarding_cycles(
    net: &Network,
    excluded: &ExcludedEdges,
    state: &mut PriceState,
) -> Result<(), SimError> {
    let n = state.ids.len();
    let r = net.resources();
    let ids = state.ids.clone();
    let pos_of = |id: usize| ids.binary_search(&id).expect("agent id");
    let mut incoming: Vec<Vec<&crate::model::InfraLink>> = vec![Vec::new(); n];
    for link in net.links.values() {
        incoming[pos_of(link.to)].push(link);
    }

    for res in 0..r {
        loop {
            // next[p] = origin position of a forwarding decision, if any.
            let next: Vec<Option<(usize, usize)>> = (0..n)
                .map(|p| match state.decision[p][res] {
                    Some(SourceDecision {
                        kind: SourceKind::Edge(lid),
                        ..
                    }) => {
                        let link = net.link(lid).expect("link exists");
                        Some((pos_of(link.from), lid))
                    }
                    _ => None,
                })
                .collect();

            let Some(cycle) = find_cycle(&next) else {
                break;
            };
            let mut fixed = false;
            for &(p, via_link) in &cycle {
                let in_cycle: BTreeSet<usize> = cycle.iter().map(|&(q, _)| q).collect();
                let id = ids[p];
                let agent = &net.agents[&id];
                let producible = crate::model::producible_set(agent);
                let alt = decide(
                    r,
                    agent,
                    &incoming[p],
                    res,
                    p,
                    &producible,
                    &state.sell,
                    excluded,
                    &pos_of,
                    Some(via_link),
                );
                if let Some(candidate) = alt {
                    let current = state.decision[p][res].expect("cycle member has decision");
                    let same_cost = (candidate.unit_cost - current.unit_cost).abs()
                        <= 1e-12 * (1.0 + current.unit_cost.abs());
                    let escapes = match candidate.kind {
                        SourceKind::Edge(lid) => {
                            let link = net.link(lid).expect("link exists");
                            !in_cycle.contains(&pos_of(link.from))
                        }
                        _ => true,
                    };
                    if same_cost && escapes {
                        state.decision[p][res] = Some(candidate);
                        fixed = true;
                        break;
                    }
                }
            }
            if !fixed {
                return Err(SimError::NonConvergence {
                    what: "forwarding-cycle grounding",
                    limit: n,
                });
            }
        }
    }
    Ok(())
}

/// Finds one cycle in a functional forwarding graph; returns the members
/// as (position, link used) pairs.
fn find_cycle(next: &[Option<(usize, usize)>]) -> Option<Vec<(usize, usize)>> {
    // 0 = unvisited, 1 = in progress, 2 = done.
    let mut mark = vec![0u8; next.len()];
    for start in 0..next.len() {
        if mark[start] != 0 {
            continue;
        }
        let mut path: Vec<usize> = Vec::new();
        let mut cur = start;
        loop {
            if mark[cur] == 1 {
                // Found a cycle: trim the path to the cycle portion.
                let at = path.iter().position(|&q| q == cur).expect("on path");
                let cycle: Vec<(usize, usize)> = path[at..]
                    .iter()
                    .map(|&q| (q, next[q].expect("forwarding").1))
                    .collect();
                return Some(cycle);
            }
            if mark[cur] == 2 {
                break;
            }
            mark[cur] = 1;
            path.push(cur);
            match next[cur] {
                Some((q, _)) => cur = q,
                None => break,
            }
        }
        for &q in &path {
            mark[q] = 2;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Agent, InfraLink, Network, ResourceCatalog};

    fn net_with(resources: Vec<&str>) -> Network {
        Network::new(ResourceCatalog::new(resources))
    }

    /// Provider of r0 at A, link to B which refines r0 into r1 at ratio 0.5.
    fn chain_net() -> Network {
        let mut net = net_with(vec!["raw", "good"]);
        let mut a = Agent::new(0, "A", 2);
        a.provider_costs[0] = Some(3.0);
        net.add_agent(a);
        let mut b = Agent::new(1, "B", 2);
        b.tech.set(0, 1, 0.5);
        net.add_agent(b);
        let mut l = InfraLink::new(0, 0, 1, 2);
        l.transport_cost[0] = Cost::Finite(0.0);
        net.add_link(l);
        net
    }

    #[test]
    fn isolated_agent_prices_unavailable() {
        let mut net = net_with(vec!["r"]);
        net.add_agent(Agent::new(0, "A", 1));
        let prices = price_fixed_point(&net).unwrap();
        assert_eq!(prices.sell_cost(0, 0), Cost::Unavailable);
        assert_eq!(prices.decision(0, 0), None);
    }

    #[test]
    fn chain_prices_make_at_half_input() {
        let net = chain_net();
        let prices = price_fixed_point(&net).unwrap();
        assert_eq!(prices.sell_cost(0, 0), Cost::Finite(3.0));
        assert_eq!(prices.sell_cost(1, 1), Cost::Finite(1.5));
        assert_eq!(prices.decision(1, 1).unwrap().kind, SourceKind::Make);
        assert_eq!(prices.decision(1, 0).unwrap().kind, SourceKind::Edge(0));
    }

    #[test]
    fn provider_beats_equal_or_costlier_edge() {
        let mut net = net_with(vec!["r"]);
        let mut a = Agent::new(0, "A", 1);
        a.provider_costs[0] = Some(1.5);
        net.add_agent(a);
        let mut b = Agent::new(1, "B", 1);
        b.provider_costs[0] = Some(2.0);
        net.add_agent(b);
        let mut l = InfraLink::new(0, 0, 1, 1);
        l.transport_cost[0] = Cost::Finite(1.0);
        net.add_link(l);
        let prices = price_fixed_point(&net).unwrap();
        // Edge offer is 1.5 + 1.0 = 2.5 > provider 2.0.
        let d = prices.decision(1, 0).unwrap();
        assert_eq!(d.kind, SourceKind::Provider);
        assert_eq!(d.unit_cost, 2.0);

        // Make the edge exactly tie: provider still wins.
        net.links.get_mut(&0).unwrap().transport_cost[0] = Cost::Finite(0.5);
        let prices = price_fixed_point(&net).unwrap();
        assert_eq!(prices.decision(1, 0).unwrap().kind, SourceKind::Provider);
    }

    #[test]
    fn equal_cost_edges_pick_lowest_id() {
        let mut net = net_with(vec!["r"]);
        let mut a = Agent::new(0, "A", 1);
        a.provider_costs[0] = Some(1.0);
        net.add_agent(a);
        let mut b = Agent::new(1, "B", 1);
        b.provider_costs[0] = Some(1.0);
        net.add_agent(b);
        net.add_agent(Agent::new(2, "C", 1));
        for (lid, from) in [(3usize, 0usize), (7, 1)] {
            let mut l = InfraLink::new(lid, from, 2, 1);
            l.transport_cost[0] = Cost::Finite(0.25);
            net.add_link(l);
        }
        let prices = price_fixed_point(&net).unwrap();
        let d = prices.decision(2, 0).unwrap();
        assert_eq!(d.kind, SourceKind::Edge(3));
        assert_eq!(d.unit_cost, 1.25);
    }

    #[test]
    fn make_cost_examples() {
        let mut agent = Agent::new(0, "A", 2);
        agent.tech.set(0, 1, 0.5);
        let costs = [Cost::Finite(3.0), Cost::Unavailable];
        assert_eq!(make_cost(&agent, &costs, 1).unwrap(), Cost::Finite(1.5));
        let unavailable = [Cost::Unavailable, Cost::Unavailable];
        assert_eq!(
            make_cost(&agent, &unavailable, 1).unwrap(),
            Cost::Unavailable
        );
        assert!(matches!(
            make_cost(&agent, &costs, 0),
            Err(SimError::NotProducible { .. })
        ));
    }

    #[test]
    fn buying_beats_making_when_cheaper() {
        // B can make the good from a pricey input or import the finished
        // good directly; importing is cheaper and must win.
        let mut net = net_with(vec!["raw", "good"]);
        let mut a = Agent::new(0, "A", 2);
        a.provider_costs[0] = Some(10.0);
        a.provider_costs[1] = Some(1.0);
        net.add_agent(a);
        let mut b = Agent::new(1, "B", 2);
        b.tech.set(0, 1, 1.0);
        net.add_agent(b);
        let mut l = InfraLink::new(0, 0, 1, 2);
        l.transport_cost[0] = Cost::Finite(0.1);
        l.transport_cost[1] = Cost::Finite(0.1);
        net.add_link(l);
        let prices = price_fixed_point(&net).unwrap();
        let d = prices.decision(1, 1).unwrap();
        assert_eq!(d.kind, SourceKind::Edge(0));
        assert!((d.unit_cost - 1.1).abs() < 1e-9);
    }

    /// Two agents that each refine the other's product, with one grounding
    /// provider. The contraction factor per round trip is 0.16, so the
    /// fixed point is well below the first-sweep values.
    fn looped_net() -> Network {
        let mut net = net_with(vec!["r1", "r2"]);
        let mut a = Agent::new(0, "A", 2);
        a.tech.set(1, 0, 0.4); // makes r1 from 0.4 r2
        net.add_agent(a);
        let mut b = Agent::new(1, "B", 2);
        b.tech.set(0, 1, 0.4); // makes r2 from 0.4 r1
        b.provider_costs[0] = Some(1.0);
        net.add_agent(b);
        for (lid, from, to) in [(0usize, 0usize, 1usize), (1, 1, 0)] {
            let mut l = InfraLink::new(lid, from, to, 2);
            l.transport_cost[0] = Cost::Finite(0.0);
            l.transport_cost[1] = Cost::Finite(0.0);
            net.add_link(l);
        }
        net
    }

    /// Brute-force oracle: plain Jacobi value iteration of the cost
    /// equations, independent of the production code path.
    fn brute_prices(net: &Network, iters: usize) -> Vec<Vec<Cost>> {
        let ids: Vec<usize> = net.agents.keys().copied().collect();
        let r = net.resources();
        let pos = |id: usize| ids.binary_search(&id).unwrap();
        let mut sell = vec![vec![Cost::Unavailable; r]; ids.len()];
        for _ in 0..iters {
            let prev = sell.clone();
            for (p, &id) in ids.iter().enumerate() {
                let agent = &net.agents[&id];
                for res in 0..r {
                    let mut acq = Cost::Unavailable;
                    if let Some(c) = agent.provider_costs[res] {
                        acq = acq.min_with(Cost::Finite(c));
                    }
                    for link in net.incoming(id) {
                        acq =
                            acq.min_with(prev[pos(link.from)][res].plus(link.transport_cost[res]));
                    }
                    let mut best = acq;
                    if (0..r).any(|i| agent.tech.get(i, res) > 0.0) {
                        let mut mk = Some(0.0);
                        for i in 0..r {
                            let a = agent.tech.get(i, res);
                            if a > 0.0 {
                                let mut input = Cost::Unavailable;
                                if let Some(c) = agent.provider_costs[i] {
                                    input = input.min_with(Cost::Finite(c));
                                }
                                for link in net.incoming(id) {
                                    input = input.min_with(
                                        prev[pos(link.from)][i].plus(link.transport_cost[i]),
                                    );
                                }
                                input = input.min_with(prev[p][i]);
                                match input {
                                    Cost::Finite(c) => mk = mk.map(|m| m + a * c),
                                    Cost::Unavailable => mk = None,
                                }
                            }
                        }
                        if let Some(m) = mk {
                            best = best.min_with(Cost::Finite(m));
                        }
                    }
                    sell[p][res] = best;
                }
            }
        }
        sell
    }

    #[test]
    fn looped_net_matches_brute_iteration() {
        let net = looped_net();
        let prices = price_fixed_point(&net).unwrap();
        let oracle = brute_prices(&net, 200);
        let ids: Vec<usize> = net.agents.keys().copied().collect();
        for (p, &id) in ids.iter().enumerate() {
            for res in 0..2 {
                match (prices.sell_cost(id, res), oracle[p][res]) {
                    (Cost::Finite(a), Cost::Finite(b)) => {
                        assert!((a - b).abs() < 1e-7, "agent {id} res {res}: {a} vs {b}")
                    }
                    (x, y) => assert_eq!(x, y, "agent {id} res {res}"),
                }
            }
        }
    }

    #[test]
    fn no_sources_stay_unavailable_without_error() {
        // A pure 2-cycle with no provider anywhere never becomes finite.
        let mut net = net_with(vec!["r"]);
        net.add_agent(Agent::new(0, "A", 1));
        net.add_agent(Agent::new(1, "B", 1));
        for (lid, from, to) in [(0usize, 0usize, 1usize), (1, 1, 0)] {
            let mut l = InfraLink::new(lid, from, to, 1);
            l.transport_cost[0] = Cost::Finite(0.0);
            net.add_link(l);
        }
        let prices = price_fixed_point(&net).unwrap();
        assert_eq!(prices.sell_cost(0, 0), Cost::Unavailable);
        assert_eq!(prices.sell_cost(1, 0), Cost::Unavailable);
    }

    #[test]
    fn zero_cost_tie_cycle_is_grounded() {
        // C provides r and feeds A over a high-id link; A and B exchange
        // over zero-cost links whose ids tempt both to pick each other.
        let mut net = net_with(vec!["r"]);
        net.add_agent(Agent::new(0, "A", 1));
        net.add_agent(Agent::new(1, "B", 1));
        let mut c = Agent::new(2, "C", 1);
        c.provider_costs[0] = Some(1.0);
        net.add_agent(c);
        let mk = |lid: usize, from: usize, to: usize| {
            let mut l = InfraLink::new(lid, from, to, 1);
            l.transport_cost[0] = Cost::Finite(0.0);
            l
        };
        net.add_link(mk(0, 1, 0)); // B -> A, tempting lowest id
        net.add_link(mk(1, 0, 1)); // A -> B
        net.add_link(mk(5, 2, 0)); // C -> A, the real ground
        let prices = price_fixed_point(&net).unwrap();
        assert_eq!(prices.sell_cost(0, 0), Cost::Finite(1.0));
        assert_eq!(prices.sell_cost(1, 0), Cost::Finite(1.0));
        // After grounding, following decisions must terminate.
        let mut cur = 0usize;
        for _ in 0..4 {
            match prices.decision(cur, 0).unwrap().kind {
                SourceKind::Edge(lid) => cur = net.link(lid).unwrap().from,
                SourceKind::Provider => return,
                SourceKind::Make => panic!("nothing to make here"),
            }
        }
        panic!("decision chain did not ground out");
    }

    #[test]
    fn decision_cost_matches_recomputation() {
        let net = looped_net();
        let prices = price_fixed_point(&net).unwrap();
        for &id in prices.agent_ids() {
            for res in 0..2 {
                if let Some(d) = prices.decision(id, res) {
                    let recomputed = match d.kind {
                        SourceKind::Provider => net.agents[&id].provider_costs[res].unwrap(),
                        SourceKind::Edge(lid) => {
                            let link = net.link(lid).unwrap();
                            prices.sell_cost(link.from, res).value().unwrap()
                                + link.transport_cost[res].value().unwrap()
                        }
                        SourceKind::Make => {
                            let agent = &net.agents[&id];
                            let mut total = 0.0;
                            for i in 0..2 {
                                let a = agent.tech.get(i, res);
                                if a > 0.0 {
                                    total += a * prices.sell_cost(id, i).value().unwrap();
                                }
                            }
                            total
                        }
                    };
                    assert!(
                        (d.unit_cost - recomputed).abs() < 1e-7,
                        "agent {id} res {res}: {} vs {recomputed}",
                        d.unit_cost
                    );
                }
            }
        }
    }

    #[test]
    fn agent_relabeling_preserves_costs() {
        // Iteration runs in id order; renaming ids (which permutes that
        // order) must not change converged values.
        let net = looped_net();
        let prices = price_fixed_point(&net).unwrap();

        let mut relabeled = net_with(vec!["r1", "r2"]);
        for (&id, agent) in &net.agents {
            let mut a2 = agent.clone();
            a2.id = 10 - id; // 0 -> 10, 1 -> 9: reverses sweep order
            relabeled.add_agent(a2);
        }
        for (&lid, link) in &net.links {
            let mut l2 = link.clone();
            l2.id = lid;
            l2.from = 10 - link.from;
            l2.to = 10 - link.to;
            relabeled.add_link(l2);
        }
        let re = price_fixed_point(&relabeled).unwrap();
        for &id in &[0usize, 1] {
            for res in 0..2 {
                let a = prices.sell_cost(id, res);
                let b = re.sell_cost(10 - id, res);
                match (a, b) {
                    (Cost::Finite(x), Cost::Finite(y)) => assert!((x - y).abs() < 1e-8),
                    (x, y) => assert_eq!(x, y),
                }
            }
        }
    }

    #[test]
    fn worsening_any_parameter_never_lowers_costs() {
        let mut rng = crate::rng::SimRng::new(0xBEEF);
        for trial in 0..40 {
            let mut net = net_with(vec!["a", "b"]);
            let mut p = Agent::new(0, "P", 2);
            p.provider_costs[0] = Some(rng.uniform(0.5, 2.0));
            p.provider_costs[1] = Some(rng.uniform(0.5, 2.0));
            net.add_agent(p);
            let mut q = Agent::new(1, "Q", 2);
            q.tech.set(0, 1, rng.uniform(0.1, 0.9));
            net.add_agent(q);
            let mut r2 = Agent::new(2, "R", 2);
            r2.tech.set(1, 0, rng.uniform(0.1, 0.9));
            net.add_agent(r2);
            for (lid, from, to) in [(0usize, 0usize, 1usize), (1, 1, 2), (2, 0, 2)] {
                let mut l = InfraLink::new(lid, from, to, 2);
                l.transport_cost[0] = Cost::Finite(rng.uniform(0.05, 0.5));
                l.transport_cost[1] = Cost::Finite(rng.uniform(0.05, 0.5));
                net.add_link(l);
            }
            let before = price_fixed_point(&net).unwrap();

            let mut worsened = net.clone();
            match trial % 3 {
                0 => {
                    let l = worsened.links.get_mut(&(trial % 3)).unwrap();
                    let res = trial % 2;
                    if let Cost::Finite(c) = l.transport_cost[res] {
                        l.transport_cost[res] = Cost::Finite(c * rng.uniform(1.1, 3.0));
                    }
                }
                1 => {
                    let a = worsened.agents.get_mut(&0).unwrap();
                    let res = trial % 2;
                    if let Some(c) = a.provider_costs[res] {
                        a.provider_costs[res] = Some(c * rng.uniform(1.1, 3.0));
                    }
                }
                _ => {
                    let a = worsened.agents.get_mut(&1).unwrap();
                    let c = a.tech.get(0, 1);
                    a.tech.set(0, 1, c * rng.uniform(1.1, 2.0));
                }
            }
            let after = price_fixed_point(&worsened).unwrap();
            for &id in before.agent_ids() {
                for res in 0..2 {
                    if let (Cost::Finite(x), Cost::Finite(y)) =
                        (before.sell_cost(id, res), after.sell_cost(id, res))
                    {
                        assert!(
                            y >= x - 1e-9,
                            "trial {trial}: cost fell at agent {id} res {res}: {x} -> {y}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn excluding_an_edge_reroutes() {
        let net = chain_net();
        let mut excluded = ExcludedEdges::new();
        excluded.insert((0, 0));
        let prices = price_fixed_point_excluding(&net, &excluded).unwrap();
        assert_eq!(prices.sell_cost(1, 0), Cost::Unavailable);
        assert_eq!(prices.sell_cost(1, 1), Cost::Unavailable);
        assert_eq!(prices.sell_cost(0, 0), Cost::Finite(3.0));
    }
}
