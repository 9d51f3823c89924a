//! Network construction: the two reference fixtures and seeded random
//! generation (directed Erdős–Rényi topologies with role assignment and
//! synthesized technology matrices).

use crate::error::SimError;
use crate::model::{Agent, Capacity, Cost, InfraLink, Network, ResourceCatalog, TechnologyMatrix};
use crate::production::productivity_check;
use crate::rng::SimRng;

/// Fractions of generated agents acting as raw-material providers, as
/// producers, and as final consumers. Must sum to 1; generation always
/// forces at least one provider and one consumer.
#[derive(Debug, Clone, Copy)]
pub struct RoleMix {
    pub provider_fraction: f64,
    pub producer_fraction: f64,
    pub consumer_fraction: f64,
}

impl RoleMix {
    pub fn new(provider: f64, producer: f64, consumer: f64) -> Self {
        let mix = RoleMix {
            provider_fraction: provider,
            producer_fraction: producer,
            consumer_fraction: consumer,
        };
        assert!(
            mix.is_valid(),
            "role fractions must be nonnegative and sum to 1"
        );
        mix
    }

    pub fn is_valid(&self) -> bool {
        let parts = [
            self.provider_fraction,
            self.producer_fraction,
            self.consumer_fraction,
        ];
        parts.iter().all(|&f| f >= 0.0) && (parts.iter().sum::<f64>() - 1.0).abs() < 1e-9
    }
}

impl Default for RoleMix {
    fn default() -> Self {
        RoleMix::new(0.2, 0.3, 0.5)
    }
}

/// Synthesizes a technology matrix over `resources` rows in which each
/// producible column has one dominant input coefficient in [0.5, 0.9) and
/// smaller ones in [0, 0.3); the whole matrix is rescaled if the
/// producible-submatrix spectral radius exceeds 0.9, which preserves each
/// column's dominance.
pub fn synth_tech_matrix(
    rng: &mut SimRng,
    producible: &[usize],
    resources: usize,
) -> TechnologyMatrix {
    assert!(!producible.is_empty(), "producible set must be nonempty");
    let mut tech = TechnologyMatrix::zero(resources);
    for &col in producible {
        let dominant_row = rng.below(resources as u64) as usize;
        for row in 0..resources {
            let value = if row == dominant_row {
                rng.uniform(0.5, 0.9)
            } else {
                rng.uniform(0.0, 0.3)
            };
            tech.set(row, col, value);
        }
    }
    let check = productivity_check(&tech, producible);
    if check.radius_estimate > 0.9 {
        let factor = 0.9 / check.radius_estimate;
        for row in 0..resources {
            for col in 0..resources {
                let v = tech.get(row, col);
                if v != 0.0 {
                    tech.set(row, col, v * factor);
                }
            }
        }
    }
    tech
}

const CONNECTIVITY_RESAMPLES: usize = 100;

/// Directed G(n, p) network with seeded role assignment. Edges are
/// resampled up to 100 times until the undirected projection is connected;
/// afterwards roles, matrices, provider costs, transports, and final
/// demands are drawn from the same stream, so equal seeds give equal
/// networks. Generated links are uncapacitated.
pub fn erdos_renyi(
    n: usize,
    p: f64,
    mix: &RoleMix,
    resources: usize,
    seed: u64,
) -> Result<Network, SimError> {
    assert!(n >= 2, "need at least two agents");
    assert!((0.0..=1.0).contains(&p), "edge probability out of range");
    assert!(mix.is_valid(), "invalid role mix");
    assert!(resources >= 1, "need at least one resource");

    let mut rng = SimRng::new(seed);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut connected = false;
    let mut attempts = 0;
    while attempts < CONNECTIVITY_RESAMPLES {
        attempts += 1;
        edges.clear();
        for from in 0..n {
            for to in 0..n {
                if from != to && rng.bernoulli(p) {
                    edges.push((from, to));
                }
            }
        }
        if weakly_connected(n, &edges) {
            connected = true;
            break;
        }
    }
    if !connected {
        return Err(SimError::Disconnected { attempts, n, p });
    }

    let names: Vec<String> = (0..resources).map(|r| format!("r{r}")).collect();
    let mut net = Network::new(ResourceCatalog::new(names));

    // Roles drawn by threshold on a uniform variate; the first agent is
    // forced to provider and the last to consumer if the draw missed them.
    #[derive(Clone, Copy, PartialEq)]
    enum Role {
        Provider,
        Producer,
        Consumer,
    }
    let mut roles: Vec<Role> = (0..n)
        .map(|_| {
            let u = rng.next_f64();
            if u < mix.provider_fraction {
                Role::Provider
            } else if u < mix.provider_fraction + mix.producer_fraction {
                Role::Producer
            } else {
                Role::Consumer
            }
        })
        .collect();
    if !roles.contains(&Role::Provider) {
        roles[0] = Role::Provider;
    }
    if !roles.contains(&Role::Consumer) {
        roles[n - 1] = Role::Consumer;
    }

    for (id, &role) in roles.iter().enumerate() {
        let mut agent = Agent::new(id, format!("N{id}"), resources);
        match role {
            Role::Provider => {
                let count = 1 + rng.below(resources as u64) as usize;
                let mut supplied: Vec<usize> = (0..resources).collect();
                rng.shuffle(&mut supplied);
                supplied.truncate(count);
                supplied.sort_unstable();
                for res in supplied {
                    agent.provider_costs[res] = Some(rng.uniform(0.5, 2.0));
                }
            }
            Role::Producer => {
                let count = 1 + rng.below(resources as u64) as usize;
                let mut producible: Vec<usize> = (0..resources).collect();
                rng.shuffle(&mut producible);
                producible.truncate(count);
                producible.sort_unstable();
                agent.tech = synth_tech_matrix(&mut rng, &producible, resources);
            }
            Role::Consumer => {
                let count = 1 + rng.below(resources as u64) as usize;
                let mut wanted: Vec<usize> = (0..resources).collect();
                rng.shuffle(&mut wanted);
                wanted.truncate(count);
                wanted.sort_unstable();
                for res in wanted {
                    agent.final_demand[res] = rng.uniform(1.0, 10.0);
                }
                agent.final_demand_priority = id as i64;
            }
        }
        net.add_agent(agent);
    }

    for (lid, &(from, to)) in edges.iter().enumerate() {
        let mut link = InfraLink::new(lid, from, to, resources);
        for res in 0..resources {
            link.transport_cost[res] = Cost::Finite(rng.uniform(0.05, 0.5));
        }
        link.priority = lid as i64;
        net.add_link(link);
    }

    // Consumers only demand what the built topology can actually price.
    let prices = crate::pricing::price_fixed_point(&net)?;
    let mut unpriced: Vec<(usize, usize)> = Vec::new();
    for (&id, a) in &net.agents {
        for res in 0..resources {
            if a.final_demand[res] > 0.0 && prices.decision(id, res).is_none() {
                unpriced.push((id, res));
            }
        }
    }
    for (id, res) in unpriced {
        net.agents.get_mut(&id).expect("agent").final_demand[res] = 0.0;
    }
    Ok(net)
}

fn weakly_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let root = find(&mut parent, 0);
    (1..n).all(|x| find(&mut parent, x) == root)
}

/// Three agents, three links, three resources; A1 sells raw R1 cheaply and
/// R2 dearly, A2 refines R1 into R2, A3 refines R1 and R2 into R3 for its
/// own final demand. The cost-optimal assignment is A2 making R2 and A3
/// making R3; breaking the A2->A3 link forces A3 onto the dear raw R2.
pub fn validation_fixture_3node() -> Network {
    let mut net = Network::new(ResourceCatalog::new(vec!["R1", "R2", "R3"]));

    let mut a1 = Agent::new(1, "A1", 3);
    a1.provider_costs[0] = Some(1.0);
    a1.provider_costs[1] = Some(5.0);
    net.add_agent(a1);

    let mut a2 = Agent::new(2, "A2", 3);
    a2.tech.set(0, 1, 0.5);
    net.add_agent(a2);

    let mut a3 = Agent::new(3, "A3", 3);
    a3.tech.set(0, 2, 0.4);
    a3.tech.set(1, 2, 0.6);
    a3.final_demand[2] = 10.0;
    net.add_agent(a3);

    let mut t1 = InfraLink::new(1, 1, 2, 3);
    t1.transport_cost[0] = Cost::Finite(0.1);
    t1.transport_cost[1] = Cost::Finite(0.6);
    net.add_link(t1);

    let mut t2 = InfraLink::new(2, 2, 3, 3);
    t2.transport_cost[0] = Cost::Finite(0.2);
    t2.transport_cost[1] = Cost::Finite(0.2);
    net.add_link(t2);

    let mut t3 = InfraLink::new(3, 1, 3, 3);
    t3.transport_cost[0] = Cost::Finite(0.2);
    t3.transport_cost[1] = Cost::Finite(0.7);
    net.add_link(t3);

    net
}

// Block-fixture constants. Resource indices throughout:
// 0 power, 1 water, 2 gas, 3 petrol, 4 capital_goods, 5 consumer_goods.
// The numbers are illustrative defaults for the bundled urban-block study
// network; orderings between scenarios, not the absolute values, are what
// the test suite pins down.

pub const BLOCK_RESOURCES: [&str; 6] = [
    "power",
    "water",
    "gas",
    "petrol",
    "capital_goods",
    "consumer_goods",
];

/// A0's raw supply costs: petrol, capital goods.
const A0_PROVIDER: [(usize, f64); 2] = [(3, 1.0), (4, 1.2)];
/// A1's raw supply costs: backup power, tanked water, piped gas. The
/// power and water entries are dear fallbacks; producing normally beats
/// them by a wide margin.
const A1_PROVIDER: [(usize, f64); 3] = [(0, 12.0), (1, 8.0), (2, 1.0)];

/// A1 generates power from water, gas, petrol, capital, services, and a
/// little of its own output (column 0; rows are inputs).
const A1_POWER_COLUMN: [f64; 6] = [0.06, 0.12, 1.05, 0.28, 0.15, 0.05];

/// A2's full technology matrix, row-major: the utility/manufacturer that
/// can produce power, water, and consumer goods (columns 0, 1, 5).
const A2_TECH: [[f64; 6]; 6] = [
    [0.18, 0.90, 0.0, 0.0, 0.0, 0.20],
    [0.30, 0.10, 0.0, 0.0, 0.0, 0.30],
    [0.76, 0.10, 0.0, 0.0, 0.0, 0.40],
    [0.30, 0.08, 0.0, 0.0, 0.0, 0.30],
    [0.14, 0.05, 0.0, 0.0, 0.0, 0.20],
    [0.10, 0.05, 0.0, 0.0, 0.0, 0.00],
];

/// A3 and A4 produce consumer goods (column 5) from the other five
/// resources; A4 is slightly less efficient and also consumes a little of
/// its own output.
const A3_GOODS_COLUMN: [f64; 6] = [0.42, 0.48, 0.95, 0.48, 0.34, 0.00];
const A4_GOODS_COLUMN: [f64; 6] = [0.45, 0.50, 0.98, 0.50, 0.36, 0.05];

/// Household self-production of consumer goods: feasible but markedly less
/// efficient than the commercial producers.
const HOUSEHOLD_GOODS_COLUMN: [f64; 6] = [0.50, 0.60, 1.40, 0.90, 0.70, 0.00];

/// Final demand vectors for the nine consumer agents A5..A13, over the six
/// resources in index order. Aggregate quantity: 570.5.
pub const BLOCK_DEMANDS: [[f64; 6]; 9] = [
    [9.75, 9.75, 12.75, 13.75, 17.75, 19.75],
    [10.75, 9.75, 11.75, 9.75, 9.75, 17.75],
    [9.75, 9.75, 9.75, 9.75, 9.75, 10.75],
    [9.75, 9.75, 9.75, 9.75, 9.75, 10.75],
    [9.75, 9.75, 9.75, 9.75, 9.75, 10.75],
    [9.75, 9.75, 9.75, 9.75, 9.75, 9.75],
    [9.75, 9.75, 9.75, 9.75, 9.75, 10.75],
    [9.75, 10.75, 9.75, 9.75, 9.75, 10.75],
    [9.75, 9.75, 9.75, 9.75, 10.75, 10.75],
];

/// Per-resource unit costs carried by one link.
type LinkCosts = &'static [(usize, f64)];

/// Commercial links: (id, from, to, [(resource, unit cost); ...]).
/// Link 2 (A2 -> A1) is the one whose costs the heavy-infrastructure
/// scenarios scale; links 5 and 6 are the ones those scenarios break.
const BLOCK_COMMERCIAL_LINKS: [(usize, usize, usize, LinkCosts); 7] = [
    (0, 1, 2, &[(0, 0.08), (1, 0.08), (2, 0.08)]),
    (1, 0, 2, &[(3, 0.03), (4, 0.03)]),
    (2, 2, 1, &[(3, 0.09), (4, 0.09), (5, 0.09)]),
    (
        3,
        2,
        3,
        &[(0, 0.05), (1, 0.05), (2, 0.05), (3, 0.08), (4, 0.08)],
    ),
    (
        4,
        3,
        4,
        &[
            (0, 0.05),
            (1, 0.05),
            (2, 0.05),
            (3, 0.08),
            (4, 0.08),
            (5, 0.05),
        ],
    ),
    (5, 0, 3, &[(3, 0.03), (4, 0.03)]),
    (6, 0, 4, &[(3, 0.04), (4, 0.04)]),
];

/// Base unit cost of the first consumer link (A4 -> A5); each later
/// consumer link costs a step more, spreading delivered costs across the
/// consumer agents. All consumer links cost more per unit than any
/// commercial link.
const CONSUMER_LINK_BASE_COST: f64 = 0.10;
const CONSUMER_LINK_COST_STEP: f64 = 0.012;

/// Generous ceiling on every carried resource: finite, so the capacity
/// machinery is exercised, but far above any flow the fixture produces.
const BLOCK_LINK_CAPACITY: f64 = 1.0e6;

/// The 14-agent, 16-link, 6-resource urban block: A0/A1 inject raw
/// materials, A2..A4 form the production loop, and consumer agents A5..A13
/// hang off A4 on dedicated consumer links. See the constants above for
/// every number.
pub fn block_fixture() -> Network {
    let names: Vec<&str> = BLOCK_RESOURCES.to_vec();
    let mut net = Network::new(ResourceCatalog::new(names));

    let mut a0 = Agent::new(0, "A0", 6);
    for (res, cost) in A0_PROVIDER {
        a0.provider_costs[res] = Some(cost);
    }
    net.add_agent(a0);

    let mut a1 = Agent::new(1, "A1", 6);
    for (res, cost) in A1_PROVIDER {
        a1.provider_costs[res] = Some(cost);
    }
    for (row, &v) in A1_POWER_COLUMN.iter().enumerate() {
        a1.tech.set(row, 0, v);
    }
    net.add_agent(a1);

    let mut a2 = Agent::new(2, "A2", 6);
    a2.tech = TechnologyMatrix::from_rows(&A2_TECH.map(|r| r.to_vec()));
    net.add_agent(a2);

    let mut a3 = Agent::new(3, "A3", 6);
    for (row, &v) in A3_GOODS_COLUMN.iter().enumerate() {
        a3.tech.set(row, 5, v);
    }
    net.add_agent(a3);

    let mut a4 = Agent::new(4, "A4", 6);
    for (row, &v) in A4_GOODS_COLUMN.iter().enumerate() {
        a4.tech.set(row, 5, v);
    }
    net.add_agent(a4);

    for (k, demand) in BLOCK_DEMANDS.iter().enumerate() {
        let id = 5 + k;
        let mut agent = Agent::new(id, format!("A{id}"), 6);
        for (row, &v) in HOUSEHOLD_GOODS_COLUMN.iter().enumerate() {
            agent.tech.set(row, 5, v);
        }
        agent.final_demand = demand.to_vec();
        agent.final_demand_priority = id as i64;
        net.add_agent(agent);
    }

    for (id, from, to, costs) in BLOCK_COMMERCIAL_LINKS {
        let mut link = InfraLink::new(id, from, to, 6);
        for &(res, cost) in costs {
            link.transport_cost[res] = Cost::Finite(cost);
            link.capacity[res] = Capacity::Finite(BLOCK_LINK_CAPACITY);
        }
        link.priority = id as i64;
        net.add_link(link);
    }

    for k in 0..9 {
        let id = 7 + k;
        let mut link = InfraLink::new(id, 4, 5 + k, 6);
        let unit = CONSUMER_LINK_BASE_COST + CONSUMER_LINK_COST_STEP * k as f64;
        for res in 0..6 {
            link.transport_cost[res] = Cost::Finite(unit);
            link.capacity[res] = Capacity::Finite(BLOCK_LINK_CAPACITY);
        }
        link.priority = id as i64;
        net.add_link(link);
    }

    net
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{allocate, flow_invariants, Demands};
    use crate::model::validate_network;
    use crate::pricing::{price_fixed_point, SourceKind};
    use crate::production::productivity_check;

    #[test]
    fn three_node_counts_and_validity() {
        let net = validation_fixture_3node();
        assert_eq!(net.agents.len(), 3);
        assert_eq!(net.links.len(), 3);
        assert_eq!(net.resources(), 3);
        assert!(validate_network(&net).is_valid());
    }

    #[test]
    fn three_node_optimal_assignment() {
        let net = validation_fixture_3node();
        let prices = price_fixed_point(&net).unwrap();
        assert_eq!(prices.decision(3, 2).unwrap().kind, SourceKind::Make);
        assert_eq!(prices.decision(2, 1).unwrap().kind, SourceKind::Make);
        // A3's unit cost: 0.4 * (1.0 + 0.2) + 0.6 * (0.55 + 0.2).
        let sell = prices.sell_cost(3, 2).value().unwrap();
        assert!((sell - 0.93).abs() < 1e-9);
    }

    #[test]
    fn three_node_flows_conserve() {
        let net = validation_fixture_3node();
        let demands: Demands = net.final_demands();
        let flow = allocate(&net, &demands).unwrap();
        assert_eq!(flow.total_shortfall(), 0.0);
        // 10 R3 needs 4 R1 direct, 6 R2 from A2, which needs 3 R1.
        assert!((flow.edge_flow[&3][0] - 4.0).abs() < 1e-9);
        assert!((flow.edge_flow[&2][1] - 6.0).abs() < 1e-9);
        assert!((flow.edge_flow[&1][0] - 3.0).abs() < 1e-9);
        assert!(flow_invariants(&net, &demands, &flow).is_empty());
    }

    #[test]
    fn block_counts_and_validity() {
        let net = block_fixture();
        assert_eq!(net.agents.len(), 14);
        assert_eq!(net.links.len(), 16);
        assert_eq!(net.resources(), 6);
        assert!(validate_network(&net).is_valid());
    }

    #[test]
    fn block_a2_matrix_values() {
        let net = block_fixture();
        let a2 = net.agent(2).unwrap();
        assert_eq!(a2.tech.get(2, 0), 0.76);
        assert_eq!(a2.tech.get(0, 1), 0.90);
        assert_eq!(a2.tech.get(2, 5), 0.40);
        let check = productivity_check(&a2.tech, &[0, 1, 5]);
        assert!(check.productive);
        assert!(check.radius_estimate > 0.70 && check.radius_estimate < 0.74);
    }

    #[test]
    fn block_demand_vectors() {
        let net = block_fixture();
        let a5 = net.agent(5).unwrap();
        assert_eq!(
            a5.final_demand,
            vec![9.75, 9.75, 12.75, 13.75, 17.75, 19.75]
        );
        let total: f64 = net.final_demands().values().flatten().sum();
        assert!((total - 570.5).abs() < 1e-9);
    }

    #[test]
    fn block_allocates_fully_with_finite_costs() {
        let net = block_fixture();
        let demands = net.final_demands();
        let flow = allocate(&net, &demands).unwrap();
        assert!(flow.total_shortfall() < 1e-9);
        assert!(flow_invariants(&net, &demands, &flow).is_empty());
        for (&id, costs) in &flow.delivered_cost {
            if id < 5 {
                continue;
            }
            for res in 0..6 {
                let c = costs[res].value().expect("finite consumer cost");
                assert!(c > 0.0 && c < 10.0, "agent {id} res {res} cost {c}");
            }
        }
    }

    #[test]
    fn block_households_buy_rather_than_make() {
        let net = block_fixture();
        let prices = price_fixed_point(&net).unwrap();
        for id in 5..14 {
            assert_ne!(
                prices.decision(id, 5).unwrap().kind,
                SourceKind::Make,
                "household A{id} should import consumer goods"
            );
        }
    }

    #[test]
    fn synth_matrix_dominance_and_radius() {
        let mut rng = SimRng::new(11);
        for _ in 0..50 {
            let producible = vec![0, 2];
            let tech = synth_tech_matrix(&mut rng, &producible, 4);
            for &col in &producible {
                let column: Vec<f64> = (0..4).map(|row| tech.get(row, col)).collect();
                let max = column.iter().cloned().fold(f64::MIN, f64::max);
                let count_at_max = column.iter().filter(|&&v| v == max).count();
                assert_eq!(count_at_max, 1, "dominant entry must be unique");
            }
            for col in [1, 3] {
                for row in 0..4 {
                    assert_eq!(tech.get(row, col), 0.0);
                }
            }
            let check = productivity_check(&tech, &producible);
            assert!(check.productive);
            assert!(check.radius_estimate <= 0.9 + 1e-9);
        }
    }

    #[test]
    fn erdos_renyi_determinism_and_counts() {
        let mix = RoleMix::default();
        let a = erdos_renyi(20, 0.2, &mix, 3, 7).unwrap();
        let b = erdos_renyi(20, 0.2, &mix, 3, 7).unwrap();
        assert_eq!(a, b);
        assert!(validate_network(&a).is_valid());

        let complete = erdos_renyi(4, 1.0, &mix, 2, 1).unwrap();
        assert_eq!(complete.links.len(), 12);

        assert!(matches!(
            erdos_renyi(2, 0.0, &mix, 2, 1),
            Err(SimError::Disconnected { .. })
        ));
    }

    #[test]
    fn generated_demand_is_always_priceable() {
        let mix = RoleMix::default();
        for seed in 0..20 {
            let Ok(net) = erdos_renyi(8, 0.25, &mix, 3, seed) else {
                continue;
            };
            let demands = net.final_demands();
            let flow = allocate(&net, &demands).unwrap();
            assert!(flow_invariants(&net, &demands, &flow).is_empty());
            assert_eq!(flow.total_shortfall(), 0.0);
        }
    }
}
