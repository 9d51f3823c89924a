//! Timestep simulation driver, the factorial disruption scenarios for the
//! block fixture, and resilience metrics: total cost, supply curves, and
//! fraction-of-demand-at-price.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::allocation::{allocate, Demands, FlowState};
use crate::disruption::{
    apply_event, generator_step, revert_event, DisruptionEvent, Duration, EventKind, Generator,
    GeneratorState,
};
use crate::error::SimError;
use crate::model::{Cost, Network};

/// A named experiment: scheduled events, optional stochastic generators,
/// a horizon, and (optionally) demand vectors overriding the network's
/// built-in final demands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    /// (timestep, event) pairs; events apply at the start of their
    /// timestep and revert after their duration elapses.
    #[serde(default)]
    pub timeline: Vec<(usize, DisruptionEvent)>,
    #[serde(default)]
    pub generators: Vec<Generator>,
    pub horizon: usize,
    /// Per-agent final-demand overrides, installed before the first
    /// timestep.
    #[serde(default)]
    pub demand_config: Option<Demands>,
    /// Demand multipliers for the supply-curve sweep.
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    /// Recorded in result metadata; also the base for generator seeding
    /// when generators carry seed 0.
    #[serde(default)]
    pub seed: u64,
}

pub fn default_scales() -> Vec<f64> {
    vec![0.5, 1.0, 1.5, 2.0]
}

impl ScenarioSpec {
    /// A disruption-free scenario.
    pub fn stationary(name: impl Into<String>, horizon: usize) -> Self {
        ScenarioSpec {
            name: name.into(),
            timeline: Vec::new(),
            generators: Vec::new(),
            horizon,
            demand_config: None,
            scales: default_scales(),
            seed: 0,
        }
    }

    /// Stable hex digest of the full configuration.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Marginal-cost step function: ascending (cumulative quantity, unit cost)
/// pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplyCurve {
    pub steps: Vec<(f64, f64)>,
    pub provenance: String,
    /// Total quantity the sweep asked for at its largest attempted scale.
    pub total_demanded: f64,
    /// True if some sweep scale could not be fully served.
    pub truncated: bool,
}

impl SupplyCurve {
    /// Largest cumulative quantity deliverable at unit cost <= price.
    pub fn deliverable_at(&self, price: f64) -> f64 {
        self.steps
            .iter()
            .take_while(|(_, cost)| *cost <= price)
            .map(|(q, _)| *q)
            .fold(0.0, f64::max)
    }
}

/// One timestep's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestepRecord {
    pub timestep: usize,
    pub total_cost: f64,
    pub total_shortfall: f64,
    /// Quantity-weighted average delivered cost per consumer agent.
    pub consumer_cost: BTreeMap<usize, f64>,
    pub flow: FlowState,
}

/// Everything a scenario run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub scenario: String,
    pub seed: u64,
    pub config_hash: String,
    pub records: Vec<TimestepRecord>,
    pub curve: SupplyCurve,
}

/// Cost of the satisfied final demand: served quantity times delivered
/// unit cost, summed over consumers and resources. Shortfalls contribute
/// nothing here; they are reported separately.
pub fn total_cost(state: &FlowState, demands: &Demands) -> f64 {
    let mut total = 0.0;
    for (&agent, vec) in demands {
        for (res, &q) in vec.iter().enumerate() {
            if q <= 0.0 {
                continue;
            }
            let served = state.served(demands, agent, res);
            if served <= 0.0 {
                continue;
            }
            if let Cost::Finite(c) = state.delivered_cost[&agent][res] {
                total += served * c;
            }
        }
    }
    total
}

fn consumer_costs(state: &FlowState, demands: &Demands) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    for (&agent, vec) in demands {
        let mut quantity = 0.0;
        let mut cost = 0.0;
        for (res, &q) in vec.iter().enumerate() {
            if q <= 0.0 {
                continue;
            }
            let served = state.served(demands, agent, res);
            if served <= 0.0 {
                continue;
            }
            if let Cost::Finite(c) = state.delivered_cost[&agent][res] {
                quantity += served;
                cost += served * c;
            }
        }
        if quantity > 0.0 {
            out.insert(agent, cost / quantity);
        }
    }
    out
}

/// Runs the scenario: per timestep, expire and apply due events (timeline
/// first, then generators), allocate against the current demands, and
/// record metrics. The network only changes between timesteps. The final
/// supply curve is swept on the end-state network.
pub fn run(net: &Network, spec: &ScenarioSpec) -> Result<RunResult, SimError> {
    assert!(spec.horizon >= 1, "horizon must be at least 1");
    let mut working = net.clone();
    if let Some(overrides) = &spec.demand_config {
        for (&agent, vec) in overrides {
            let want = working.catalog.len();
            let a = working
                .agents
                .get_mut(&agent)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("agent {agent}")))?;
            if vec.len() != want {
                return Err(SimError::InvalidNetwork(format!(
                    "demand override for agent {agent} has {} entries, expected {want}",
                    vec.len()
                )));
            }
            a.final_demand = vec.clone();
        }
    }
    let baseline = working.clone();

    let mut gen_states: Vec<GeneratorState> =
        spec.generators.iter().map(GeneratorState::new).collect();
    // (end timestep, event) for scheduled timeline events with durations.
    let mut expiring: Vec<(usize, DisruptionEvent)> = Vec::new();

    let mut records = Vec::with_capacity(spec.horizon);
    for t in 1..=spec.horizon {
        let due: Vec<DisruptionEvent> = expiring
            .iter()
            .filter(|(end, _)| *end == t)
            .map(|(_, e)| e.clone())
            .collect();
        expiring.retain(|(end, _)| *end != t);
        for event in &due {
            working = revert_event(&working, &baseline, event).map_err(|e| tag(t, e))?;
        }

        for (when, event) in &spec.timeline {
            if *when == t {
                working = apply_event(&working, event).map_err(|e| tag(t, e))?;
                if let Duration::Timesteps(d) = event.duration {
                    expiring.push((t + d, event.clone()));
                }
            }
        }
        for (generator, state) in spec.generators.iter().zip(&mut gen_states) {
            let (starts, ends) = generator_step(generator, t, state);
            for event in &ends {
                working = revert_event(&working, &baseline, event).map_err(|e| tag(t, e))?;
            }
            for event in &starts {
                working = apply_event(&working, event).map_err(|e| tag(t, e))?;
            }
        }

        let demands = working.final_demands();
        let flow = allocate(&working, &demands).map_err(|e| tag(t, e))?;
        records.push(TimestepRecord {
            timestep: t,
            total_cost: total_cost(&flow, &demands),
            total_shortfall: flow.total_shortfall(),
            consumer_cost: consumer_costs(&flow, &demands),
            flow,
        });
    }

    let demands = working.final_demands();
    let curve = supply_curve_named(&working, &demands, &spec.scales, &spec.name)?;
    Ok(RunResult {
        scenario: spec.name.clone(),
        seed: spec.seed,
        config_hash: spec.config_hash(),
        records,
        curve,
    })
}

fn tag(t: usize, e: SimError) -> SimError {
    SimError::AtTimestep {
        t,
        source: Box::new(e),
    }
}

/// Sweeps demand multipliers, allocating each, and builds the aggregate
/// marginal-cost curve: per scale, consumers are sorted by their
/// quantity-weighted average delivered cost and emitted as cumulative
/// steps; scales then merge by ascending quantity. A scale that cannot be
/// fully served truncates the sweep (its points are excluded) and the
/// curve is marked.
pub fn supply_curve(
    net: &Network,
    demand_config: &Demands,
    scales: &[f64],
) -> Result<SupplyCurve, SimError> {
    supply_curve_named(net, demand_config, scales, "")
}

fn supply_curve_named(
    net: &Network,
    demand_config: &Demands,
    scales: &[f64],
    provenance: &str,
) -> Result<SupplyCurve, SimError> {
    assert!(!scales.is_empty(), "need at least one scale");
    assert!(
        scales.windows(2).all(|w| w[0] < w[1]) && scales[0] > 0.0,
        "scales must be ascending and positive"
    );
    let total_base: f64 = demand_config.values().flatten().sum();
    let shortfall_eps = 1e-9 * (1.0 + total_base);

    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut truncated = false;
    let mut total_demanded: f64 = 0.0;
    for &scale in scales {
        let demands: Demands = demand_config
            .iter()
            .map(|(&id, v)| (id, v.iter().map(|q| q * scale).collect()))
            .collect();
        total_demanded = total_base * scale;
        let flow = allocate(net, &demands)?;
        if flow.total_shortfall() > shortfall_eps * scale {
            truncated = true;
            break;
        }
        let costs = consumer_costs(&flow, &demands);
        let mut consumers: Vec<(f64, f64)> = costs
            .iter()
            .map(|(&agent, &avg)| {
                let qty: f64 = demands[&agent].iter().sum();
                (avg, qty)
            })
            .collect();
        consumers.sort_by(|a, b| a.partial_cmp(b).expect("finite costs"));
        let mut cumulative = 0.0;
        for (avg, qty) in consumers {
            cumulative += qty;
            points.push((cumulative, avg));
        }
    }

    // Merge sample points from all scales into one step function: sort by
    // quantity, break quantity ties by cost, and drop points under the
    // running cost envelope so steps stay non-decreasing. Costs equal up
    // to rounding noise are clamped to the envelope rather than dropped.
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    let mut steps: Vec<(f64, f64)> = Vec::new();
    for (q, mut c) in points {
        if let Some(&(last_q, last_c)) = steps.last() {
            if c < last_c - 1e-9 * (1.0 + last_c.abs()) {
                continue;
            }
            c = c.max(last_c);
            if (q - last_q).abs() < 1e-12 {
                steps.pop();
            }
        }
        steps.push((q, c));
    }

    Ok(SupplyCurve {
        steps,
        provenance: provenance.to_string(),
        total_demanded,
        truncated,
    })
}

/// Share of the total demanded quantity obtainable at marginal cost at or
/// below `price`.
pub fn satisfied_fraction(curve: &SupplyCurve, price: f64) -> f64 {
    if curve.total_demanded <= 0.0 {
        return 1.0;
    }
    (curve.deliverable_at(price) / curve.total_demanded).min(1.0)
}

/// The two links the infrastructure scenarios sever (A0->A3, A0->A4) and
/// the one whose costs the heavy variant scales (A2->A1).
const INFRA_BREAK_LINKS: [usize; 2] = [5, 6];
const INFRA_COST_LINK: usize = 2;
const INFRA_COST_FACTOR: f64 = 3.0;
/// Technology-matrix severity factors for the production scenarios, which
/// strike agents A1..A5.
const PRODUCTION_AGENTS: std::ops::RangeInclusive<usize> = 1..=5;
const MEDIUM_PRODUCTION_FACTOR: f64 = 1.25;
const HEAVY_PRODUCTION_FACTOR: f64 = 1.75;

fn infrastructure_events(heavy: bool) -> Vec<DisruptionEvent> {
    let mut events: Vec<DisruptionEvent> = INFRA_BREAK_LINKS
        .iter()
        .map(|&link| DisruptionEvent::permanent(EventKind::LinkBreak { link }))
        .collect();
    if heavy {
        events.push(DisruptionEvent::permanent(EventKind::LinkCostScale {
            link: INFRA_COST_LINK,
            resources: vec![],
            factor: INFRA_COST_FACTOR,
        }));
    }
    events
}

fn production_events(net: &Network, factor: f64) -> Vec<DisruptionEvent> {
    let r = net.resources();
    PRODUCTION_AGENTS
        .flat_map(|agent| {
            (0..r).map(move |row| {
                DisruptionEvent::permanent(EventKind::MatrixRowScale { agent, row, factor })
            })
        })
        .collect()
}

/// Builds one of the eight factorial disruption scenarios for the block
/// fixture: 1/4 strike infrastructure (medium/heavy), 2/6 strike
/// production (medium/heavy), 3/7/5/8 combine the two axes.
pub fn build_paper_scenario(id: usize, base: &Network) -> Result<ScenarioSpec, SimError> {
    let (infra, production) = match id {
        1 => (Some(false), None),
        4 => (Some(true), None),
        2 => (None, Some(MEDIUM_PRODUCTION_FACTOR)),
        6 => (None, Some(HEAVY_PRODUCTION_FACTOR)),
        3 => (Some(false), Some(MEDIUM_PRODUCTION_FACTOR)),
        7 => (Some(false), Some(HEAVY_PRODUCTION_FACTOR)),
        5 => (Some(true), Some(MEDIUM_PRODUCTION_FACTOR)),
        8 => (Some(true), Some(HEAVY_PRODUCTION_FACTOR)),
        other => return Err(SimError::UnknownScenario(other)),
    };
    let mut events = Vec::new();
    if let Some(heavy) = infra {
        events.extend(infrastructure_events(heavy));
    }
    if let Some(factor) = production {
        events.extend(production_events(base, factor));
    }
    let mut spec = ScenarioSpec::stationary(format!("S{id}"), 1);
    spec.timeline = events.into_iter().map(|e| (1, e)).collect();
    Ok(spec)
}

/// Severity order used for reporting: base first, then the factorial
/// scenarios ordered by increasing expected impact.
pub const SEVERITY_ORDER: [usize; 8] = [1, 4, 2, 3, 5, 6, 7, 8];

/// Reference price for satisfied-fraction reporting on the block fixture.
/// Sits between the mild-disruption cost band (base through the broken-link
/// scenarios, fully served below it) and the heavy-production band (served
/// fraction drops to zero), so the fraction falls monotonically with severity.
pub const REFERENCE_PRICE: f64 = 3.8;
