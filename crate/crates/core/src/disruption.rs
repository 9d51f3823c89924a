//! Typed disruption events, their application and reversal on networks,
//! and seeded stochastic generators with onset and recovery draws.
//!
//! Events are values; `apply_event` and `revert_event` return modified
//! copies and never touch their inputs. A scale event with an empty
//! resource list targets every resource on the link or agent.

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::model::{Capacity, Cost, Network};
use crate::rng::SimRng;

/// What a disruption does. Factors must be finite and nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// Sever a link: every transport cost becomes unavailable, every
    /// capacity zero.
    LinkBreak { link: usize },
    /// Multiply a link's finite transport costs on the listed resources
    /// (empty list: all resources).
    LinkCostScale {
        link: usize,
        #[serde(default)]
        resources: Vec<usize>,
        factor: f64,
    },
    /// Multiply a link's finite capacities. Factor zero also zeroes
    /// unbounded capacities; otherwise unbounded stays unbounded.
    LinkCapacityScale {
        link: usize,
        #[serde(default)]
        resources: Vec<usize>,
        factor: f64,
    },
    /// Multiply one technology-matrix entry.
    MatrixCellScale {
        agent: usize,
        row: usize,
        col: usize,
        factor: f64,
    },
    /// Multiply one input row of an agent's technology matrix: the agent
    /// needs `factor` times as much of that resource in every process.
    MatrixRowScale {
        agent: usize,
        row: usize,
        factor: f64,
    },
    /// Multiply one output column: every input to producing that resource
    /// scales.
    MatrixColumnScale {
        agent: usize,
        col: usize,
        factor: f64,
    },
    /// Multiply an agent's final demand on the listed resources (empty
    /// list: all resources).
    DemandScale {
        agent: usize,
        #[serde(default)]
        resources: Vec<usize>,
        factor: f64,
    },
}

/// How long an applied event stays in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "Option<usize>", into = "Option<usize>")]
pub enum Duration {
    Timesteps(usize),
    #[default]
    Permanent,
}

impl Duration {
    pub fn is_permanent(&self) -> bool {
        matches!(self, Duration::Permanent)
    }
}

impl From<Option<usize>> for Duration {
    fn from(v: Option<usize>) -> Self {
        match v {
            Some(t) => Duration::Timesteps(t),
            None => Duration::Permanent,
        }
    }
}

impl From<Duration> for Option<usize> {
    fn from(d: Duration) -> Self {
        match d {
            Duration::Timesteps(t) => Some(t),
            Duration::Permanent => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisruptionEvent {
    #[serde(flatten)]
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Duration::is_permanent")]
    pub duration: Duration,
}

impl DisruptionEvent {
    pub fn permanent(kind: EventKind) -> Self {
        DisruptionEvent {
            kind,
            duration: Duration::Permanent,
        }
    }

    pub fn lasting(kind: EventKind, timesteps: usize) -> Self {
        DisruptionEvent {
            kind,
            duration: Duration::Timesteps(timesteps),
        }
    }
}

fn resource_targets(listed: &[usize], total: usize) -> Result<Vec<usize>, SimError> {
    if listed.is_empty() {
        return Ok((0..total).collect());
    }
    for &res in listed {
        if res >= total {
            return Err(SimError::UnresolvedTarget(format!(
                "resource index {res} out of range"
            )));
        }
    }
    Ok(listed.to_vec())
}

/// Returns a copy of `net` with the event applied; the input is untouched.
pub fn apply_event(net: &Network, event: &DisruptionEvent) -> Result<Network, SimError> {
    let mut out = net.clone();
    let r = net.resources();
    match &event.kind {
        EventKind::LinkBreak { link } => {
            let l = out
                .links
                .get_mut(link)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("link {link}")))?;
            for res in 0..r {
                l.transport_cost[res] = Cost::Unavailable;
                l.capacity[res] = Capacity::Finite(0.0);
            }
        }
        EventKind::LinkCostScale {
            link,
            resources,
            factor,
        } => {
            assert!(factor.is_finite() && *factor >= 0.0, "invalid cost factor");
            let l = out
                .links
                .get_mut(link)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("link {link}")))?;
            for res in resource_targets(resources, r)? {
                if let Cost::Finite(c) = l.transport_cost[res] {
                    l.transport_cost[res] = Cost::Finite(c * factor);
                }
            }
        }
        EventKind::LinkCapacityScale {
            link,
            resources,
            factor,
        } => {
            assert!(
                factor.is_finite() && *factor >= 0.0,
                "invalid capacity factor"
            );
            let l = out
                .links
                .get_mut(link)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("link {link}")))?;
            for res in resource_targets(resources, r)? {
                l.capacity[res] = match l.capacity[res] {
                    Capacity::Finite(c) => Capacity::Finite(c * factor),
                    Capacity::Unbounded if *factor == 0.0 => Capacity::Finite(0.0),
                    Capacity::Unbounded => Capacity::Unbounded,
                };
            }
        }
        EventKind::MatrixCellScale {
            agent,
            row,
            col,
            factor,
        } => {
            assert!(
                factor.is_finite() && *factor >= 0.0,
                "invalid matrix factor"
            );
            let a = out
                .agents
                .get_mut(agent)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("agent {agent}")))?;
            if *row >= r || *col >= r {
                return Err(SimError::UnresolvedTarget(format!(
                    "matrix cell ({row}, {col}) out of range"
                )));
            }
            a.tech.scale_cell(*row, *col, *factor);
        }
        EventKind::MatrixRowScale { agent, row, factor } => {
            assert!(
                factor.is_finite() && *factor >= 0.0,
                "invalid matrix factor"
            );
            let a = out
                .agents
                .get_mut(agent)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("agent {agent}")))?;
            if *row >= r {
                return Err(SimError::UnresolvedTarget(format!(
                    "matrix row {row} out of range"
                )));
            }
            a.tech.scale_row(*row, *factor);
        }
        EventKind::MatrixColumnScale { agent, col, factor } => {
            assert!(
                factor.is_finite() && *factor >= 0.0,
                "invalid matrix factor"
            );
            let a = out
                .agents
                .get_mut(agent)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("agent {agent}")))?;
            if *col >= r {
                return Err(SimError::UnresolvedTarget(format!(
                    "matrix column {col} out of range"
                )));
            }
            a.tech.scale_col(*col, *factor);
        }
        EventKind::DemandScale {
            agent,
            resources,
            factor,
        } => {
            assert!(
                factor.is_finite() && *factor >= 0.0,
                "invalid demand factor"
            );
            let a = out
                .agents
                .get_mut(agent)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("agent {agent}")))?;
            for res in resource_targets(resources, r)? {
                a.final_demand[res] *= factor;
            }
        }
    }
    Ok(out)
}

/// Returns a copy of `net` with the event's targeted fields restored from
/// `baseline`. Reverting one of several applied events with disjoint
/// targets restores only its own fields.
pub fn revert_event(
    net: &Network,
    baseline: &Network,
    event: &DisruptionEvent,
) -> Result<Network, SimError> {
    let mut out = net.clone();
    let r = net.resources();
    match &event.kind {
        EventKind::LinkBreak { link } => {
            let base = baseline
                .link(*link)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("link {link}")))?;
            let l = out
                .links
                .get_mut(link)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("link {link}")))?;
            l.transport_cost = base.transport_cost.clone();
            l.capacity = base.capacity.clone();
        }
        EventKind::LinkCostScale {
            link, resources, ..
        } => {
            let base = baseline
                .link(*link)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("link {link}")))?;
            let l = out
                .links
                .get_mut(link)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("link {link}")))?;
            for res in resource_targets(resources, r)? {
                l.transport_cost[res] = base.transport_cost[res];
            }
        }
        EventKind::LinkCapacityScale {
            link, resources, ..
        } => {
            let base = baseline
                .link(*link)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("link {link}")))?;
            let l = out
                .links
                .get_mut(link)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("link {link}")))?;
            for res in resource_targets(resources, r)? {
                l.capacity[res] = base.capacity[res];
            }
        }
        EventKind::MatrixCellScale {
            agent, row, col, ..
        } => {
            let base = baseline
                .agent(*agent)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("agent {agent}")))?;
            let a = out
                .agents
                .get_mut(agent)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("agent {agent}")))?;
            a.tech.set(*row, *col, base.tech.get(*row, *col));
        }
        EventKind::MatrixRowScale { agent, row, .. } => {
            let base = baseline
                .agent(*agent)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("agent {agent}")))?;
            let a = out
                .agents
                .get_mut(agent)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("agent {agent}")))?;
            for col in 0..r {
                a.tech.set(*row, col, base.tech.get(*row, col));
            }
        }
        EventKind::MatrixColumnScale { agent, col, .. } => {
            let base = baseline
                .agent(*agent)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("agent {agent}")))?;
            let a = out
                .agents
                .get_mut(agent)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("agent {agent}")))?;
            for row in 0..r {
                a.tech.set(row, *col, base.tech.get(row, *col));
            }
        }
        EventKind::DemandScale {
            agent, resources, ..
        } => {
            let base = baseline
                .agent(*agent)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("agent {agent}")))?;
            let a = out
                .agents
                .get_mut(agent)
                .ok_or_else(|| SimError::UnresolvedTarget(format!("agent {agent}")))?;
            for res in resource_targets(resources, r)? {
                a.final_demand[res] = base.final_demand[res];
            }
        }
    }
    Ok(out)
}

/// Which ids a generator may strike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSelector {
    Links(Vec<usize>),
    Agents(Vec<usize>),
}

/// Event shape a generator stamps out per struck target; the drawn
/// magnitude fills the factor where one is needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "snake_case")]
pub enum EventTemplate {
    LinkBreak,
    LinkCostScale {
        #[serde(default)]
        resources: Vec<usize>,
    },
    LinkCapacityScale {
        #[serde(default)]
        resources: Vec<usize>,
    },
    MatrixRowScale {
        row: usize,
    },
    MatrixColumnScale {
        col: usize,
    },
    DemandScale {
        #[serde(default)]
        resources: Vec<usize>,
    },
}

/// Closed interval for uniform magnitude draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Magnitude {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum DurationDist {
    Fixed { timesteps: usize },
    Geometric { p: f64 },
    Permanent,
}

/// Seeded stochastic disruption source: at each timestep every target is
/// struck independently with `onset_prob`; struck targets get an event
/// with a drawn magnitude and duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    // Scalars first so the TOML serializer emits them before sub-tables.
    pub onset_prob: f64,
    pub seed: u64,
    pub targets: TargetSelector,
    pub magnitude: Magnitude,
    pub duration: DurationDist,
    pub template: EventTemplate,
}

/// Owned per-generator run state: the RNG stream and active events with
/// their scheduled end timesteps.
#[derive(Debug, Clone)]
pub struct GeneratorState {
    rng: SimRng,
    active: Vec<(usize, DisruptionEvent)>,
}

impl GeneratorState {
    pub fn new(generator: &Generator) -> Self {
        GeneratorState {
            rng: SimRng::new(generator.seed),
            active: Vec::new(),
        }
    }
}

fn instantiate(template: &EventTemplate, target: usize, factor: f64) -> EventKind {
    match template {
        EventTemplate::LinkBreak => EventKind::LinkBreak { link: target },
        EventTemplate::LinkCostScale { resources } => EventKind::LinkCostScale {
            link: target,
            resources: resources.clone(),
            factor,
        },
        EventTemplate::LinkCapacityScale { resources } => EventKind::LinkCapacityScale {
            link: target,
            resources: resources.clone(),
            factor,
        },
        EventTemplate::MatrixRowScale { row } => EventKind::MatrixRowScale {
            agent: target,
            row: *row,
            factor,
        },
        EventTemplate::MatrixColumnScale { col } => EventKind::MatrixColumnScale {
            agent: target,
            col: *col,
            factor,
        },
        EventTemplate::DemandScale { resources } => EventKind::DemandScale {
            agent: target,
            resources: resources.clone(),
            factor,
        },
    }
}

/// Advances one generator to timestep `t`: returns the events starting now
/// and those whose drawn duration expires now. Deterministic given the
/// seed and the sequence of calls.
pub fn generator_step(
    generator: &Generator,
    t: usize,
    state: &mut GeneratorState,
) -> (Vec<DisruptionEvent>, Vec<DisruptionEvent>) {
    assert!((0.0..=1.0).contains(&generator.onset_prob));
    let ended: Vec<DisruptionEvent> = state
        .active
        .iter()
        .filter(|(end, _)| *end == t)
        .map(|(_, e)| e.clone())
        .collect();
    state.active.retain(|(end, _)| *end != t);

    let targets = match &generator.targets {
        TargetSelector::Links(ids) => ids.clone(),
        TargetSelector::Agents(ids) => ids.clone(),
    };
    let mut started = Vec::new();
    for target in targets {
        if !state.rng.bernoulli(generator.onset_prob) {
            continue;
        }
        let factor = match generator.template {
            EventTemplate::LinkBreak => 0.0,
            _ => state
                .rng
                .uniform(generator.magnitude.low, generator.magnitude.high),
        };
        let duration = match generator.duration {
            DurationDist::Fixed { timesteps } => Duration::Timesteps(timesteps),
            DurationDist::Geometric { p } => Duration::Timesteps(state.rng.geometric(p) as usize),
            DurationDist::Permanent => Duration::Permanent,
        };
        let event = DisruptionEvent {
            kind: instantiate(&generator.template, target, factor),
            duration,
        };
        if let Duration::Timesteps(d) = duration {
            state.active.push((t + d, event.clone()));
        }
        started.push(event);
    }
    (started, ended)
}
