//! Deterministic simulator for interdependent production and infrastructure
//! networks.
//!
//! Agents produce resources from other resources via per-agent technology
//! matrices (fixed input proportions), draw raw materials from providers,
//! and exchange goods over directed, capacitated infrastructure links.
//! Prices self-organize through a least-fixed-point cost relaxation;
//! quantities follow the recorded sourcing decisions and are rationed by
//! link capacity and priority. Disruptions edit link costs, capacities,
//! technology coefficients, or demands, and scenario runs measure the
//! impact through supply curves and total delivered cost.
//!
//! Everything is deterministic: collections iterate in id order, random
//! draws come from a seeded splitmix64 stream, and serialized outputs are
//! byte-stable for identical inputs.

// Indexed loops here usually walk parallel structures in lockstep or pass
// the index on as a value; iterator rewrites would obscure that.
#![allow(clippy::needless_range_loop)]

pub mod allocation;
pub mod config;
pub mod disruption;
pub mod error;
pub mod gml;
pub mod model;
pub mod pricing;
pub mod production;
pub mod results;
pub mod rng;
pub mod scenario;
pub mod topology;

pub use allocation::{
    allocate, allocate_with, flow_invariants, plan_quantities, ration, AllocateOptions, Demands,
    FlowState, RemainingCaps,
};
pub use config::{load_scenario, parse_scenario, scenario_to_toml, ConfigError, ScenarioConfig};
pub use disruption::{
    apply_event, generator_step, revert_event, DisruptionEvent, Duration, DurationDist, EventKind,
    EventTemplate, Generator, GeneratorState, Magnitude, TargetSelector,
};
pub use error::SimError;
pub use gml::{from_gml_string, read_gml, to_gml_string, write_gml, GmlError};
pub use model::{
    producible_set, validate_network, Agent, Capacity, Cost, InfraLink, Network, ResourceCatalog,
    TechnologyMatrix, ValidationReport,
};
pub use pricing::{
    acquire_cost, make_cost, price_fixed_point, price_fixed_point_excluding, PriceState,
    SourceDecision, SourceKind,
};
pub use production::{
    leontief_solve, productivity_check, split_requirements, ProductionPlan, Productivity,
};
pub use results::{curve_csv, export_results, run_result_csv, run_result_jsonl, ExportFormat};
pub use rng::SimRng;
pub use scenario::{
    build_paper_scenario, default_scales, run, satisfied_fraction, supply_curve, total_cost,
    RunResult, ScenarioSpec, SupplyCurve, TimestepRecord, REFERENCE_PRICE, SEVERITY_ORDER,
};
pub use topology::{
    block_fixture, erdos_renyi, synth_tech_matrix, validation_fixture_3node, RoleMix,
    BLOCK_DEMANDS, BLOCK_RESOURCES,
};

/// Name of the random stream algorithm, recorded in result headers so runs
/// can be reproduced by independent implementations.
pub const RNG_ALGORITHM: &str = "splitmix64";
