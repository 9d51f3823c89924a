//! Scenario configuration files: a TOML schema mirroring [`ScenarioSpec`].
//!
//! TOML cannot express integer-keyed maps or tuple lists, so the file
//! layout differs slightly from the in-memory spec: timeline entries are
//! `[[events]]` tables with an `at` timestep, and demand overrides are
//! `[[demands]]` tables pairing an agent id with its vector. Example:
//!
//! ```toml
//! name = "outage"
//! horizon = 5
//! seed = 42
//! scales = [0.5, 1.0, 2.0]
//!
//! [[events]]
//! at = 2
//! kind = "link_break"
//! link = 5
//! duration = 2           # omit for a permanent event
//!
//! [[events]]
//! at = 2
//! kind = "matrix_row_scale"
//! agent = 3
//! row = 1
//! factor = 1.25
//!
//! [[demands]]
//! agent = 7
//! demand = [1.0, 0.0, 2.5]
//!
//! [[generators]]
//! onset_prob = 0.05
//! seed = 7
//! targets = { links = [1, 2] }
//! magnitude = { low = 1.1, high = 2.0 }
//! duration = { dist = "geometric", p = 0.5 }
//! template = { template = "link_break" }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disruption::{DisruptionEvent, Generator};
use crate::scenario::{default_scales, ScenarioSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("scenario config: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("scenario config: {0}")]
    Emit(#[from] toml::ser::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("scenario config: {0}")]
    Invalid(String),
}

/// File-level scenario schema. Converts losslessly to and from
/// [`ScenarioSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    /// Demand multipliers for the supply-curve sweep; defaults apply when
    /// omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<TimedEvent>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<Generator>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub demands: Vec<DemandOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    /// Timestep (1-based) at which the event applies.
    pub at: usize,
    #[serde(flatten)]
    pub event: DisruptionEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandOverride {
    pub agent: usize,
    pub demand: Vec<f64>,
}

impl ScenarioConfig {
    pub fn into_spec(self) -> Result<ScenarioSpec, ConfigError> {
        if self.horizon == 0 {
            return Err(ConfigError::Invalid("horizon must be at least 1".into()));
        }
        if let Some(scales) = &self.scales {
            let ascending = scales.windows(2).all(|w| w[0] < w[1]);
            if scales.is_empty() || !ascending || scales[0] <= 0.0 {
                return Err(ConfigError::Invalid(
                    "scales must be a nonempty ascending positive list".into(),
                ));
            }
        }
        let mut demand_config = std::collections::BTreeMap::new();
        for d in &self.demands {
            if demand_config.insert(d.agent, d.demand.clone()).is_some() {
                return Err(ConfigError::Invalid(format!(
                    "duplicate demand override for agent {}",
                    d.agent
                )));
            }
        }
        for e in &self.events {
            if e.at == 0 || e.at > self.horizon {
                return Err(ConfigError::Invalid(format!(
                    "event scheduled at timestep {} outside 1..={}",
                    e.at, self.horizon
                )));
            }
        }
        Ok(ScenarioSpec {
            name: self.name,
            timeline: self.events.into_iter().map(|e| (e.at, e.event)).collect(),
            generators: self.generators,
            horizon: self.horizon,
            demand_config: if demand_config.is_empty() {
                None
            } else {
                Some(demand_config)
            },
            scales: self.scales.unwrap_or_else(default_scales),
            seed: self.seed,
        })
    }

    pub fn from_spec(spec: &ScenarioSpec) -> Self {
        ScenarioConfig {
            name: spec.name.clone(),
            horizon: spec.horizon,
            seed: spec.seed,
            scales: Some(spec.scales.clone()),
            events: spec
                .timeline
                .iter()
                .map(|(at, event)| TimedEvent {
                    at: *at,
                    event: event.clone(),
                })
                .collect(),
            generators: spec.generators.clone(),
            demands: spec
                .demand_config
                .iter()
                .flatten()
                .map(|(&agent, demand)| DemandOverride {
                    agent,
                    demand: demand.clone(),
                })
                .collect(),
        }
    }
}

/// Parses scenario TOML text.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, ConfigError> {
    toml::from_str::<ScenarioConfig>(text)?.into_spec()
}

/// Loads a scenario from a TOML file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec, ConfigError> {
    parse_scenario(&fs::read_to_string(path)?)
}

/// Renders a scenario as TOML text.
pub fn scenario_to_toml(spec: &ScenarioSpec) -> Result<String, ConfigError> {
    Ok(toml::to_string(&ScenarioConfig::from_spec(spec))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disruption::{
        Duration, DurationDist, EventKind, EventTemplate, Magnitude, TargetSelector,
    };
    use crate::scenario::build_paper_scenario;
    use crate::topology::block_fixture;

    #[test]
    fn full_schema_parses() {
        let text = r#"
name = "outage"
horizon = 5
seed = 42
scales = [0.5, 1.0, 2.0]

[[events]]
at = 2
kind = "link_break"
link = 5
duration = 2

[[events]]
at = 2
kind = "matrix_row_scale"
agent = 3
row = 1
factor = 1.25

[[events]]
at = 1
kind = "demand_scale"
agent = 7
resources = []
factor = 0.5

[[demands]]
agent = 7
demand = [1.0, 0.0, 2.5]

[[generators]]
onset_prob = 0.05
seed = 7
targets = { links = [1, 2] }
magnitude = { low = 1.1, high = 2.0 }
duration = { dist = "geometric", p = 0.5 }
template = { template = "link_break" }
"#;
        let spec = parse_scenario(text).unwrap();
        assert_eq!(spec.name, "outage");
        assert_eq!(spec.horizon, 5);
        assert_eq!(spec.seed, 42);
        assert_eq!(spec.scales, vec![0.5, 1.0, 2.0]);
        assert_eq!(spec.timeline.len(), 3);
        assert_eq!(spec.timeline[0].0, 2);
        assert_eq!(spec.timeline[0].1.kind, EventKind::LinkBreak { link: 5 });
        assert_eq!(spec.timeline[0].1.duration, Duration::Timesteps(2));
        assert_eq!(spec.timeline[1].1.duration, Duration::Permanent);
        assert_eq!(
            spec.demand_config.as_ref().unwrap()[&7],
            vec![1.0, 0.0, 2.5]
        );
        let g = &spec.generators[0];
        assert_eq!(g.onset_prob, 0.05);
        assert_eq!(g.targets, TargetSelector::Links(vec![1, 2]));
        assert_eq!(
            g.magnitude,
            Magnitude {
                low: 1.1,
                high: 2.0
            }
        );
        assert_eq!(g.duration, DurationDist::Geometric { p: 0.5 });
        assert_eq!(g.template, EventTemplate::LinkBreak);
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let spec = parse_scenario("name = \"idle\"\nhorizon = 1\n").unwrap();
        assert_eq!(spec.scales, default_scales());
        assert!(spec.timeline.is_empty());
        assert!(spec.demand_config.is_none());
        assert_eq!(spec.seed, 0);
    }

    #[test]
    fn canned_scenarios_round_trip_through_toml() {
        let net = block_fixture();
        for id in 1..=8 {
            let spec = build_paper_scenario(id, &net).unwrap();
            let text = scenario_to_toml(&spec).unwrap();
            let back = parse_scenario(&text).unwrap();
            assert_eq!(back, spec, "scenario {id}\n{text}");
        }
    }

    #[test]
    fn generator_config_round_trips() {
        let mut spec = ScenarioSpec::stationary("gen", 4);
        spec.generators.push(Generator {
            onset_prob: 0.2,
            seed: 9,
            targets: TargetSelector::Agents(vec![0, 2]),
            magnitude: Magnitude {
                low: 1.5,
                high: 1.5,
            },
            duration: DurationDist::Fixed { timesteps: 2 },
            template: EventTemplate::MatrixRowScale { row: 1 },
        });
        spec.demand_config = Some([(2, vec![4.0])].into());
        let text = scenario_to_toml(&spec).unwrap();
        assert_eq!(parse_scenario(&text).unwrap(), spec, "{text}");
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(matches!(
            parse_scenario("name = \"x\"\nhorizon = 0\n"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            parse_scenario("name = \"x\"\nhorizon = 1\nscales = [2.0, 1.0]\n"),
            Err(ConfigError::Invalid(_))
        ));
        let late =
            "name = \"x\"\nhorizon = 1\n[[events]]\nat = 9\nkind = \"link_break\"\nlink = 0\n";
        assert!(matches!(parse_scenario(late), Err(ConfigError::Invalid(_))));
        let dup = "name = \"x\"\nhorizon = 1\n[[demands]]\nagent = 1\ndemand = [1.0]\n[[demands]]\nagent = 1\ndemand = [2.0]\n";
        assert!(matches!(parse_scenario(dup), Err(ConfigError::Invalid(_))));
        // Unknown top-level keys and unknown event kinds are parse errors.
        assert!(matches!(
            parse_scenario("name = \"x\"\nhorizon = 1\nbogus = 3\n"),
            Err(ConfigError::Toml(_))
        ));
        let bad_kind = "name = \"x\"\nhorizon = 1\n[[events]]\nat = 1\nkind = \"meteor\"\n";
        assert!(matches!(
            parse_scenario(bad_kind),
            Err(ConfigError::Toml(_))
        ));
    }
}
