use thiserror::Error;

/// Simulation-level failures. Validation problems are reported separately
/// through [`crate::model::ValidationReport`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// The technology submatrix cannot sustain the demanded outputs: the
    /// required inputs grow at least as fast as production.
    #[error("technology matrix is not productive (spectral radius estimate {radius_estimate})")]
    NotProductive { radius_estimate: f64 },

    /// An iterative computation did not stabilize within its sweep budget.
    #[error("{what} did not converge within {limit} iterations")]
    NonConvergence { what: &'static str, limit: usize },

    /// Final demand was placed on an (agent, resource) pair with no feasible
    /// source at any price.
    #[error("demand on agent {agent} for resource {resource} cannot be sourced")]
    UnpricedDemand { agent: usize, resource: usize },

    /// A disruption or scenario referenced an id that does not exist.
    #[error("unresolved target: {0}")]
    UnresolvedTarget(String),

    /// Random-graph generation failed to produce a weakly connected graph
    /// within the resample budget.
    #[error("no weakly connected graph after {attempts} attempts (n={n}, p={p})")]
    Disconnected { attempts: usize, n: usize, p: f64 },

    /// Requested a canned scenario id outside 1..=8.
    #[error("unknown scenario id {0} (expected 1..=8)")]
    UnknownScenario(usize),

    /// A resource or agent lookup failed.
    #[error("producible set does not contain resource {resource} for agent {agent}")]
    NotProducible { agent: usize, resource: usize },

    /// The network failed validation; callers should inspect the report.
    #[error("network failed validation: {0}")]
    InvalidNetwork(String),

    /// A scenario run failed; carries the timestep at which it happened.
    #[error("timestep {t}: {source}")]
    AtTimestep {
        t: usize,
        #[source]
        source: Box<SimError>,
    },
}
