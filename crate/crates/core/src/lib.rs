//! Deterministic simulator of a digital ecosystem.
//!
//! Habitats (peers) host pools of agents, each agent an atomic service
//! described by a set of attributes. Users attached to habitats issue
//! requests; every request is answered by a local genetic algorithm that
//! evolves an agent aggregation ([`evolution`]). The winning aggregation is
//! deployed and its agents migrate to other habitats along probabilistic
//! connections, whose probabilities are adjusted by Hebbian reinforcement
//! whenever migrants prove useful ([`network`]). [`experiment`] runs many
//! seeded simulations and tests whether the evolved population mirrors the
//! user request distributions ([`stats`]).

pub mod config;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod fitness;
pub mod model;
pub mod network;
pub mod sim;
pub mod stats;
pub mod topology;
pub mod users;

pub use config::{validate_config, MeasurementConfig, MeasurementSource, RunConfig};
pub use error::{Error, Result};
pub use evolution::{crossover, evolve, seed_population, EvolutionParams, EvolutionResult};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, Property, Scenario};
pub use fitness::{fitness, max_fitness, AgentLookup, FitnessParams};
pub use model::{
    Agent, AgentId, Aggregation, AttrSet, AttributeId, DistributionSpec, HabitatId, IdSource,
    Provenance, Request, ServiceDescription, UserId,
};
pub use network::{hebbian_update, ConnectionState, Habitat, Network, NetworkParams};
pub use sim::{run_simulation, RunResult, Simulation};
pub use stats::{chi_squared, critical_value, merge, ChiSquaredReport, Histogram};
pub use topology::{Graph, TopologyMetrics};
pub use users::{build_users, sample, AttributeLimits, User, UserModelConfig};
