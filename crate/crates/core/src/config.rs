//! Run configuration and its validation.

use serde::{Deserialize, Serialize};

use crate::evolution::EvolutionParams;
use crate::fitness::FitnessParams;
use crate::network::NetworkParams;
use crate::users::{AttributeLimits, UserModelConfig};

/// What the measured histograms are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementSource {
    /// Applications deployed across all habitats at the measurement step.
    #[default]
    Deployed,
    /// Every best-of-run output up to the measurement step.
    AllOutputs,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementConfig {
    /// Steps at which to measure; empty means the final step only.
    pub steps: Vec<u64>,
    pub source: MeasurementSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Request events; one per step.
    pub steps: u64,
    pub attributes: AttributeLimits,
    pub users: UserModelConfig,
    pub evolution: EvolutionParams,
    pub fitness: FitnessParams,
    pub network: NetworkParams,
    pub measurement: MeasurementConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            steps: 1000,
            attributes: AttributeLimits::default(),
            users: UserModelConfig::default(),
            evolution: EvolutionParams::default(),
            fitness: FitnessParams::default(),
            network: NetworkParams::default(),
            measurement: MeasurementConfig::default(),
        }
    }
}

impl RunConfig {
    /// Measurement steps in ascending order, defaulting to the last step.
    pub fn measurement_steps(&self) -> Vec<u64> {
        let mut steps = if self.measurement.steps.is_empty() {
            vec![self.steps]
        } else {
            self.measurement.steps.clone()
        };
        steps.sort_unstable();
        steps.dedup();
        steps
    }
}

/// Every violated invariant of `config`; empty when it can be run.
pub fn validate_config(config: &RunConfig) -> Vec<String> {
    let mut out = Vec::new();
    if config.attributes.vocabulary == 0 {
        out.push("attribute vocabulary empty".to_string());
    }
    if config.attributes.cap == 0 {
        out.push("attributes.cap must be >= 1".to_string());
    }
    if config.steps == 0 {
        out.push("steps must be >= 1".to_string());
    }
    if config.attributes.vocabulary > 0 {
        out.extend(config.users.violations(&config.attributes));
    } else {
        for d in [&config.users.length_dist, &config.users.modularity_dist] {
            out.extend(d.violations());
        }
    }
    out.extend(config.evolution.violations());
    out.extend(config.fitness.violations());
    out.extend(config.network.violations());
    for &s in &config.measurement.steps {
        if s == 0 || s > config.steps {
            out.push(format!(
                "measurement.steps: {s} outside [1, {}]",
                config.steps
            ));
        }
    }
    out
}
