//! Multi-run experiments: independent seeded runs, merged histograms and
//! goodness-of-fit against the request distributions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{validate_config, RunConfig};
use crate::error::{Error, Result};
use crate::model::DistributionSpec;
use crate::sim::{run_simulation, Measurement, RunResult};
use crate::stats::{chi_squared, merge, ChiSquaredReport, Histogram};
use crate::users::{mean, pmf};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Desk-scale default for the number of runs.
pub const DESK_RUNS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub base: RunConfig,
    /// Runs use seeds `base.seed + i` for `i in 0..n_runs`.
    pub n_runs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            base: RunConfig::default(),
            n_runs: DESK_RUNS,
        }
    }
}

impl ExperimentConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = validate_config(&self.base);
        if self.n_runs == 0 {
            v.push("n_runs must be >= 1".into());
        }
        v
    }

    pub fn run_seed(&self, i: usize) -> u64 {
        self.base.seed.wrapping_add(i as u64)
    }
}

/// The six request-behaviour scenarios: request length or request modularity
/// drawn from a uniform, Gaussian or power-law distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    LengthUniform,
    LengthGaussian,
    LengthPowerLaw,
    ModularityUniform,
    ModularityGaussian,
    ModularityPowerLaw,
}

/// Which measured property a scenario is judged on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// Aggregation size against request length.
    Size,
    /// Attributes per agent against attributes per requested service.
    Attributes,
}

pub const LENGTH_GAUSSIAN: DistributionSpec = DistributionSpec::Gaussian {
    mu: 9.0,
    sigma: 3.0,
    lo: 1,
    hi: 17,
};
pub const LENGTH_POWER_LAW: DistributionSpec = DistributionSpec::PowerLaw {
    gamma: 1.5,
    lo: 1,
    hi: 17,
};
pub const MODULARITY_GAUSSIAN: DistributionSpec = DistributionSpec::Gaussian {
    mu: 6.0,
    sigma: 2.0,
    lo: 1,
    hi: 11,
};
pub const MODULARITY_POWER_LAW: DistributionSpec = DistributionSpec::PowerLaw {
    gamma: 1.5,
    lo: 1,
    hi: 11,
};

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::LengthUniform,
        Scenario::LengthGaussian,
        Scenario::LengthPowerLaw,
        Scenario::ModularityUniform,
        Scenario::ModularityGaussian,
        Scenario::ModularityPowerLaw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::LengthUniform => "length_uniform",
            Scenario::LengthGaussian => "length_gaussian",
            Scenario::LengthPowerLaw => "length_power_law",
            Scenario::ModularityUniform => "modularity_uniform",
            Scenario::ModularityGaussian => "modularity_gaussian",
            Scenario::ModularityPowerLaw => "modularity_power_law",
        }
    }

    pub fn property(self) -> Property {
        match self {
            Scenario::LengthUniform | Scenario::LengthGaussian | Scenario::LengthPowerLaw => {
                Property::Size
            }
            _ => Property::Attributes,
        }
    }

    /// `base` with this scenario's request distribution swapped in. The other
    /// request property keeps its uniform default.
    pub fn apply(self, base: &RunConfig) -> RunConfig {
        let mut c = base.clone();
        let defaults = crate::users::UserModelConfig::default();
        c.users.length_dist = defaults.length_dist.clone();
        c.users.modularity_dist = defaults.modularity_dist.clone();
        match self {
            Scenario::LengthUniform | Scenario::ModularityUniform => {}
            Scenario::LengthGaussian => c.users.length_dist = LENGTH_GAUSSIAN,
            Scenario::LengthPowerLaw => c.users.length_dist = LENGTH_POWER_LAW,
            Scenario::ModularityGaussian => c.users.modularity_dist = MODULARITY_GAUSSIAN,
            Scenario::ModularityPowerLaw => c.users.modularity_dist = MODULARITY_POWER_LAW,
        }
        c
    }

    pub fn experiment(self, base: &RunConfig, n_runs: usize) -> ExperimentConfig {
        ExperimentConfig {
            name: self.name().to_string(),
            base: self.apply(base),
            n_runs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub distribution: DistributionSpec,
    /// Merged over all completed runs.
    pub histogram: Histogram,
    pub expected_probs: Vec<f64>,
    /// Goodness of fit of the run-averaged histogram.
    pub chi_squared: Option<ChiSquaredReport>,
    /// Goodness of fit of the raw merged counts.
    pub chi_squared_merged: Option<ChiSquaredReport>,
    pub observed_mean: Option<f64>,
    pub expected_mean: f64,
}

impl PropertyReport {
    fn new(histogram: Histogram, distribution: &DistributionSpec, runs: usize) -> Self {
        let expected_probs = pmf(distribution);
        let averaged: Vec<f64> = histogram
            .counts
            .iter()
            .map(|&c| c as f64 / runs.max(1) as f64)
            .collect();
        let chi = crate::stats::chi_squared_weights(
            &averaged,
            &expected_probs,
            crate::stats::DEFAULT_E_MIN_FRACTION,
        )
        .ok();
        Self {
            distribution: distribution.clone(),
            chi_squared: chi,
            chi_squared_merged: chi_squared(&histogram, &expected_probs).ok(),
            observed_mean: histogram.mean(),
            expected_mean: mean(distribution),
            expected_probs,
            histogram,
        }
    }

    pub fn csv(&self) -> String {
        self.histogram.to_csv(&self.expected_probs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologySummary {
    pub mean_clustering: Option<f64>,
    /// Mean clustering of degree-preserving randomisations.
    pub mean_baseline_clustering: Option<f64>,
    pub mean_path_length: Option<f64>,
    pub mean_edge_count: f64,
    pub mean_intra_community_p: Option<f64>,
    pub mean_inter_community_p: Option<f64>,
}

fn mean_of(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl TopologySummary {
    fn of(ms: &[&Measurement]) -> Self {
        Self {
            mean_clustering: mean_of(ms.iter().map(|m| m.topology.clustering_coefficient)),
            mean_baseline_clustering: mean_of(ms.iter().map(|m| m.baseline_clustering)),
            mean_path_length: mean_of(ms.iter().map(|m| m.topology.characteristic_path_length)),
            mean_edge_count: ms.iter().map(|m| m.topology.edge_count as f64).sum::<f64>()
                / ms.len().max(1) as f64,
            mean_intra_community_p: mean_of(ms.iter().map(|m| m.intra_community_p)),
            mean_inter_community_p: mean_of(ms.iter().map(|m| m.inter_community_p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointReport {
    pub step: u64,
    pub size: PropertyReport,
    pub attributes: PropertyReport,
    pub topology: TopologySummary,
}

impl CheckpointReport {
    pub fn property(&self, p: Property) -> &PropertyReport {
        match p {
            Property::Size => &self.size,
            Property::Attributes => &self.attributes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailedRun {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub tool_version: String,
    pub seed_derivation: String,
    pub config: ExperimentConfig,
    pub completed_runs: usize,
    pub failed_runs: Vec<FailedRun>,
    pub requests_served: u64,
    pub checkpoints: Vec<CheckpointReport>,
}

impl ExperimentReport {
    pub fn final_checkpoint(&self) -> Option<&CheckpointReport> {
        self.checkpoints.last()
    }

    pub fn checkpoint(&self, step: u64) -> Option<&CheckpointReport> {
        self.checkpoints.iter().find(|c| c.step == step)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serialisable")
    }
}

/// Runs every seed, on `parallelism` worker threads (1 runs inline).
pub fn run_all(config: &ExperimentConfig, parallelism: usize) -> Vec<(u64, Result<RunResult>)> {
    let job = |i: usize| {
        let mut c = config.base.clone();
        c.seed = config.run_seed(i);
        (c.seed, run_simulation(c))
    };
    if parallelism <= 1 {
        return (0..config.n_runs).map(job).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .expect("thread pool");
    pool.install(|| (0..config.n_runs).into_par_iter().map(job).collect())
}

/// Merges per-run results (in seed order) into a report.
pub fn summarize(
    config: &ExperimentConfig,
    runs: Vec<(u64, Result<RunResult>)>,
) -> ExperimentReport {
    let mut ok = Vec::new();
    let mut failed_runs = Vec::new();
    for (seed, r) in runs {
        match r {
            Ok(r) => ok.push(r),
            Err(e) => failed_runs.push(FailedRun {
                seed,
                error: e.to_string(),
            }),
        }
    }
    let users = &config.base.users;
    let checkpoints = config
        .base
        .measurement_steps()
        .into_iter()
        .enumerate()
        .map(|(k, step)| {
            let ms: Vec<&Measurement> = ok.iter().map(|r| &r.measurements[k]).collect();
            let fold = |get: fn(&Measurement) -> &Histogram, dist: &DistributionSpec| {
                let (lo, hi) = dist.support();
                ms.iter().fold(Histogram::new(lo, hi), |acc, m| {
                    merge(&acc, get(m)).expect("supports fixed by config")
                })
            };
            let sizes = fold(|m| &m.size_histogram, &users.length_dist);
            let attrs = fold(|m| &m.attr_histogram, &users.modularity_dist);
            CheckpointReport {
                step,
                size: PropertyReport::new(sizes, &users.length_dist, ok.len()),
                attributes: PropertyReport::new(attrs, &users.modularity_dist, ok.len()),
                topology: TopologySummary::of(&ms),
            }
        })
        .collect();
    ExperimentReport {
        tool_version: TOOL_VERSION.to_string(),
        seed_derivation: format!(
            "run i uses seed {} + i for i in 0..{}",
            config.base.seed, config.n_runs
        ),
        config: config.clone(),
        completed_runs: ok.len(),
        failed_runs,
        requests_served: ok.iter().map(|r| r.counters.requests_served).sum(),
        checkpoints,
    }
}

/// Executes `config.n_runs` independent runs and reports on the merged data.
/// The report does not depend on `parallelism`.
pub fn run_experiment(config: &ExperimentConfig, parallelism: usize) -> Result<ExperimentReport> {
    let v = config.violations();
    if !v.is_empty() {
        return Err(Error::InvalidConfig(v));
    }
    Ok(summarize(config, run_all(config, parallelism)))
}
