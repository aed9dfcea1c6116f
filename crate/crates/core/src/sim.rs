//! One simulation run: the request event loop over a habitat network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{validate_config, MeasurementSource, RunConfig};
use crate::error::{Error, Result};
use crate::evolution::{evolve, seed_population};
use crate::fitness::max_fitness;
use crate::model::{HabitatId, IdSource};
use crate::network::Network;
use crate::stats::Histogram;
use crate::topology::TopologyMetrics;
use crate::users::{build_users, RequestModel, User};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: u64,
    pub habitat: HabitatId,
    pub request_len: usize,
    pub best_len: usize,
    pub best_fitness: f64,
    pub max_fitness: f64,
    pub generations: usize,
    pub destinations: usize,
}

impl StepRecord {
    pub fn solved(&self) -> bool {
        self.best_fitness + 1e-9 >= self.max_fitness
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counters {
    pub requests_served: u64,
    /// Aggregation copies sent, one per destination reached.
    pub migrations: u64,
    pub agents_migrated: u64,
    pub agents_created: u64,
    pub catalog_agents: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub step: u64,
    /// Aggregation sizes.
    pub size_histogram: Histogram,
    /// Attribute counts of every agent inside the measured aggregations.
    pub attr_histogram: Histogram,
    pub topology: TopologyMetrics,
    /// Clustering of a degree-preserving randomisation of the same graph.
    pub baseline_clustering: Option<f64>,
    /// Mean connection probability within / across user communities.
    pub intra_community_p: Option<f64>,
    pub inter_community_p: Option<f64>,
    pub requests_served: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub seed: u64,
    pub measurements: Vec<Measurement>,
    pub trace: Vec<StepRecord>,
    pub counters: Counters,
}

/// Live state of one run.
pub struct Simulation {
    config: RunConfig,
    users: Vec<User>,
    model: RequestModel,
    network: Network,
    ids: IdSource,
    rng: ChaCha8Rng,
    step: u64,
    counters: Counters,
    trace: Vec<StepRecord>,
    /// Best-of-run outputs so far, for [`MeasurementSource::AllOutputs`].
    outputs: (Histogram, Histogram),
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self> {
        let violations = validate_config(&config);
        if !violations.is_empty() {
            return Err(Error::InvalidConfig(violations));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut ids = IdSource::new();
        let population = build_users(&config.users, &config.attributes, &mut ids, &mut rng)?;
        let mut network = Network::build(population.users.len(), config.network.clone());
        let cap = config.network.pool_capacity;
        let mut catalog_agents = 0;
        for (user, catalog) in population.users.iter().zip(population.catalogs) {
            let h = network.habitat_mut(user.habitat_id)?;
            for agent in catalog {
                catalog_agents += 1;
                h.insert_agent(agent, 0, cap);
            }
        }
        let model = RequestModel::new(&config.users, &config.attributes)?;
        let outputs = empty_histograms(&config);
        Ok(Self {
            users: population.users,
            model,
            network,
            ids,
            rng,
            step: 0,
            counters: Counters {
                catalog_agents,
                ..Default::default()
            },
            trace: Vec::with_capacity(config.steps as usize),
            outputs,
            config,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn users(&self) -> &[User] {
        &self.users
    }

    pub fn current_step(&self) -> u64 {
        self.step
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn trace(&self) -> &[StepRecord] {
        &self.trace
    }

    /// Serves one request event.
    pub fn step(&mut self) -> Result<()> {
        self.step += 1;
        let t = self.step;
        self.serve(t).map_err(|e| e.at_step(t))
    }

    fn serve(&mut self, t: u64) -> Result<()> {
        let user = &self.users[self.rng.gen_range(0..self.users.len())];
        let hid = user.habitat_id;
        let pool_cap = self.config.network.pool_capacity;

        if let Some(agent) = self
            .model
            .maybe_create_agent(user, t, &mut self.ids, &mut self.rng)?
        {
            self.network
                .habitat_mut(hid)?
                .insert_agent(agent, t, pool_cap);
            self.counters.agents_created += 1;
        }
        let request = self.model.generate_request(user, t, &mut self.rng)?;

        let habitat = self.network.habitat(hid)?;
        let pool = habitat.agents();
        let deployed = habitat.deployed_aggregations();
        let seed = seed_population(
            &pool,
            &deployed,
            &request,
            habitat,
            &self.config.evolution,
            &self.config.fitness,
            &mut self.rng,
        )?;
        let result = evolve(
            &request,
            seed,
            &pool,
            &self.config.evolution,
            &self.config.fitness,
            &mut self.rng,
        )?;

        if self.config.measurement.source == MeasurementSource::AllOutputs {
            self.outputs.0.record(result.best.len() as i64);
            for id in &result.best.genome {
                let agent = habitat.pool.get(id).ok_or(Error::UnknownAgent(*id))?;
                self.outputs.1.record(agent.agent.description.len() as i64);
            }
        }

        self.network.deploy(hid, result.best.clone(), t)?;
        let destinations =
            self.network
                .migrate(hid, &result.best, t, &mut self.ids, &mut self.rng)?;
        self.network.settle_pending(hid, &result)?;

        let distinct = result.used_migrant_ids.len() as u64;
        self.counters.requests_served += 1;
        self.counters.migrations += destinations as u64;
        self.counters.agents_migrated += destinations as u64 * distinct;
        self.trace.push(StepRecord {
            step: t,
            habitat: hid,
            request_len: request.len(),
            best_len: result.best.len(),
            best_fitness: result.best_fitness,
            max_fitness: max_fitness(&request),
            generations: result.generations_run,
            destinations,
        });
        Ok(())
    }

    /// Histograms and topology at the current step.
    pub fn measure(&self) -> Measurement {
        let (size_histogram, attr_histogram) = match self.config.measurement.source {
            MeasurementSource::AllOutputs => self.outputs.clone(),
            MeasurementSource::Deployed => {
                let (mut sizes, mut attrs) = empty_histograms(&self.config);
                for h in &self.network.habitats {
                    for d in &h.deployed {
                        sizes.record(d.aggregation.len() as i64);
                        for &c in &d.attr_counts {
                            attrs.record(c as i64);
                        }
                    }
                }
                (sizes, attrs)
            }
        };
        let graph = self
            .network
            .effective_graph(self.config.network.topology_threshold);
        let mut rewire_rng =
            ChaCha8Rng::seed_from_u64(self.config.seed ^ self.step.rotate_left(32));
        let baseline = graph.rewired(10 * graph.edge_count(), &mut rewire_rng);
        let community = |h: HabitatId| self.users[h.index()].community_id;
        let (intra, inter) = self
            .network
            .mean_p_split(|a, b| community(a) == community(b));
        Measurement {
            step: self.step,
            size_histogram,
            attr_histogram,
            topology: TopologyMetrics::of(&graph),
            baseline_clustering: (baseline.edge_count() > 0)
                .then(|| baseline.clustering_coefficient()),
            intra_community_p: intra,
            inter_community_p: inter,
            requests_served: self.counters.requests_served,
        }
    }

    /// Runs all remaining steps, measuring at the configured steps.
    pub fn run(mut self) -> Result<RunResult> {
        let (result, _) = self.run_keep()?;
        Ok(result)
    }

    /// Like [`Simulation::run`] but hands back the final network as well.
    pub fn run_keep(&mut self) -> Result<(RunResult, &Network)> {
        let checkpoints = self.config.measurement_steps();
        let mut measurements = Vec::with_capacity(checkpoints.len());
        let mut next = checkpoints.iter().peekable();
        while self.step < self.config.steps {
            self.step()?;
            if next.peek().is_some_and(|&&s| s == self.step) {
                next.next();
                measurements.push(self.measure());
            }
        }
        Ok((
            RunResult {
                seed: self.config.seed,
                measurements,
                trace: std::mem::take(&mut self.trace),
                counters: self.counters,
            },
            &self.network,
        ))
    }
}

fn empty_histograms(config: &RunConfig) -> (Histogram, Histogram) {
    let (llo, lhi) = config.users.length_dist.support();
    let (mlo, mhi) = config.users.modularity_dist.support();
    (Histogram::new(llo, lhi), Histogram::new(mlo, mhi))
}

/// Runs `config` to completion.
pub fn run_simulation(config: RunConfig) -> Result<RunResult> {
    Simulation::new(config)?.run()
}
