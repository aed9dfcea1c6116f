//! Fixtures shared by the benchmarks: a habitat-sized agent pool and
//! requests drawn the way the simulator draws them.

use digeco_core::model::IdSource;
use digeco_core::users::{Population, RequestModel};
use digeco_core::{build_users, Agent, AttributeLimits, Request, UserModelConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub population: Population,
    pub model: RequestModel,
    pub rng: ChaCha8Rng,
}

impl Fixture {
    /// Default user model, with every catalog of `catalog_size` agents.
    pub fn new(catalog_size: usize, seed: u64) -> Self {
        let cfg = UserModelConfig {
            catalog_size,
            ..Default::default()
        };
        let limits = AttributeLimits::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let population = build_users(&cfg, &limits, &mut IdSource::new(), &mut rng)
            .expect("default user model is feasible");
        let model = RequestModel::new(&cfg, &limits).expect("default user model is valid");
        Self {
            population,
            model,
            rng,
        }
    }

    /// First user's catalog, standing in for a habitat pool.
    pub fn pool(&self) -> Vec<&Agent> {
        self.population.catalogs[0].iter().collect()
    }

    pub fn request(&mut self) -> Request {
        self.model
            .generate_request(&self.population.users[0], 0, &mut self.rng)
            .expect("vocabulary covers the modularity support")
    }
}
