//! Users, their vocabularies and the request stream they generate.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalCdf};

use crate::error::{Error, Result};
use crate::model::{
    Agent, AttrSet, DistributionSpec, HabitatId, IdSource, Provenance, Request, ServiceDescription,
    UserId,
};

/// Global attribute vocabulary size and the per-service attribute cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributeLimits {
    pub vocabulary: u32,
    pub cap: usize,
}

impl Default for AttributeLimits {
    fn default() -> Self {
        Self {
            vocabulary: 200,
            cap: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserModelConfig {
    pub n_users: usize,
    pub n_communities: usize,
    /// Distribution of request length.
    pub length_dist: DistributionSpec,
    /// Distribution of attributes per atomic service.
    pub modularity_dist: DistributionSpec,
    /// Per-step probability that the requesting user registers a new agent.
    pub p_new_service: f64,
    /// Fraction of a user's vocabulary shared by everyone in the community.
    pub overlap_frac: f64,
    /// Attributes per user vocabulary.
    pub vocab_size: usize,
    /// Agents seeded into each user's habitat.
    pub catalog_size: usize,
}

impl Default for UserModelConfig {
    fn default() -> Self {
        Self {
            n_users: 100,
            n_communities: 2,
            length_dist: DistributionSpec::Uniform { lo: 1, hi: 17 },
            modularity_dist: DistributionSpec::Uniform { lo: 1, hi: 11 },
            p_new_service: 0.02,
            overlap_frac: 0.8,
            vocab_size: 20,
            catalog_size: 30,
        }
    }
}

/// Attribute-id layout of one community: a core shared by all members and an
/// extension pool that members draw their private attributes from.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CommunityLayout {
    core: usize,
    private: usize,
    extension: usize,
}

impl CommunityLayout {
    fn new(cfg: &UserModelConfig) -> Self {
        let core = ((cfg.overlap_frac * cfg.vocab_size as f64).ceil() as usize).min(cfg.vocab_size);
        let private = cfg.vocab_size - core;
        Self {
            core,
            private,
            extension: 2 * private,
        }
    }

    fn block(&self) -> usize {
        self.core + self.extension
    }
}

impl UserModelConfig {
    pub fn violations(&self, limits: &AttributeLimits) -> Vec<String> {
        let mut out = Vec::new();
        for (name, d) in [
            ("users.length_dist", &self.length_dist),
            ("users.modularity_dist", &self.modularity_dist),
        ] {
            out.extend(d.violations().into_iter().map(|v| format!("{name}: {v}")));
        }
        if self.n_users == 0 {
            out.push("users.n_users must be >= 1".into());
        }
        if self.n_communities == 0 {
            out.push("users.n_communities must be >= 1".into());
        }
        if self.n_users < self.n_communities {
            out.push("users.n_users < users.n_communities".into());
        }
        if !(0.0..=1.0).contains(&self.p_new_service) {
            out.push("users.p_new_service must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.overlap_frac) {
            out.push("users.overlap_frac must be in [0, 1]".into());
        }
        if self.vocab_size == 0 {
            out.push("users.vocab_size must be >= 1".into());
        }
        let (_, mod_hi) = self.modularity_dist.support();
        if mod_hi > 0 && (mod_hi as usize) > self.vocab_size {
            out.push(format!(
                "users.vocab_size {} smaller than largest modularity {}",
                self.vocab_size, mod_hi
            ));
        }
        if mod_hi > 0 && (mod_hi as usize) > limits.cap {
            out.push(format!(
                "attributes.cap {} smaller than largest modularity {}",
                limits.cap, mod_hi
            ));
        }
        let need = self.n_communities * CommunityLayout::new(self).block();
        if need > limits.vocabulary as usize {
            out.push(format!(
                "attribute vocabulary {} cannot hold {} community vocabularies ({} attributes needed)",
                limits.vocabulary, self.n_communities, need
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct User {
    pub id: UserId,
    pub habitat_id: HabitatId,
    pub community_id: usize,
    /// Ascending attribute ids.
    pub vocabulary: Vec<u32>,
}

impl User {
    pub fn vocabulary_set(&self) -> AttrSet {
        self.vocabulary.iter().copied().collect()
    }
}

/// Probability mass over `[lo, hi]` (index 0 is `lo`) matching [`sample`].
pub fn pmf(dist: &DistributionSpec) -> Vec<f64> {
    let (lo, hi) = dist.support();
    let weights: Vec<f64> = match *dist {
        DistributionSpec::Uniform { .. } => vec![1.0; (hi - lo + 1) as usize],
        DistributionSpec::PowerLaw { gamma, .. } => {
            (lo..=hi).map(|k| (k as f64).powf(-gamma)).collect()
        }
        DistributionSpec::Gaussian { mu, sigma, .. } => {
            // rounding a normal draw to k happens on (k - 0.5, k + 0.5]
            let n = NormalCdf::new(mu, sigma).expect("validated sigma");
            (lo..=hi)
                .map(|k| n.cdf(k as f64 + 0.5) - n.cdf(k as f64 - 0.5))
                .collect()
        }
    };
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

/// Mean of the distribution under [`pmf`].
pub fn mean(dist: &DistributionSpec) -> f64 {
    let (lo, _) = dist.support();
    pmf(dist)
        .iter()
        .enumerate()
        .map(|(i, p)| (lo + i as i64) as f64 * p)
        .sum()
}

/// Reusable sampler for a validated [`DistributionSpec`].
#[derive(Debug, Clone)]
pub struct Sampler {
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Uniform {
        lo: i64,
        hi: i64,
    },
    Gaussian {
        normal: Normal<f64>,
        lo: i64,
        hi: i64,
    },
    Table {
        lo: i64,
        cdf: Vec<f64>,
    },
}

impl Sampler {
    pub fn new(dist: &DistributionSpec) -> Result<Self> {
        dist.validate()?;
        let kind = match *dist {
            DistributionSpec::Uniform { lo, hi } => SamplerKind::Uniform { lo, hi },
            DistributionSpec::Gaussian { mu, sigma, lo, hi } => SamplerKind::Gaussian {
                normal: Normal::new(mu, sigma)
                    .map_err(|e| Error::InvalidDistribution(e.to_string()))?,
                lo,
                hi,
            },
            DistributionSpec::PowerLaw { lo, .. } => {
                let mut acc = 0.0;
                let cdf = pmf(dist)
                    .into_iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                SamplerKind::Table { lo, cdf }
            }
        };
        Ok(Self { kind })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        match &self.kind {
            SamplerKind::Uniform { lo, hi } => rng.gen_range(*lo..=*hi),
            SamplerKind::Gaussian { normal, lo, hi } => loop {
                let k = normal.sample(rng).round();
                if k >= *lo as f64 && k <= *hi as f64 {
                    break k as i64;
                }
            },
            SamplerKind::Table { lo, cdf } => {
                let u: f64 = rng.gen();
                let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                lo + idx as i64
            }
        }
    }
}

/// One draw from `dist`.
pub fn sample<R: Rng + ?Sized>(dist: &DistributionSpec, rng: &mut R) -> Result<i64> {
    Ok(Sampler::new(dist)?.sample(rng))
}

/// Samplers for a user model, built once per run.
#[derive(Debug, Clone)]
pub struct RequestModel {
    length: Sampler,
    modularity: Sampler,
    p_new_service: f64,
    limits: AttributeLimits,
}

impl RequestModel {
    pub fn new(cfg: &UserModelConfig, limits: &AttributeLimits) -> Result<Self> {
        Ok(Self {
            length: Sampler::new(&cfg.length_dist)?,
            modularity: Sampler::new(&cfg.modularity_dist)?,
            p_new_service: cfg.p_new_service,
            limits: limits.clone(),
        })
    }

    fn draw_service<R: Rng + ?Sized>(
        &self,
        user: &User,
        rng: &mut R,
    ) -> Result<ServiceDescription> {
        let k = self.modularity.sample(rng) as usize;
        if k > user.vocabulary.len() {
            return Err(Error::VocabularyTooSmall {
                vocabulary: user.vocabulary.len(),
                wanted: k,
            });
        }
        let attrs: AttrSet = index::sample(rng, user.vocabulary.len(), k)
            .into_iter()
            .map(|i| user.vocabulary[i])
            .collect();
        ServiceDescription::new(attrs, self.limits.vocabulary, self.limits.cap)
    }

    /// Length from the length distribution, each service's size from the
    /// modularity distribution, attributes uniform without replacement from
    /// the user's vocabulary.
    pub fn generate_request<R: Rng + ?Sized>(
        &self,
        user: &User,
        step: u64,
        rng: &mut R,
    ) -> Result<Request> {
        let len = self.length.sample(rng) as usize;
        let services = (0..len)
            .map(|_| self.draw_service(user, rng))
            .collect::<Result<Vec<_>>>()?;
        Request::new(services, user.id, step)
    }

    /// With probability `p_new_service`, a fresh agent hosted at the user's
    /// habitat. The caller inserts it into the pool.
    pub fn maybe_create_agent<R: Rng + ?Sized>(
        &self,
        user: &User,
        step: u64,
        ids: &mut IdSource,
        rng: &mut R,
    ) -> Result<Option<Agent>> {
        if !rng.gen_bool(self.p_new_service) {
            return Ok(None);
        }
        let description = self.draw_service(user, rng)?;
        Ok(Some(Agent {
            id: ids.next_id(),
            description,
            origin_habitat: user.habitat_id,
            created_step: step,
            provenance: Provenance::Created,
        }))
    }
}

/// Users plus the initial agent catalog of each user's habitat (index-aligned).
#[derive(Debug, Clone)]
pub struct Population {
    pub users: Vec<User>,
    pub catalogs: Vec<Vec<Agent>>,
}

/// Builds `n_users` users, one habitat each, split evenly into contiguous
/// communities. Community `c` owns the attribute block
/// `[c·B, (c+1)·B)`; its first `core` ids are shared by every member and
/// each member adds `vocab_size − core` private ids from the rest of the
/// block. Vocabularies of different communities are disjoint.
pub fn build_users<R: Rng + ?Sized>(
    cfg: &UserModelConfig,
    limits: &AttributeLimits,
    ids: &mut IdSource,
    rng: &mut R,
) -> Result<Population> {
    let violations = cfg.violations(limits);
    if !violations.is_empty() {
        return Err(Error::InfeasibleUsers(violations.join("; ")));
    }
    let layout = CommunityLayout::new(cfg);
    let model = RequestModel::new(cfg, limits)?;
    let mut users = Vec::with_capacity(cfg.n_users);
    let mut catalogs = Vec::with_capacity(cfg.n_users);
    for u in 0..cfg.n_users {
        let community = u * cfg.n_communities / cfg.n_users;
        let base = (community * layout.block()) as u32;
        let mut vocabulary: Vec<u32> = (0..layout.core as u32).map(|a| base + a).collect();
        vocabulary.extend(
            index::sample(rng, layout.extension, layout.private)
                .into_iter()
                .map(|i| base + (layout.core + i) as u32),
        );
        vocabulary.sort_unstable();
        let user = User {
            id: UserId(u as u32),
            habitat_id: HabitatId(u as u32),
            community_id: community,
            vocabulary,
        };
        let catalog = (0..cfg.catalog_size)
            .map(|_| {
                Ok(Agent {
                    id: ids.next_id(),
                    description: model.draw_service(&user, rng)?,
                    origin_habitat: user.habitat_id,
                    created_step: 0,
                    provenance: Provenance::Catalog,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        users.push(user);
        catalogs.push(catalog);
    }
    Ok(Population { users, catalogs })
}

/// `|U ∩ V| / max(|U|, |V|)`.
pub fn vocabulary_overlap(a: &User, b: &User) -> f64 {
    let sa = a.vocabulary_set();
    let sb = b.vocabulary_set();
    sa.intersection_len(&sb) as f64 / a.vocabulary.len().max(b.vocabulary.len()) as f64
}
