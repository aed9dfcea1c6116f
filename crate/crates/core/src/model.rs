//! Shared domain types: attributes, agents, aggregations, requests and the
//! request-shape distributions.
//!
//! Every constructor validates its invariants and returns an [`Error`] on
//! violation, so a value of any of these types is always well formed.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Index into the global attribute vocabulary `[0, A_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeId(u32);

impl AttributeId {
    pub fn new(value: u32, vocabulary: u32) -> Result<Self> {
        if value >= vocabulary {
            return Err(Error::AttributeOutOfRange {
                id: value,
                vocabulary,
            });
        }
        Ok(AttributeId(value))
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_newtype!(
    /// Habitat (peer) identifier; habitats are numbered densely from zero.
    HabitatId
);
id_newtype!(
    /// User identifier; users are numbered densely from zero.
    UserId
);

/// Run-unique agent identifier, issued by an [`IdSource`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u64);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Monotone agent id issuer. Ids are strictly increasing and never reused.
#[derive(Debug, Clone, Default)]
pub struct IdSource {
    next: u64,
}

impl IdSource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_id(&mut self) -> AgentId {
        let id = AgentId(self.next);
        self.next += 1;
        id
    }

    /// Number of ids issued so far.
    pub fn issued(&self) -> u64 {
        self.next
    }
}

/// Bitset over attribute ids. Trailing zero words are trimmed so that
/// structural equality is set equality.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct AttrSet {
    words: SmallVec<[u64; 4]>,
}

impl AttrSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, attr: u32) -> bool {
        let (w, b) = ((attr / 64) as usize, attr % 64);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        let mask = 1u64 << b;
        let fresh = self.words[w] & mask == 0;
        self.words[w] |= mask;
        fresh
    }

    pub fn contains(&self, attr: u32) -> bool {
        let (w, b) = ((attr / 64) as usize, attr % 64);
        self.words
            .get(w)
            .is_some_and(|word| word & (1u64 << b) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// `|self ∩ other|`
    pub fn intersection_len(&self, other: &AttrSet) -> usize {
        self.words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// `|self \ other|`
    pub fn difference_len(&self, other: &AttrSet) -> usize {
        self.len() - self.intersection_len(other)
    }

    pub fn is_subset(&self, other: &AttrSet) -> bool {
        self.intersection_len(other) == self.len()
    }

    /// Ascending attribute values.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros();
                w &= w - 1;
                Some(wi as u32 * 64 + bit)
            })
        })
    }

    pub fn max_value(&self) -> Option<u32> {
        self.iter().last()
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }
}

impl FromIterator<u32> for AttrSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        let mut set = AttrSet::new();
        for a in iter {
            set.insert(a);
        }
        set.trim();
        set
    }
}

impl fmt::Debug for AttrSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for AttrSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for AttrSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

/// Ontological description of one atomic service: a non-empty attribute set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct ServiceDescription {
    attributes: AttrSet,
}

impl ServiceDescription {
    /// Validates non-emptiness, the attribute cap and the vocabulary bound.
    pub fn new(attributes: AttrSet, vocabulary: u32, cap: usize) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::EmptyDescription);
        }
        let len = attributes.len();
        if len > cap {
            return Err(Error::DescriptionTooLarge { len, cap });
        }
        if let Some(max) = attributes.max_value() {
            if max >= vocabulary {
                return Err(Error::AttributeOutOfRange {
                    id: max,
                    vocabulary,
                });
            }
        }
        Ok(Self { attributes })
    }

    /// Shorthand used heavily in tests: vocabulary and cap set wide open.
    pub fn from_ids(ids: &[u32]) -> Result<Self> {
        Self::new(ids.iter().copied().collect(), u32::MAX, usize::MAX)
    }

    pub fn attributes(&self) -> &AttrSet {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Where an agent came from. Every agent in any pool has exactly one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Seeded into a habitat catalog when users were built.
    Catalog,
    /// Registered by a user during the run.
    Created,
    /// Copy of `parent` carried across a connection.
    Migrated { parent: AgentId },
}

/// A simulated atomic service.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agent {
    pub id: AgentId,
    pub description: ServiceDescription,
    pub origin_habitat: HabitatId,
    pub created_step: u64,
    pub provenance: Provenance,
}

impl Agent {
    pub fn attributes(&self) -> &AttrSet {
        self.description.attributes()
    }
}

/// An ordered sequence of agents: the genome of the local search.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Aggregation {
    pub genome: Vec<AgentId>,
    pub cached_fitness: Option<f64>,
}

impl Aggregation {
    pub fn new(genome: Vec<AgentId>) -> Self {
        Self {
            genome,
            cached_fitness: None,
        }
    }

    pub fn len(&self) -> usize {
        self.genome.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genome.is_empty()
    }
}

/// A user's request: an ordered sequence of atomic service descriptions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Request {
    services: Vec<ServiceDescription>,
    pub issuer: UserId,
    pub step: u64,
}

impl Request {
    pub fn new(services: Vec<ServiceDescription>, issuer: UserId, step: u64) -> Result<Self> {
        if services.is_empty() {
            return Err(Error::EmptyRequest);
        }
        Ok(Self {
            services,
            issuer,
            step,
        })
    }

    /// Test and tooling helper: build from plain id lists.
    pub fn from_sets(sets: &[&[u32]]) -> Result<Self> {
        let services = sets
            .iter()
            .map(|s| ServiceDescription::from_ids(s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(services, UserId(0), 0)
    }

    pub fn services(&self) -> &[ServiceDescription] {
        &self.services
    }

    /// User request length.
    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Discrete distribution over a bounded integer support `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform {
        lo: i64,
        hi: i64,
    },
    Gaussian {
        mu: f64,
        sigma: f64,
        lo: i64,
        hi: i64,
    },
    PowerLaw {
        gamma: f64,
        lo: i64,
        hi: i64,
    },
}

impl DistributionSpec {
    pub fn support(&self) -> (i64, i64) {
        match *self {
            DistributionSpec::Uniform { lo, hi }
            | DistributionSpec::Gaussian { lo, hi, .. }
            | DistributionSpec::PowerLaw { lo, hi, .. } => (lo, hi),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistributionSpec::Uniform { .. } => "uniform",
            DistributionSpec::Gaussian { .. } => "gaussian",
            DistributionSpec::PowerLaw { .. } => "power_law",
        }
    }

    /// Invariant violations, empty when the spec is usable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (lo, hi) = self.support();
        if lo < 1 {
            out.push("lo < 1".to_string());
        }
        if lo > hi {
            out.push("lo > hi".to_string());
        }
        match *self {
            DistributionSpec::Gaussian { mu, sigma, .. } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    out.push("sigma must be positive".to_string());
                }
                if !mu.is_finite() {
                    out.push("mu must be finite".to_string());
                }
            }
            DistributionSpec::PowerLaw { gamma, .. } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    out.push("gamma must be positive".to_string());
                }
            }
            DistributionSpec::Uniform { .. } => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidDistribution(v.join(", ")))
        }
    }
}
