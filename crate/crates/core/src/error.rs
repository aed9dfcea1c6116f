use thiserror::Error;

use crate::model::{AgentId, HabitatId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("attribute id {id} outside vocabulary of size {vocabulary}")]
    AttributeOutOfRange { id: u32, vocabulary: u32 },

    #[error("atomic service description is empty")]
    EmptyDescription,

    #[error("atomic service description has {len} attributes, cap is {cap}")]
    DescriptionTooLarge { len: usize, cap: usize },

    #[error("request has no atomic services")]
    EmptyRequest,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("unknown agent id {0}")]
    UnknownAgent(AgentId),

    #[error("unknown habitat id {0}")]
    UnknownHabitat(HabitatId),

    #[error("habitat has no agents")]
    EmptyPool,

    #[error("aggregation is empty")]
    EmptyAggregation,

    #[error("seed population has {got} genomes, expected {expected}")]
    SeedSize { got: usize, expected: usize },

    #[error("vocabulary of {vocabulary} attributes cannot supply {wanted} distinct attributes")]
    VocabularyTooSmall { vocabulary: usize, wanted: usize },

    #[error("infeasible user model: {0}")]
    InfeasibleUsers(String),

    #[error("histogram supports differ: [{0}, {1}] vs [{2}, {3}]")]
    SupportMismatch(i64, i64, i64, i64),

    #[error("expected {expected} bins, got {got}")]
    BinMismatch { expected: usize, got: usize },

    #[error("expected probabilities sum to {0}, not 1")]
    ProbabilitiesNotNormalized(f64),

    #[error("observed histogram is empty")]
    ZeroTotal,

    #[error("degrees of freedom {0} outside tabulated range 1..=30")]
    DofOutOfRange(usize),

    #[error("unsupported tail mass {0}; tabulated tails are 0.95 and 0.05")]
    UnsupportedTail(f64),

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("step {step}: {source}")]
    AtStep {
        step: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_step(self, step: u64) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
