//! Fitness of an aggregation as a semantic distance to the request.
//!
//! Agent `i` of the genome is aligned with atomic service `i` of the request.
//! Each aligned pair earns one point per shared attribute and loses `alpha`
//! per superfluous agent attribute; every position of length mismatch costs
//! `beta`. Agents past the end of the request only pay the length penalty:
//!
//! ```text
//! F = Σ_{i < min(L, m)} ( |S_i ∩ A_i| − alpha·|A_i \ S_i| ) − beta·|L − m|
//! ```
//!
//! The maximum, `Σ |S_i|`, is reached exactly when the genome reproduces the
//! request attribute-for-attribute.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Agent, AgentId, Aggregation, AttrSet, Request};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessParams {
    /// Penalty per agent attribute not asked for.
    pub alpha: f64,
    /// Penalty per position of length mismatch.
    pub beta: f64,
    /// Score of the empty genome.
    pub floor: f64,
}

impl Default for FitnessParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 1.5,
            floor: -1e6,
        }
    }
}

impl FitnessParams {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            out.push("fitness.alpha must be finite and >= 0".into());
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            out.push("fitness.beta must be finite and >= 0".into());
        }
        if !self.floor.is_finite() {
            out.push("fitness.floor must be finite".into());
        }
        out
    }
}

/// Resolves agent ids to agents.
pub trait AgentLookup {
    fn agent(&self, id: AgentId) -> Option<&Agent>;
}

impl AgentLookup for BTreeMap<AgentId, Agent> {
    fn agent(&self, id: AgentId) -> Option<&Agent> {
        self.get(&id)
    }
}

impl AgentLookup for HashMap<AgentId, Agent> {
    fn agent(&self, id: AgentId) -> Option<&Agent> {
        self.get(&id)
    }
}

impl AgentLookup for [Agent] {
    fn agent(&self, id: AgentId) -> Option<&Agent> {
        self.iter().find(|a| a.id == id)
    }
}

impl AgentLookup for Vec<Agent> {
    fn agent(&self, id: AgentId) -> Option<&Agent> {
        self.as_slice().agent(id)
    }
}

/// Contribution of one aligned (service, agent) pair.
#[inline]
pub fn position_score(service: &AttrSet, agent: &AttrSet, alpha: f64) -> f64 {
    let shared = service.intersection_len(agent);
    let extra = agent.len() - shared;
    shared as f64 - alpha * extra as f64
}

#[inline]
fn length_penalty(request_len: usize, genome_len: usize, beta: f64) -> f64 {
    beta * request_len.abs_diff(genome_len) as f64
}

/// Fitness of `aggregation` against `request`.
pub fn fitness<R: AgentLookup + ?Sized>(
    request: &Request,
    aggregation: &Aggregation,
    resolve: &R,
    params: &FitnessParams,
) -> Result<f64> {
    genome_fitness(request, &aggregation.genome, resolve, params)
}

/// [`fitness`] over a bare genome.
pub fn genome_fitness<R: AgentLookup + ?Sized>(
    request: &Request,
    genome: &[AgentId],
    resolve: &R,
    params: &FitnessParams,
) -> Result<f64> {
    let agents = genome
        .iter()
        .map(|&id| resolve.agent(id).ok_or(Error::UnknownAgent(id)))
        .collect::<Result<Vec<_>>>()?;
    if agents.is_empty() {
        return Ok(params.floor);
    }
    let mut total = 0.0;
    for (service, agent) in request.services().iter().zip(&agents) {
        total += position_score(service.attributes(), agent.attributes(), params.alpha);
    }
    Ok(total - length_penalty(request.len(), agents.len(), params.beta))
}

/// `Σ |S_i|`, the score of a perfect solution.
pub fn max_fitness(request: &Request) -> f64 {
    request.services().iter().map(|s| s.len()).sum::<usize>() as f64
}

/// Precomputed position scores for one request against a fixed candidate
/// set, so genome evaluation is a sum of table lookups.
///
/// Genomes here are indices into the candidate slice handed to [`ScoreTable::new`].
/// Terms are accumulated in the same order as [`genome_fitness`], so both
/// paths agree bit for bit.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    scores: Vec<f64>,
    candidates: usize,
    request_len: usize,
    beta: f64,
    floor: f64,
}

impl ScoreTable {
    pub fn new(request: &Request, candidates: &[&Agent], params: &FitnessParams) -> Self {
        let n = candidates.len();
        let mut scores = Vec::with_capacity(request.len() * n);
        for service in request.services() {
            for agent in candidates {
                scores.push(position_score(
                    service.attributes(),
                    agent.attributes(),
                    params.alpha,
                ));
            }
        }
        Self {
            scores,
            candidates: n,
            request_len: request.len(),
            beta: params.beta,
            floor: params.floor,
        }
    }

    #[inline]
    pub fn evaluate(&self, genome: &[u32]) -> f64 {
        if genome.is_empty() {
            return self.floor;
        }
        let mut total = 0.0;
        for (pos, &gene) in genome.iter().take(self.request_len).enumerate() {
            total += self.scores[pos * self.candidates + gene as usize];
        }
        total - length_penalty(self.request_len, genome.len(), self.beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HabitatId, Provenance, ServiceDescription};
    use proptest::prelude::*;

    fn agent(id: u64, attrs: &[u32]) -> Agent {
        Agent {
            id: AgentId(id),
            description: ServiceDescription::from_ids(attrs).unwrap(),
            origin_habitat: HabitatId(0),
            created_step: 0,
            provenance: Provenance::Catalog,
        }
    }

    fn pool(sets: &[&[u32]]) -> Vec<Agent> {
        sets.iter()
            .enumerate()
            .map(|(i, s)| agent(i as u64, s))
            .collect()
    }

    fn agg(ids: &[u64]) -> Aggregation {
        Aggregation::new(ids.iter().map(|&i| AgentId(i)).collect())
    }

    #[test]
    fn perfect_match_scores_attribute_total() {
        let r = Request::from_sets(&[&[1, 2], &[3]]).unwrap();
        let p = pool(&[&[1, 2], &[3]]);
        let f = fitness(&r, &agg(&[0, 1]), &p, &FitnessParams::default()).unwrap();
        assert_eq!(f, 3.0);
        assert_eq!(f, max_fitness(&r));
    }

    #[test]
    fn empty_genome_is_floor() {
        let r = Request::from_sets(&[&[1, 2], &[3]]).unwrap();
        let p = pool(&[&[1]]);
        let params = FitnessParams::default();
        assert_eq!(fitness(&r, &agg(&[]), &p, &params).unwrap(), params.floor);
    }

    #[test]
    fn superfluous_attribute_penalty() {
        let r = Request::from_sets(&[&[1, 2]]).unwrap();
        let p = pool(&[&[1, 3]]);
        let f = fitness(&r, &agg(&[0]), &p, &FitnessParams::default()).unwrap();
        assert_eq!(f, 0.5);
    }

    #[test]
    fn length_mismatch_penalty() {
        let r = Request::from_sets(&[&[1]]).unwrap();
        let p = pool(&[&[1], &[2]]);
        let f = fitness(&r, &agg(&[0, 1]), &p, &FitnessParams::default()).unwrap();
        assert_eq!(f, 1.0 - 1.5);
        let no_beta = FitnessParams {
            beta: 0.0,
            ..Default::default()
        };
        assert_eq!(fitness(&r, &agg(&[0, 1]), &p, &no_beta).unwrap(), 1.0);
    }

    #[test]
    fn unknown_agent_is_named() {
        let r = Request::from_sets(&[&[1]]).unwrap();
        let p = pool(&[&[1]]);
        assert_eq!(
            fitness(&r, &agg(&[7]), &p, &FitnessParams::default()),
            Err(Error::UnknownAgent(AgentId(7)))
        );
    }

    #[test]
    fn max_fitness_examples() {
        assert_eq!(
            max_fitness(&Request::from_sets(&[&[1, 2], &[3]]).unwrap()),
            3.0
        );
        assert_eq!(max_fitness(&Request::from_sets(&[&[7]]).unwrap()), 1.0);
        assert_eq!(
            max_fitness(&Request::from_sets(&[&[1, 2], &[1, 2], &[1, 2]]).unwrap()),
            6.0
        );
    }

    fn arb_set() -> impl Strategy<Value = Vec<u32>> {
        proptest::collection::btree_set(0u32..24, 1..6).prop_map(|s| s.into_iter().collect())
    }

    proptest! {
        #[test]
        fn never_exceeds_max(
            req in proptest::collection::vec(arb_set(), 1..6),
            agents in proptest::collection::vec(arb_set(), 1..8),
            genome in proptest::collection::vec(0usize..8, 0..9),
        ) {
            let sets: Vec<&[u32]> = req.iter().map(|v| v.as_slice()).collect();
            let r = Request::from_sets(&sets).unwrap();
            let asets: Vec<&[u32]> = agents.iter().map(|v| v.as_slice()).collect();
            let p = pool(&asets);
            let g: Vec<u64> = genome.iter().map(|&i| (i % agents.len()) as u64).collect();
            let f = fitness(&r, &agg(&g), &p, &FitnessParams::default()).unwrap();
            prop_assert!(f <= max_fitness(&r));
        }

        #[test]
        fn invariant_under_relabeling(
            req in proptest::collection::vec(arb_set(), 1..5),
            agents in proptest::collection::vec(arb_set(), 1..6),
            genome in proptest::collection::vec(0usize..6, 1..7),
            shift in 1u32..500,
        ) {
            // x -> 31·x + shift is injective on the ids in play.
            let relabel = |v: &Vec<u32>| v.iter().map(|&x| 31 * x + shift).collect::<Vec<_>>();
            let g: Vec<u64> = genome.iter().map(|&i| (i % agents.len()) as u64).collect();
            let params = FitnessParams::default();

            let sets: Vec<&[u32]> = req.iter().map(|v| v.as_slice()).collect();
            let asets: Vec<&[u32]> = agents.iter().map(|v| v.as_slice()).collect();
            let f1 = fitness(&Request::from_sets(&sets).unwrap(), &agg(&g), &pool(&asets), &params).unwrap();

            let req2: Vec<Vec<u32>> = req.iter().map(relabel).collect();
            let agents2: Vec<Vec<u32>> = agents.iter().map(relabel).collect();
            let sets2: Vec<&[u32]> = req2.iter().map(|v| v.as_slice()).collect();
            let asets2: Vec<&[u32]> = agents2.iter().map(|v| v.as_slice()).collect();
            let f2 = fitness(&Request::from_sets(&sets2).unwrap(), &agg(&g), &pool(&asets2), &params).unwrap();
            prop_assert_eq!(f1, f2);
        }

        #[test]
        fn appending_disjoint_agent_past_length_decreases(
            req in proptest::collection::vec(arb_set(), 1..5),
            agents in proptest::collection::vec(arb_set(), 1..6),
            extra in 0usize..4,
        ) {
            let sets: Vec<&[u32]> = req.iter().map(|v| v.as_slice()).collect();
            let r = Request::from_sets(&sets).unwrap();
            let mut asets: Vec<&[u32]> = agents.iter().map(|v| v.as_slice()).collect();
            let disjoint = [1000u32];
            asets.push(&disjoint);
            let p = pool(&asets);
            let junk = (asets.len() - 1) as u64;
            let g: Vec<u64> = (0..r.len() + extra).map(|i| (i % agents.len()) as u64).collect();
            let before = fitness(&r, &agg(&g), &p, &FitnessParams::default()).unwrap();
            let mut longer = g.clone();
            longer.push(junk);
            let after = fitness(&r, &agg(&longer), &p, &FitnessParams::default()).unwrap();
            prop_assert!(after < before);
        }

        #[test]
        fn score_table_matches_reference(
            req in proptest::collection::vec(arb_set(), 1..6),
            agents in proptest::collection::vec(arb_set(), 1..8),
            genome in proptest::collection::vec(0u32..8, 0..10),
            alpha in 0.0f64..2.0,
            beta in 0.0f64..3.0,
        ) {
            let sets: Vec<&[u32]> = req.iter().map(|v| v.as_slice()).collect();
            let r = Request::from_sets(&sets).unwrap();
            let asets: Vec<&[u32]> = agents.iter().map(|v| v.as_slice()).collect();
            let p = pool(&asets);
            let params = FitnessParams { alpha, beta, floor: -1e6 };
            let refs: Vec<&Agent> = p.iter().collect();
            let table = ScoreTable::new(&r, &refs, &params);
            let idx: Vec<u32> = genome.iter().map(|&g| g % agents.len() as u32).collect();
            let ids: Vec<u64> = idx.iter().map(|&i| i as u64).collect();
            let reference = fitness(&r, &agg(&ids), &p, &params).unwrap();
            prop_assert_eq!(table.evaluate(&idx).to_bits(), reference.to_bits());
        }
    }
}
