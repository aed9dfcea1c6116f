//! Local optimisation at a habitat: a generational genetic algorithm over
//! variable-length agent sequences.
//!
//! The search itself ([`search`]) works on index genomes against any
//! [`Evaluate`] implementation. [`evolve`] binds it to a request and a
//! habitat's agent pool through a precomputed [`ScoreTable`].

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{genome_fitness, max_fitness, AgentLookup, FitnessParams, ScoreTable};
use crate::model::{Agent, AgentId, Aggregation, Request};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionParams {
    pub pop_size: usize,
    pub tournament_k: usize,
    pub p_crossover: f64,
    pub p_mutate_replace: f64,
    pub p_mutate_insert: f64,
    pub p_mutate_delete: f64,
    pub max_generations: usize,
    /// Stop after this many generations without improvement of the best.
    pub stagnation_window: usize,
    pub elitism: usize,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        Self {
            pop_size: 50,
            tournament_k: 3,
            p_crossover: 0.7,
            p_mutate_replace: 0.10,
            p_mutate_insert: 0.05,
            p_mutate_delete: 0.05,
            max_generations: 100,
            stagnation_window: 20,
            elitism: 1,
        }
    }
}

impl EvolutionParams {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.pop_size < 2 {
            out.push("evolution.pop_size must be >= 2".into());
        }
        if self.tournament_k < 1 || self.tournament_k > self.pop_size {
            out.push("evolution.tournament_k must be in [1, pop_size]".into());
        }
        for (name, p) in [
            ("p_crossover", self.p_crossover),
            ("p_mutate_replace", self.p_mutate_replace),
            ("p_mutate_insert", self.p_mutate_insert),
            ("p_mutate_delete", self.p_mutate_delete),
        ] {
            if !(0.0..=1.0).contains(&p) {
                out.push(format!("evolution.{name} must be in [0, 1]"));
            }
        }
        if self.elitism >= self.pop_size {
            out.push("evolution.elitism must be < pop_size".into());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionResult {
    pub best: Aggregation,
    pub best_fitness: f64,
    pub generations_run: usize,
    /// Every agent id in `best`; settles pending migrations.
    pub used_migrant_ids: BTreeSet<AgentId>,
    /// Best fitness after each generation, generation 0 first.
    pub trace: Vec<f64>,
}

/// Scores an index genome.
pub trait Evaluate {
    fn evaluate(&self, genome: &[u32]) -> f64;
}

impl Evaluate for ScoreTable {
    fn evaluate(&self, genome: &[u32]) -> f64 {
        ScoreTable::evaluate(self, genome)
    }
}

impl<F: Fn(&[u32]) -> f64> Evaluate for F {
    fn evaluate(&self, genome: &[u32]) -> f64 {
        self(genome)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: Vec<u32>,
    pub best_fitness: f64,
    pub generations_run: usize,
    pub trace: Vec<f64>,
    /// Mean genome length per generation, generation 0 first.
    pub mean_length: Vec<f64>,
}

/// One-point crossover with explicit cut points `cut_a ∈ [0, |a|]`,
/// `cut_b ∈ [0, |b|]`. An empty child receives one gene drawn uniformly from
/// the concatenated parents.
pub fn crossover_at<T: Clone, R: Rng + ?Sized>(
    a: &[T],
    b: &[T],
    cut_a: usize,
    cut_b: usize,
    rng: &mut R,
) -> (Vec<T>, Vec<T>) {
    let mut first: Vec<T> = a[..cut_a].iter().chain(&b[cut_b..]).cloned().collect();
    let mut second: Vec<T> = b[..cut_b].iter().chain(&a[cut_a..]).cloned().collect();
    for child in [&mut first, &mut second] {
        if child.is_empty() {
            let i = rng.gen_range(0..a.len() + b.len());
            child.push(if i < a.len() {
                a[i].clone()
            } else {
                b[i - a.len()].clone()
            });
        }
    }
    (first, second)
}

fn crossover_genes<T: Clone, R: Rng + ?Sized>(a: &[T], b: &[T], rng: &mut R) -> (Vec<T>, Vec<T>) {
    let cut_a = rng.gen_range(0..=a.len());
    let cut_b = rng.gen_range(0..=b.len());
    crossover_at(a, b, cut_a, cut_b, rng)
}

/// [`crossover_genes`] writing into reusable buffers; same draws, same result.
fn crossover_into<R: Rng + ?Sized>(
    a: &[u32],
    b: &[u32],
    first: &mut Vec<u32>,
    second: &mut Vec<u32>,
    rng: &mut R,
) {
    let cut_a = rng.gen_range(0..=a.len());
    let cut_b = rng.gen_range(0..=b.len());
    first.clear();
    first.extend_from_slice(&a[..cut_a]);
    first.extend_from_slice(&b[cut_b..]);
    second.clear();
    second.extend_from_slice(&b[..cut_b]);
    second.extend_from_slice(&a[cut_a..]);
    for child in [first, second] {
        if child.is_empty() {
            let i = rng.gen_range(0..a.len() + b.len());
            child.push(if i < a.len() { a[i] } else { b[i - a.len()] });
        }
    }
}

/// One-point crossover of two non-empty aggregations with independently
/// drawn cut points, so child lengths may differ from the parents'.
pub fn crossover<R: Rng + ?Sized>(
    a: &Aggregation,
    b: &Aggregation,
    rng: &mut R,
) -> Result<(Aggregation, Aggregation)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyAggregation);
    }
    let (x, y) = crossover_genes(&a.genome, &b.genome, rng);
    Ok((Aggregation::new(x), Aggregation::new(y)))
}

fn mutate<R: Rng + ?Sized>(
    genome: &mut Vec<u32>,
    n_candidates: u32,
    p: &EvolutionParams,
    rng: &mut R,
) {
    if rng.gen_bool(p.p_mutate_replace) {
        let pos = rng.gen_range(0..genome.len());
        genome[pos] = rng.gen_range(0..n_candidates);
    }
    if rng.gen_bool(p.p_mutate_insert) {
        let pos = rng.gen_range(0..=genome.len());
        genome.insert(pos, rng.gen_range(0..n_candidates));
    }
    if rng.gen_bool(p.p_mutate_delete) && genome.len() > 1 {
        let pos = rng.gen_range(0..genome.len());
        genome.remove(pos);
    }
}

fn tournament<R: Rng + ?Sized>(fitness: &[f64], k: usize, rng: &mut R) -> usize {
    let mut winner = rng.gen_range(0..fitness.len());
    for _ in 1..k {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c] > fitness[winner] {
            winner = c;
        }
    }
    winner
}

fn argmax(fitness: &[f64]) -> usize {
    let mut best = 0;
    for (i, &f) in fitness.iter().enumerate() {
        if f > fitness[best] {
            best = i;
        }
    }
    best
}

fn mean_len(pop: &[Vec<u32>]) -> f64 {
    pop.iter().map(|g| g.len()).sum::<usize>() as f64 / pop.len() as f64
}

/// Generational GA over index genomes in `0..n_candidates`.
///
/// Each generation keeps the `elitism` fittest genomes and fills the rest by
/// tournament selection, one-point crossover and per-genome replace / insert
/// / delete mutation. Stops at `max_generations`, when `target` is reached,
/// or after `stagnation_window` generations without improvement.
pub fn search<E: Evaluate + ?Sized, R: Rng + ?Sized>(
    seed: Vec<Vec<u32>>,
    n_candidates: usize,
    params: &EvolutionParams,
    eval: &E,
    target: Option<f64>,
    rng: &mut R,
) -> SearchOutcome {
    assert!(n_candidates > 0, "search needs at least one candidate gene");
    let n_candidates = n_candidates as u32;
    let reached = |f: f64| target.is_some_and(|t| f + 1e-9 >= t);

    let mut pop = seed;
    let mut fit: Vec<f64> = pop.iter().map(|g| eval.evaluate(g)).collect();
    let b = argmax(&fit);
    let mut best = pop[b].clone();
    let mut best_fitness = fit[b];
    let mut trace = vec![best_fitness];
    let mut mean_length = vec![mean_len(&pop)];
    let mut generations_run = 0;
    let mut last_improvement = 0;

    let pop_size = params.pop_size;
    let elitism = params.elitism.min(pop_size);
    let mut next: Vec<Vec<u32>> = vec![Vec::new(); pop_size];
    let mut spare: Vec<u32> = Vec::new();
    let mut order: Vec<usize> = Vec::with_capacity(pop.len());

    while !reached(best_fitness)
        && generations_run < params.max_generations
        && generations_run - last_improvement < params.stagnation_window
    {
        generations_run += 1;

        // elites: fittest first, lower index on ties
        order.clear();
        order.extend(0..pop.len());
        let by_rank = |i: &usize, j: &usize| fit[*j].total_cmp(&fit[*i]).then(i.cmp(j));
        if elitism > 0 && elitism < order.len() {
            order.select_nth_unstable_by(elitism - 1, by_rank);
        }
        order[..elitism].sort_unstable_by(by_rank);
        for (slot, &i) in order[..elitism].iter().enumerate() {
            next[slot].clear();
            next[slot].extend_from_slice(&pop[i]);
        }

        let mut slot = elitism;
        while slot < pop_size {
            let pa = &pop[tournament(&fit, params.tournament_k, rng)];
            let pb = &pop[tournament(&fit, params.tournament_k, rng)];
            let (head, tail) = next.split_at_mut(slot + 1);
            let c1 = &mut head[slot];
            let c2 = tail.first_mut().unwrap_or(&mut spare);
            if rng.gen_bool(params.p_crossover) {
                crossover_into(pa, pb, c1, c2, rng);
            } else {
                c1.clear();
                c1.extend_from_slice(pa);
                c2.clear();
                c2.extend_from_slice(pb);
            }
            mutate(c1, n_candidates, params, rng);
            mutate(c2, n_candidates, params, rng);
            slot += 2;
        }

        std::mem::swap(&mut pop, &mut next);
        pop.truncate(pop_size);
        fit.clear();
        fit.extend(pop.iter().map(|g| eval.evaluate(g)));
        let b = argmax(&fit);
        if fit[b] > best_fitness {
            best_fitness = fit[b];
            best.clear();
            best.extend_from_slice(&pop[b]);
            last_improvement = generations_run;
        }
        trace.push(best_fitness);
        mean_length.push(mean_len(&pop));
        if next.len() < pop_size {
            next.resize(pop_size, Vec::new());
        }
    }

    SearchOutcome {
        best,
        best_fitness,
        generations_run,
        trace,
        mean_length,
    }
}

/// Initial population for `request` at a habitat.
///
/// Previously deployed aggregations that still resolve and score above the
/// floor come first, best first, up to `pop_size / 2`. The remaining slots are
/// random sequences over `pool` with length uniform in `[1, 2·L]`.
pub fn seed_population<R: Rng + ?Sized, L: AgentLookup + ?Sized>(
    pool: &[&Agent],
    deployed: &[Aggregation],
    request: &Request,
    resolve: &L,
    params: &EvolutionParams,
    fitness_params: &FitnessParams,
    rng: &mut R,
) -> Result<Vec<Aggregation>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut reusable: Vec<(f64, &Aggregation)> = deployed
        .iter()
        .filter_map(|a| {
            genome_fitness(request, &a.genome, resolve, fitness_params)
                .ok()
                .filter(|&f| f > fitness_params.floor)
                .map(|f| (f, a))
        })
        .collect();
    reusable.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut population: Vec<Aggregation> = reusable
        .into_iter()
        .take(params.pop_size / 2)
        .map(|(_, a)| Aggregation::new(a.genome.clone()))
        .collect();
    let max_len = 2 * request.len();
    while population.len() < params.pop_size {
        let len = rng.gen_range(1..=max_len);
        let genome = (0..len)
            .map(|_| pool[rng.gen_range(0..pool.len())].id)
            .collect();
        population.push(Aggregation::new(genome));
    }
    Ok(population)
}

/// Runs the GA for `request` over the agents in `pool`, starting from `seed`.
pub fn evolve<R: Rng + ?Sized>(
    request: &Request,
    seed: Vec<Aggregation>,
    pool: &[&Agent],
    params: &EvolutionParams,
    fitness_params: &FitnessParams,
    rng: &mut R,
) -> Result<EvolutionResult> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if seed.len() != params.pop_size {
        return Err(Error::SeedSize {
            got: seed.len(),
            expected: params.pop_size,
        });
    }
    let index: HashMap<AgentId, u32> = pool
        .iter()
        .enumerate()
        .map(|(i, a)| (a.id, i as u32))
        .collect();
    let genomes = seed
        .iter()
        .map(|agg| {
            agg.genome
                .iter()
                .map(|id| index.get(id).copied().ok_or(Error::UnknownAgent(*id)))
                .collect::<Result<Vec<u32>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let table = ScoreTable::new(request, pool, fitness_params);
    let outcome = search(
        genomes,
        pool.len(),
        params,
        &table,
        Some(max_fitness(request)),
        rng,
    );
    let genome: Vec<AgentId> = outcome.best.iter().map(|&i| pool[i as usize].id).collect();
    let used_migrant_ids = genome.iter().copied().collect();
    Ok(EvolutionResult {
        best: Aggregation {
            genome,
            cached_fitness: Some(outcome.best_fitness),
        },
        best_fitness: outcome.best_fitness,
        generations_run: outcome.generations_run,
        used_migrant_ids,
        trace: outcome.trace,
    })
}
