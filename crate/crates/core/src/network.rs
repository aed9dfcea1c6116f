//! Habitats, their probabilistic connections, agent migration and Hebbian
//! reinforcement of the connections that carry useful agents.

use std::collections::{BTreeMap, HashSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EvolutionResult;
use crate::fitness::AgentLookup;
use crate::model::{Agent, AgentId, Aggregation, HabitatId, IdSource, Provenance, UserId};
use crate::topology::{Graph, TopologyMetrics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkParams {
    /// Initial migration probability of every connection.
    pub p0: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Hebbian learning rate.
    pub eta: f64,
    /// Destination requests a migrant has to prove useful in.
    pub window: u64,
    pub deployed_capacity: usize,
    pub pool_capacity: usize,
    /// Binarisation threshold for topology metrics.
    pub topology_threshold: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            p0: 0.10,
            p_min: 0.01,
            p_max: 0.99,
            eta: 0.1,
            window: 10,
            deployed_capacity: 20,
            pool_capacity: 200,
            topology_threshold: 0.3,
        }
    }
}

impl NetworkParams {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(0.0 <= self.p_min && self.p_min <= self.p_max && self.p_max <= 1.0) {
            out.push("network: need 0 <= p_min <= p_max <= 1".into());
        }
        if !(self.p_min <= self.p0 && self.p0 <= self.p_max) {
            out.push("network.p0 must lie in [p_min, p_max]".into());
        }
        if !(0.0..=1.0).contains(&self.eta) {
            out.push("network.eta must be in [0, 1]".into());
        }
        if self.window == 0 {
            out.push("network.window must be >= 1".into());
        }
        if self.deployed_capacity == 0 {
            out.push("network.deployed_capacity must be >= 1".into());
        }
        if self.pool_capacity == 0 {
            out.push("network.pool_capacity must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.topology_threshold) {
            out.push("network.topology_threshold must be in [0, 1]".into());
        }
        out
    }
}

/// A migrant awaiting proof of usefulness at the destination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PendingMigrant {
    /// Id of the copy at the destination.
    pub agent: AgentId,
    pub arrival_step: u64,
    /// Destination's served-request count on arrival.
    pub arrival_request: u64,
}

/// One direction of a habitat pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionState {
    pub p: f64,
    pub pending: Vec<PendingMigrant>,
    pub successes: u64,
    pub failures: u64,
}

impl ConnectionState {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            pending: Vec::new(),
            successes: 0,
            failures: 0,
        }
    }
}

/// Success pulls `p` towards one by `eta·(1 − p)`, failure shrinks it by the
/// factor `1 − eta`; the result is clamped to `[p_min, p_max]`.
pub fn hebbian_update(conn: &mut ConnectionState, success: bool, eta: f64, p_min: f64, p_max: f64) {
    conn.p = if success {
        conn.successes += 1;
        conn.p + eta * (1.0 - conn.p)
    } else {
        conn.failures += 1;
        (1.0 - eta) * conn.p
    };
    conn.p = conn.p.clamp(p_min, p_max);
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolEntry {
    pub agent: Agent,
    /// Arrival step, or the last step the agent was part of a deployment.
    pub last_used: u64,
    /// Gene slots referencing this agent across current deployments.
    pub pinned: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deployment {
    pub aggregation: Aggregation,
    pub step: u64,
    /// Attribute count of each gene, captured at deployment.
    pub attr_counts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Habitat {
    pub id: HabitatId,
    pub owner_user: UserId,
    pub pool: BTreeMap<AgentId, PoolEntry>,
    pub deployed: VecDeque<Deployment>,
    pub out: BTreeMap<HabitatId, ConnectionState>,
    pub requests_served: u64,
}

impl AgentLookup for Habitat {
    fn agent(&self, id: AgentId) -> Option<&Agent> {
        self.pool.get(&id).map(|e| &e.agent)
    }
}

impl Habitat {
    pub fn new(id: HabitatId, owner_user: UserId) -> Self {
        Self {
            id,
            owner_user,
            pool: BTreeMap::new(),
            deployed: VecDeque::new(),
            out: BTreeMap::new(),
            requests_served: 0,
        }
    }

    /// Pool agents in id order.
    pub fn agents(&self) -> Vec<&Agent> {
        self.pool.values().map(|e| &e.agent).collect()
    }

    pub fn deployed_aggregations(&self) -> Vec<Aggregation> {
        self.deployed
            .iter()
            .map(|d| d.aggregation.clone())
            .collect()
    }

    /// Adds `agent` to the pool, then evicts down to `capacity`. Eviction
    /// takes the least recently used agent not referenced by a deployment,
    /// falling back to any agent when every one is referenced.
    pub fn insert_agent(&mut self, agent: Agent, step: u64, capacity: usize) {
        self.pool.insert(
            agent.id,
            PoolEntry {
                agent,
                last_used: step,
                pinned: 0,
            },
        );
        while self.pool.len() > capacity {
            let lru = |only_free: bool| {
                self.pool
                    .values()
                    .filter(|e| !only_free || e.pinned == 0)
                    .min_by_key(|e| (e.last_used, e.agent.id))
                    .map(|e| e.agent.id)
            };
            let Some(victim) = lru(true).or_else(|| lru(false)) else {
                break;
            };
            self.pool.remove(&victim);
        }
    }

    /// Hosts `aggregation`, evicting the oldest deployment past `capacity`,
    /// and marks its agents used at `step`.
    pub fn deploy(&mut self, aggregation: Aggregation, step: u64, capacity: usize) -> Result<()> {
        if aggregation.is_empty() {
            return Err(Error::EmptyAggregation);
        }
        let attr_counts = aggregation
            .genome
            .iter()
            .map(|&id| {
                self.agent(id)
                    .map(|a| a.description.len() as u32)
                    .ok_or(Error::UnknownAgent(id))
            })
            .collect::<Result<Vec<_>>>()?;
        for id in &aggregation.genome {
            if let Some(e) = self.pool.get_mut(id) {
                e.last_used = step;
                e.pinned += 1;
            }
        }
        self.deployed.push_back(Deployment {
            aggregation,
            step,
            attr_counts,
        });
        while self.deployed.len() > capacity {
            if let Some(old) = self.deployed.pop_front() {
                for id in &old.aggregation.genome {
                    if let Some(e) = self.pool.get_mut(id) {
                        e.pinned = e.pinned.saturating_sub(1);
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    pub habitats: Vec<Habitat>,
    pub params: NetworkParams,
}

impl Network {
    /// Complete directed graph on `n` habitats, every connection at `p0`.
    /// Habitat `i` is owned by user `i`.
    pub fn build(n: usize, params: NetworkParams) -> Self {
        let habitats = (0..n)
            .map(|i| {
                let mut h = Habitat::new(HabitatId(i as u32), UserId(i as u32));
                h.out = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (HabitatId(j as u32), ConnectionState::new(params.p0)))
                    .collect();
                h
            })
            .collect();
        Self { habitats, params }
    }

    pub fn habitat(&self, id: HabitatId) -> Result<&Habitat> {
        self.habitats
            .get(id.index())
            .ok_or(Error::UnknownHabitat(id))
    }

    pub fn habitat_mut(&mut self, id: HabitatId) -> Result<&mut Habitat> {
        self.habitats
            .get_mut(id.index())
            .ok_or(Error::UnknownHabitat(id))
    }

    pub fn connection_count(&self) -> usize {
        self.habitats.iter().map(|h| h.out.len()).sum()
    }

    pub fn connection(&self, from: HabitatId, to: HabitatId) -> Option<&ConnectionState> {
        self.habitats.get(from.index())?.out.get(&to)
    }

    pub fn connection_mut(
        &mut self,
        from: HabitatId,
        to: HabitatId,
    ) -> Option<&mut ConnectionState> {
        self.habitats.get_mut(from.index())?.out.get_mut(&to)
    }

    pub fn deploy(
        &mut self,
        habitat: HabitatId,
        aggregation: Aggregation,
        step: u64,
    ) -> Result<()> {
        let cap = self.params.deployed_capacity;
        self.habitat_mut(habitat)?.deploy(aggregation, step, cap)
    }

    /// Sends a copy of `aggregation`'s agents along each outgoing connection
    /// of `source` with that connection's probability. Copies get fresh ids
    /// and are entered in the connection's pending ledger. Returns the number
    /// of destinations reached.
    pub fn migrate<R: Rng + ?Sized>(
        &mut self,
        source: HabitatId,
        aggregation: &Aggregation,
        step: u64,
        ids: &mut IdSource,
        rng: &mut R,
    ) -> Result<usize> {
        let src = self.habitat(source)?;
        let mut seen = HashSet::new();
        let originals: Vec<Agent> = aggregation
            .genome
            .iter()
            .filter(|id| seen.insert(**id))
            .map(|&id| src.agent(id).cloned().ok_or(Error::UnknownAgent(id)))
            .collect::<Result<_>>()?;
        let targets: Vec<HabitatId> = src
            .out
            .iter()
            .filter(|(_, c)| rng.gen_bool(c.p))
            .map(|(&to, _)| to)
            .collect();

        let cap = self.params.pool_capacity;
        for &to in &targets {
            let dest = &mut self.habitats[to.index()];
            let arrival_request = dest.requests_served;
            let mut copies = Vec::with_capacity(originals.len());
            for original in &originals {
                let copy = Agent {
                    id: ids.next_id(),
                    description: original.description.clone(),
                    origin_habitat: source,
                    created_step: step,
                    provenance: Provenance::Migrated {
                        parent: original.id,
                    },
                };
                copies.push(PendingMigrant {
                    agent: copy.id,
                    arrival_step: step,
                    arrival_request,
                });
                dest.insert_agent(copy, step, cap);
            }
            self.habitats[source.index()]
                .out
                .get_mut(&to)
                .expect("target drawn from out")
                .pending
                .extend(copies);
        }
        Ok(targets.len())
    }

    /// Closes one request at `dest`: migrants that made it into the best
    /// solution reinforce their connection, migrants that waited `window`
    /// destination requests without being used weaken it.
    pub fn settle_pending(&mut self, dest: HabitatId, result: &EvolutionResult) -> Result<()> {
        let served = {
            let h = self.habitat_mut(dest)?;
            h.requests_served += 1;
            h.requests_served
        };
        let NetworkParams {
            eta,
            p_min,
            p_max,
            window,
            ..
        } = self.params;
        for h in &mut self.habitats {
            let Some(conn) = h.out.get_mut(&dest) else {
                continue;
            };
            if conn.pending.is_empty() {
                continue;
            }
            let pending = std::mem::take(&mut conn.pending);
            for m in pending {
                if result.used_migrant_ids.contains(&m.agent) {
                    hebbian_update(conn, true, eta, p_min, p_max);
                } else if served - m.arrival_request >= window {
                    hebbian_update(conn, false, eta, p_min, p_max);
                } else {
                    conn.pending.push(m);
                }
            }
        }
        Ok(())
    }

    /// Undirected graph with an edge wherever either direction has `p ≥ threshold`.
    pub fn effective_graph(&self, threshold: f64) -> Graph {
        let mut g = Graph::new(self.habitats.len());
        for h in &self.habitats {
            for (to, c) in &h.out {
                if c.p >= threshold {
                    g.add_edge(h.id.index(), to.index());
                }
            }
        }
        g
    }

    pub fn topology_metrics(&self, threshold: f64) -> TopologyMetrics {
        TopologyMetrics::of(&self.effective_graph(threshold))
    }

    /// `source_id,dest_id,p,successes,failures` rows.
    pub fn topology_csv(&self) -> String {
        let mut out = String::from("source_id,dest_id,p,successes,failures\n");
        for h in &self.habitats {
            for (to, c) in &h.out {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    h.id, to, c.p, c.successes, c.failures
                ));
            }
        }
        out
    }

    /// Mean connection probability over ordered pairs that `same` groups
    /// together, and over those it separates.
    pub fn mean_p_split(
        &self,
        same: impl Fn(HabitatId, HabitatId) -> bool,
    ) -> (Option<f64>, Option<f64>) {
        let (mut si, mut ni, mut sx, mut nx) = (0.0, 0usize, 0.0, 0usize);
        for h in &self.habitats {
            for (&to, c) in &h.out {
                if same(h.id, to) {
                    si += c.p;
                    ni += 1;
                } else {
                    sx += c.p;
                    nx += 1;
                }
            }
        }
        (
            (ni > 0).then(|| si / ni as f64),
            (nx > 0).then(|| sx / nx as f64),
        )
    }
}
