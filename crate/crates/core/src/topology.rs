//! Small-world measurements on undirected simple graphs.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Undirected simple graph on nodes `0..n`, adjacency as sorted lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Self::new(n);
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    /// Adds `{a, b}`; self-loops and duplicates are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) -> bool {
        if a == b || self.has_edge(a, b) {
            return false;
        }
        for (x, y) in [(a, b), (b, a)] {
            let pos = self.adj[x].partition_point(|&v| v < y);
            self.adj[x].insert(pos, y);
        }
        true
    }

    fn remove_edge(&mut self, a: usize, b: usize) {
        for (x, y) in [(a, b), (b, a)] {
            if let Ok(pos) = self.adj[x].binary_search(&y) {
                self.adj[x].remove(pos);
            }
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    /// Fraction of neighbour pairs of `v` that are themselves adjacent; 0 for
    /// degree below two.
    pub fn local_clustering(&self, v: usize) -> f64 {
        let ns = &self.adj[v];
        let k = ns.len();
        if k < 2 {
            return 0.0;
        }
        let mut links = 0usize;
        for (i, &a) in ns.iter().enumerate() {
            for &b in &ns[i + 1..] {
                if self.has_edge(a, b) {
                    links += 1;
                }
            }
        }
        links as f64 / (k * (k - 1) / 2) as f64
    }

    /// Watts–Strogatz clustering: mean local clustering over all nodes.
    pub fn clustering_coefficient(&self) -> f64 {
        if self.adj.is_empty() {
            return 0.0;
        }
        (0..self.adj.len())
            .map(|v| self.local_clustering(v))
            .sum::<f64>()
            / self.adj.len() as f64
    }

    /// Nodes of the largest connected component, lowest-numbered on ties.
    pub fn largest_component(&self) -> Vec<usize> {
        let mut seen = vec![false; self.adj.len()];
        let mut best: Vec<usize> = Vec::new();
        for start in 0..self.adj.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            if comp.len() > best.len() {
                best = comp;
            }
        }
        best.sort_unstable();
        best
    }

    fn bfs(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.adj.len()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or(0);
            for &w in &self.adj[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Mean shortest-path length over ordered pairs of distinct nodes in the
    /// largest connected component; `None` when it has fewer than two nodes.
    pub fn characteristic_path_length(&self) -> Option<f64> {
        let comp = self.largest_component();
        if comp.len() < 2 {
            return None;
        }
        let mut total = 0usize;
        for &s in &comp {
            let dist = self.bfs(s);
            total += comp.iter().filter_map(|&t| dist[t]).sum::<usize>();
        }
        Some(total as f64 / (comp.len() * (comp.len() - 1)) as f64)
    }

    /// Degree-preserving randomisation by `swaps` attempted double-edge swaps.
    pub fn rewired<R: Rng + ?Sized>(&self, swaps: usize, rng: &mut R) -> Graph {
        let mut g = self.clone();
        let mut edges = g.edges();
        if edges.len() < 2 {
            return g;
        }
        for _ in 0..swaps {
            let i = rng.gen_range(0..edges.len());
            let j = rng.gen_range(0..edges.len());
            if i == j {
                continue;
            }
            let (a, b) = edges[i];
            let (c, d) = if rng.gen_bool(0.5) {
                edges[j]
            } else {
                (edges[j].1, edges[j].0)
            };
            // a-b, c-d  ->  a-d, c-b
            if a == d || c == b || a == c || b == d || g.has_edge(a, d) || g.has_edge(c, b) {
                continue;
            }
            g.remove_edge(a, b);
            g.remove_edge(c, d);
            g.add_edge(a, d);
            g.add_edge(c, b);
            edges[i] = (a, d);
            edges[j] = (c, b);
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyMetrics {
    /// `None` when the graph has no edges.
    pub clustering_coefficient: Option<f64>,
    /// `None` when the largest component has fewer than two nodes.
    pub characteristic_path_length: Option<f64>,
    pub edge_count: usize,
    pub largest_component: usize,
}

impl TopologyMetrics {
    pub fn of(graph: &Graph) -> Self {
        let edge_count = graph.edge_count();
        Self {
            clustering_coefficient: (edge_count > 0).then(|| graph.clustering_coefficient()),
            characteristic_path_length: graph.characteristic_path_length(),
            edge_count,
            largest_component: graph.largest_component().len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn complete(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))))
    }

    fn ring(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|a| (a, (a + 1) % n)))
    }

    #[test]
    fn complete_graph_values() {
        let m = TopologyMetrics::of(&complete(7));
        assert_eq!(m.clustering_coefficient, Some(1.0));
        assert_eq!(m.characteristic_path_length, Some(1.0));
        assert_eq!(m.edge_count, 21);
    }

    #[test]
    fn ring_of_six() {
        let m = TopologyMetrics::of(&ring(6));
        assert_eq!(m.clustering_coefficient, Some(0.0));
        // per node: 1 + 1 + 2 + 2 + 3 = 9 over 5 targets
        assert!((m.characteristic_path_length.unwrap() - 1.8).abs() < 1e-12);
    }

    #[test]
    fn empty_graph_is_undefined() {
        let m = TopologyMetrics::of(&Graph::new(5));
        assert_eq!(m.edge_count, 0);
        assert_eq!(m.clustering_coefficient, None);
        assert_eq!(m.characteristic_path_length, None);
    }

    #[test]
    fn path_length_uses_largest_component() {
        // triangle plus a separate edge
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (0, 2), (3, 4)]);
        assert_eq!(g.largest_component(), vec![0, 1, 2]);
        assert_eq!(g.characteristic_path_length(), Some(1.0));
        assert!((g.clustering_coefficient() - 3.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn rewiring_preserves_degrees() {
        let g = Graph::from_edges(
            10,
            (0..5)
                .flat_map(|a| (a + 1..5).map(move |b| (a, b)))
                .chain((5..10).flat_map(|a| (a + 1..10).map(move |b| (a, b))))
                .chain([(0, 5), (1, 6)]),
        );
        let r = g.rewired(1000, &mut ChaCha8Rng::seed_from_u64(1));
        for v in 0..10 {
            assert_eq!(g.degree(v), r.degree(v));
        }
        assert_eq!(g.edge_count(), r.edge_count());
        assert!(r.clustering_coefficient() < g.clustering_coefficient());
    }
}
