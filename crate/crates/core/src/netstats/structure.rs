//! Structural metrics on the undirected simple projection of a channel graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::graph::SnapshotGraph;
use crate::netstats::centrality::brandes;

/// Undirected simple graph on nodes `0..n`, adjacency lists sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    adj: Vec<Vec<usize>>,
}

impl UndirectedGraph {
    /// Self-loops and repeated pairs are dropped.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut sets = vec![BTreeSet::new(); n];
        for (u, v) in edges {
            if u != v {
                sets[u].insert(v);
                sets[v].insert(u);
            }
        }
        UndirectedGraph {
            adj: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    /// One undirected edge per connected node pair; disabled directions still
    /// count, isolated nodes are kept.
    pub fn from_snapshot(graph: &SnapshotGraph) -> Self {
        Self::from_edges(graph.node_count(), graph.channels().iter().map(|c| (c.node_a, c.node_b)))
    }

    /// Builds from named endpoint pairs, returning the node names by index.
    pub fn from_named<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> (Self, Vec<String>) {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut names = Vec::new();
        let mut edges = Vec::new();
        for (a, b) in pairs {
            let mut id = |s: &'a str| {
                *index.entry(s).or_insert_with(|| {
                    names.push(s.to_string());
                    names.len() - 1
                })
            };
            let (u, v) = (id(a), id(b));
            edges.push((u, v));
        }
        (Self::from_edges(names.len(), edges), names)
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adj
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn average_degree(&self) -> Option<f64> {
        (!self.adj.is_empty()).then(|| 2.0 * self.edge_count() as f64 / self.adj.len() as f64)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }
}

/// Betweenness on the undirected graph (each unordered pair counted once).
pub fn undirected_betweenness(g: &UndirectedGraph, workers: usize) -> Vec<f64> {
    brandes(g.adjacency(), workers).into_iter().map(|b| b / 2.0).collect()
}

/// Freeman's central point dominance: mean gap to the most central node of
/// betweenness normalized by its star-graph maximum. 1 for a star, 0 for a
/// complete graph.
pub fn cpd(g: &UndirectedGraph, workers: usize) -> Option<f64> {
    let n = g.node_count();
    if n < 3 {
        return None;
    }
    let scale = ((n - 1) * (n - 2)) as f64 / 2.0;
    let b = undirected_betweenness(g, workers);
    let max = b.iter().cloned().fold(0.0, f64::max);
    Some(b.iter().map(|x| (max - x) / scale).sum::<f64>() / (n - 1) as f64)
}

/// `3 * triangles / connected triples`; zero without any connected triple.
pub fn transitivity(g: &UndirectedGraph) -> Option<f64> {
    if g.node_count() < 2 {
        return None;
    }
    let mut closed = 0u64;
    let mut triples = 0u64;
    for v in 0..g.node_count() {
        let ns = g.neighbors(v);
        let d = ns.len() as u64;
        triples += d * d.saturating_sub(1) / 2;
        for (i, &a) in ns.iter().enumerate() {
            for &b in &ns[i + 1..] {
                if g.neighbors(a).binary_search(&b).is_ok() {
                    closed += 1;
                }
            }
        }
    }
    // Each triangle is closed at all three of its corners.
    Some(if triples == 0 { 0.0 } else { closed as f64 / triples as f64 })
}

/// Counts of ordered node pairs by finite hop distance (`d >= 1`).
pub fn distance_distribution(g: &UndirectedGraph, workers: usize) -> BTreeMap<usize, u64> {
    let n = g.node_count();
    let chunks = n.div_ceil(CHUNK);
    let parts = crate::sim::run_parallel(workers, chunks, |c| {
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for s in c * CHUNK..((c + 1) * CHUNK).min(n) {
            dist.iter_mut().for_each(|d| *d = usize::MAX);
            dist[s] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in g.neighbors(u) {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        *counts.entry(dist[v]).or_default() += 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        counts
    })
    .expect("default worker pool");
    let mut total = BTreeMap::new();
    for part in parts {
        for (d, c) in part {
            *total.entry(d).or_default() += c;
        }
    }
    total
}

const CHUNK: usize = 64;

/// Interpolated 90th percentile of finite pairwise distances, with the
/// cumulative fraction taken as 0 at distance 0.
pub fn effective_diameter(g: &UndirectedGraph, workers: usize) -> Option<f64> {
    effective_diameter_from(&distance_distribution(g, workers), 0.9)
}

pub fn effective_diameter_from(dist: &BTreeMap<usize, u64>, quantile: f64) -> Option<f64> {
    let total: u64 = dist.values().sum();
    if total == 0 {
        return None;
    }
    // Hop distances are contiguous, so `d - 1` precedes `d` in the map.
    let (mut prev_g, mut cum) = (0.0f64, 0u64);
    for (&d, &c) in dist {
        cum += c;
        let g = cum as f64 / total as f64;
        if g >= quantile {
            return Some((d - 1) as f64 + (quantile - prev_g) / (g - prev_g));
        }
        prev_g = g;
    }
    dist.keys().next_back().map(|&d| d as f64)
}

/// Largest finite hop distance.
pub fn diameter(g: &UndirectedGraph, workers: usize) -> Option<usize> {
    distance_distribution(g, workers).keys().next_back().copied()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureSummary {
    pub nodes: usize,
    pub edges: usize,
    pub average_degree: Option<f64>,
    pub effective_diameter: Option<f64>,
    pub cpd: Option<f64>,
    pub transitivity: Option<f64>,
}

pub fn summarize(g: &UndirectedGraph, workers: usize) -> StructureSummary {
    StructureSummary {
        nodes: g.node_count(),
        edges: g.edge_count(),
        average_degree: g.average_degree(),
        effective_diameter: effective_diameter(g, workers),
        cpd: cpd(g, workers),
        transitivity: transitivity(g),
    }
}
