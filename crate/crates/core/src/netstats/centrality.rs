//! Node centrality and its relation to simulated routing income.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, SnapshotGraph};
use crate::netstats::correlation::spearman;
use crate::sim::{run_parallel, AggregateResult};

const CHUNK: usize = 32;

/// Exact hop-count betweenness (Brandes) on a directed adjacency list, without
/// normalization. Sources are processed in fixed chunks and summed in order,
/// so the result does not depend on the worker count.
pub fn brandes(adj: &[Vec<usize>], workers: usize) -> Vec<f64> {
    let n = adj.len();
    let parts = run_parallel(workers, n.div_ceil(CHUNK), |c| {
        let mut bc = vec![0.0; n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![usize::MAX; n];
        let mut delta = vec![0.0f64; n];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut stack = Vec::with_capacity(n);
        let mut queue = VecDeque::new();
        for s in c * CHUNK..((c + 1) * CHUNK).min(n) {
            for v in 0..n {
                sigma[v] = 0.0;
                dist[v] = usize::MAX;
                delta[v] = 0.0;
                preds[v].clear();
            }
            sigma[s] = 1.0;
            dist[s] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                stack.push(u);
                for &v in &adj[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                    if dist[v] == dist[u] + 1 {
                        sigma[v] += sigma[u];
                        preds[v].push(u);
                    }
                }
            }
            while let Some(w) = stack.pop() {
                for &u in &preds[w] {
                    delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w]);
                }
                if w != s {
                    bc[w] += delta[w];
                }
            }
        }
        bc
    })
    .expect("default worker pool");
    let mut total = vec![0.0; n];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

/// Directed adjacency of the routing graph: one arc per node pair with at
/// least one enabled direction.
pub fn routing_adjacency(graph: &SnapshotGraph) -> Vec<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = (0..graph.node_count())
        .map(|u| {
            graph
                .out_edges(u)
                .iter()
                .map(|&e| graph.edge(e))
                .filter(|e| !e.policy.disabled)
                .map(|e| e.trg)
                .collect()
        })
        .collect();
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

pub fn betweenness(graph: &SnapshotGraph, workers: usize) -> Vec<f64> {
    brandes(&routing_adjacency(graph), workers)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Betweenness,
    Degree,
    Capacity,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Betweenness, Measure::Degree, Measure::Capacity];

    pub fn as_str(&self) -> &'static str {
        match self {
            Measure::Betweenness => "betweenness",
            Measure::Degree => "degree",
            Measure::Capacity => "capacity",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralityVector {
    pub measure: Measure,
    pub values: BTreeMap<NodeId, f64>,
    pub max: f64,
}

pub fn centrality(graph: &SnapshotGraph, measure: Measure, workers: usize) -> CentralityVector {
    let raw: Vec<f64> = match measure {
        Measure::Betweenness => betweenness(graph, workers),
        Measure::Degree => graph.degrees().into_iter().map(|d| d as f64).collect(),
        Measure::Capacity => graph.node_capacities().into_iter().map(|c| c as f64).collect(),
    };
    let max = raw.iter().cloned().fold(0.0, f64::max);
    CentralityVector {
        measure,
        values: graph.nodes().iter().cloned().zip(raw).collect(),
        max,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralityCorrelation {
    pub snapshot_id: String,
    pub measure: Measure,
    pub spearman: Option<f64>,
}

/// Spearman correlation, per snapshot, between each node's routing income
/// (mean over runs) and each centrality measure.
pub fn centrality_income_correlation(
    aggregate: &AggregateResult,
    snapshots: &[SnapshotGraph],
    measures: &[Measure],
    workers: usize,
) -> Vec<CentralityCorrelation> {
    let mut out = Vec::new();
    for (s, g) in snapshots.iter().enumerate() {
        let mut income = vec![0.0; g.node_count()];
        let cells: Vec<_> = aggregate.cells.iter().filter(|c| c.snapshot_index == s).collect();
        for c in &cells {
            for (v, st) in c.stats.iter().enumerate() {
                income[v] += st.routing_income_msat as f64 / 1_000.0;
            }
        }
        if !cells.is_empty() {
            income.iter_mut().for_each(|x| *x /= cells.len() as f64);
        }
        for &m in measures {
            let c = centrality(g, m, workers);
            let values: Vec<f64> = g.nodes().iter().map(|id| c.values[id]).collect();
            out.push(CentralityCorrelation {
                snapshot_id: g.snapshot_id().to_string(),
                measure: m,
                spearman: spearman(&income, &values),
            });
        }
    }
    out
}
