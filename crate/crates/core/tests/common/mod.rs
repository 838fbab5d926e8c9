//! Independent oracles and fixture builders shared by the integration tests.
//!
//! Everything here is deliberately naive: exhaustive enumeration, quadratic
//! pair sums, direct integer arithmetic.

#![allow(dead_code)]

use std::collections::HashSet;

use lnsim::graph::DirectedChannelEdge;
use lnsim::{BalanceState, FeePolicy, SnapshotGraph, Transaction};
use rand::seq::SliceRandom;
use rand::Rng;

/// `base + floor(rate * amount_sat / 1000)`, the same quantity as the fee on
/// the millisatoshi amount, reached by a different reduction.
pub fn oracle_fee(base_msat: u64, rate_ppm: u64, amount_sat: u64) -> u128 {
    base_msat as u128 + (rate_ppm as u128 * amount_sat as u128) / 1_000
}

pub fn name(i: usize) -> String {
    format!("v{i}")
}

/// Random directed multigraph on `n` nodes; parallel channels, disabled
/// directions and arbitrary fees included. Every node is present.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, channels: usize) -> SnapshotGraph {
    let mut rows = Vec::new();
    for c in 0..channels {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n);
        while b == a {
            b = rng.gen_range(0..n);
        }
        let cap = rng.gen_range(1..=300_000u64);
        for (s, t) in [(a, b), (b, a)] {
            rows.push(DirectedChannelEdge {
                channel_id: format!("c{c}"),
                src: name(s),
                trg: name(t),
                capacity_sat: cap,
                policy: FeePolicy {
                    base_fee_msat: *[0, 1, 1_000, 5_000, 20_000].choose(rng).unwrap(),
                    fee_rate_ppm: rng.gen_range(0..3_000),
                    disabled: rng.gen_bool(0.1),
                },
            });
        }
    }
    let isolated: Vec<String> = (0..n).map(name).collect();
    SnapshotGraph::from_edges("g", &rows, &isolated, 0, true).unwrap()
}

pub struct Search<'a> {
    pub graph: &'a SnapshotGraph,
    pub state: &'a BalanceState,
    pub amount_sat: u64,
    pub count_last_hop_fee: bool,
    pub ignore_depletion: bool,
    pub max_hops: usize,
    pub blocked: &'a HashSet<usize>,
}

impl Search<'_> {
    fn usable(&self, e: usize) -> bool {
        let edge = self.graph.edge(e);
        !edge.policy.disabled
            && (self.ignore_depletion || self.state.balance(edge) >= self.amount_sat)
            && !self.blocked.contains(&edge.trg)
    }

    /// Minimum sender cost over every simple path, by exhaustive DFS.
    pub fn cheapest_cost(&self, tx: &Transaction) -> Option<u128> {
        if tx.sender == tx.recipient || self.blocked.contains(&tx.sender) || self.blocked.contains(&tx.recipient) {
            return None;
        }
        let mut best = None;
        let mut visited = vec![false; self.graph.node_count()];
        visited[tx.sender] = true;
        self.dfs(tx.sender, tx.recipient, 0, 0, &mut visited, &mut best);
        best
    }

    fn dfs(&self, v: usize, t: usize, hops: usize, cost: u128, visited: &mut [bool], best: &mut Option<u128>) {
        if hops == self.max_hops {
            return;
        }
        for &e in self.graph.out_edges(v) {
            if !self.usable(e) {
                continue;
            }
            let edge = self.graph.edge(e);
            let fee = if edge.trg == t && !self.count_last_hop_fee {
                0
            } else {
                oracle_fee(edge.policy.base_fee_msat, edge.policy.fee_rate_ppm, self.amount_sat)
            };
            if edge.trg == t {
                let c = cost + fee;
                if best.is_none_or(|b| c < b) {
                    *best = Some(c);
                }
                continue;
            }
            if visited[edge.trg] || best.is_some_and(|b| cost + fee >= b) {
                continue;
            }
            visited[edge.trg] = true;
            self.dfs(edge.trg, t, hops + 1, cost + fee, visited, best);
            visited[edge.trg] = false;
        }
    }
}

/// Sender cost of an edge path computed from scratch.
pub fn oracle_path_cost(graph: &SnapshotGraph, edges: &[usize], amount_sat: u64, count_last_hop_fee: bool) -> u128 {
    edges
        .iter()
        .enumerate()
        .filter(|(i, _)| count_last_hop_fee || i + 1 < edges.len())
        .map(|(_, &e)| {
            let p = graph.edge(e).policy;
            oracle_fee(p.base_fee_msat, p.fee_rate_ppm, amount_sat)
        })
        .sum()
}

/// Betweenness by enumerating every shortest path between every ordered pair.
pub fn brute_betweenness(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![s];
            all_simple_paths(adj, t, &mut stack, &mut paths);
            let Some(min) = paths.iter().map(Vec::len).min() else {
                continue;
            };
            let shortest: Vec<&Vec<usize>> = paths.iter().filter(|p| p.len() == min).collect();
            for (v, b) in bc.iter_mut().enumerate() {
                if v == s || v == t {
                    continue;
                }
                let through = shortest.iter().filter(|p| p.contains(&v)).count();
                *b += through as f64 / shortest.len() as f64;
            }
        }
    }
    bc
}

fn all_simple_paths(adj: &[Vec<usize>], t: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let v = *stack.last().unwrap();
    if v == t {
        out.push(stack.clone());
        return;
    }
    for &w in &adj[v] {
        if !stack.contains(&w) {
            stack.push(w);
            all_simple_paths(adj, t, stack, out);
            stack.pop();
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if a > b {
        1.0
    } else if a < b {
        -1.0
    } else {
        0.0
    }
}

/// Tau-b from the O(n^2) pair sums.
pub fn naive_kendall(x: &[f64], y: &[f64]) -> Option<f64> {
    naive_weighted(x, y, &vec![0.5; x.len()])
}

/// Weighted tau from pair sums with additive weights `w_i + w_j`.
pub fn naive_weighted(x: &[f64], y: &[f64], w: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut num, mut dx, mut dy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let wij = w[i] + w[j];
            let (sx, sy) = (sign(x[i], x[j]), sign(y[i], y[j]));
            num += wij * sx * sy;
            dx += wij * sx.abs();
            dy += wij * sy.abs();
        }
    }
    (dx > 0.0 && dy > 0.0).then(|| num / (dx.sqrt() * dy.sqrt()))
}

/// Importance ranks: position in decreasing `(x, y)` order, later index first
/// among exact ties.
pub fn importance_ranks(x: &[f64], y: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(y[b].total_cmp(&y[a])).then(b.cmp(&a)));
    let mut r = vec![0; x.len()];
    for (pos, &i) in order.iter().enumerate() {
        r[i] = pos;
    }
    r
}

/// Hyperbolic weighted tau averaged over ranking by `x` and by `y`.
pub fn naive_weighted_kendall(x: &[f64], y: &[f64]) -> Option<f64> {
    let hyper = |r: &[usize]| r.iter().map(|&k| 1.0 / (1.0 + k as f64)).collect::<Vec<_>>();
    let a = naive_weighted(x, y, &hyper(&importance_ranks(x, y)))?;
    let b = naive_weighted(y, x, &hyper(&importance_ranks(y, x)))?;
    Some((a + b) / 2.0)
}

/// Scans every integer increment from 0 to `max(deltas)`; ties keep the
/// smaller increment.
pub fn brute_beta(deltas: &[u64]) -> (u64, u64) {
    let max = deltas.iter().copied().max().unwrap_or(0);
    let mut best = (0, 0);
    for beta in 0..=max {
        let gain = beta * deltas.iter().filter(|&&d| d >= beta).count() as u64;
        if gain > best.1 {
            best = (beta, gain);
        }
    }
    best
}
