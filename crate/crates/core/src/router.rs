//! Cheapest fee-weighted routing under per-payment capacity constraints.
//!
//! Edge weights are non-negative forwarding fees, so a label-setting search
//! suffices. Labels are ordered by `(fee, hops)` and equal labels are broken by
//! the lexicographically smallest node sequence, which makes the chosen path a
//! pure function of the inputs.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeIdx, NodeIdx, SnapshotGraph};
use crate::sampler::Transaction;
use crate::state::{edge_fee, BalanceState, SimParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PaymentStatus {
    Success,
    NoPath,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaymentOutcome {
    pub tx: Transaction,
    pub status: PaymentStatus,
    /// `sender, u1, .., recipient`; empty on failure.
    pub path: Vec<NodeIdx>,
    pub edges: Vec<EdgeIdx>,
    pub total_fee_msat: u64,
    /// Fee credited to each node on the path, in path order.
    pub credits: Vec<(NodeIdx, u64)>,
}

impl PaymentOutcome {
    pub fn failed(tx: Transaction) -> Self {
        PaymentOutcome {
            tx,
            status: PaymentStatus::NoPath,
            path: Vec::new(),
            edges: Vec::new(),
            total_fee_msat: 0,
            credits: Vec::new(),
        }
    }

    pub fn is_success(&self) -> bool {
        self.status == PaymentStatus::Success
    }

    /// Number of channels traversed.
    pub fn hop_count(&self) -> usize {
        self.edges.len()
    }

    /// Nodes strictly between sender and recipient.
    pub fn intermediaries(&self) -> &[NodeIdx] {
        if self.path.len() < 2 {
            &[]
        } else {
            &self.path[1..self.path.len() - 1]
        }
    }
}

/// Routing knobs taken from [`SimParams`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RouteOptions {
    pub amount_sat: u64,
    pub count_last_hop_fee: bool,
    pub ignore_depletion: bool,
    pub max_hops: usize,
}

impl From<&SimParams> for RouteOptions {
    fn from(p: &SimParams) -> Self {
        RouteOptions {
            amount_sat: p.amount_sat,
            count_last_hop_fee: p.count_last_hop_fee,
            ignore_depletion: p.ignore_depletion,
            max_hops: p.max_hops,
        }
    }
}

/// Fee charged for traversing `edge` on the way to `recipient`.
pub fn traversal_fee(graph: &SnapshotGraph, edge: EdgeIdx, recipient: NodeIdx, opts: &RouteOptions) -> u64 {
    let e = graph.edge(edge);
    if !opts.count_last_hop_fee && e.trg == recipient {
        0
    } else {
        edge_fee(&e.policy, opts.amount_sat)
    }
}

/// Total fee and per-node credits of a path given as an edge sequence.
///
/// The node entered by edge `i` is credited that edge's fee; the recipient is
/// credited only when `count_last_hop_fee` is set.
pub fn path_cost(
    graph: &SnapshotGraph,
    edges: &[EdgeIdx],
    amount_sat: u64,
    count_last_hop_fee: bool,
) -> Result<(u64, Vec<(NodeIdx, u64)>)> {
    for (i, &e) in edges.iter().enumerate() {
        if e >= graph.edges().len() {
            return Err(Error::ContractViolation(format!("edge index {e} does not exist")));
        }
        if i > 0 && graph.edge(edges[i - 1]).trg != graph.edge(e).src {
            return Err(Error::ContractViolation(format!("edges {} and {e} are not contiguous", edges[i - 1])));
        }
    }
    let mut credits = Vec::with_capacity(edges.len());
    for (i, &e) in edges.iter().enumerate() {
        let last = i + 1 == edges.len();
        if last && !count_last_hop_fee {
            continue;
        }
        let edge = graph.edge(e);
        credits.push((edge.trg, edge_fee(&edge.policy, amount_sat)));
    }
    let total = credits.iter().map(|c| c.1).sum();
    Ok((total, credits))
}

const NONE: usize = usize::MAX;

/// Reusable search buffers; one per worker thread.
#[derive(Debug, Default)]
pub struct Router {
    cost: Vec<u64>,
    hops: Vec<u32>,
    pred: Vec<EdgeIdx>,
    seen: Vec<u32>,
    settled: Vec<u32>,
    epoch: u32,
    heap: BinaryHeap<Reverse<(u64, u32, NodeIdx)>>,
    path_a: Vec<NodeIdx>,
    path_b: Vec<NodeIdx>,
}

impl Router {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, n: usize) {
        if self.cost.len() < n {
            self.cost.resize(n, 0);
            self.hops.resize(n, 0);
            self.pred.resize(n, NONE);
            self.seen.resize(n, 0);
            self.settled.resize(n, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.settled.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.heap.clear();
    }

    /// Cheapest capacity-feasible path for `tx`.
    ///
    /// Nodes flagged in `blocked` are treated as absent. A search result longer
    /// than `max_hops` is replaced by the cheapest path within the hop cap.
    pub fn cheapest_path(
        &mut self,
        graph: &SnapshotGraph,
        state: &BalanceState,
        tx: &Transaction,
        opts: &RouteOptions,
        blocked: Option<&[bool]>,
    ) -> PaymentOutcome {
        let (s, t) = (tx.sender, tx.recipient);
        let is_blocked = |v: NodeIdx| blocked.is_some_and(|b| b[v]);
        if s == t || is_blocked(s) || is_blocked(t) {
            return PaymentOutcome::failed(*tx);
        }
        self.reset(graph.node_count());
        let ep = self.epoch;
        self.cost[s] = 0;
        self.hops[s] = 0;
        self.pred[s] = NONE;
        self.seen[s] = ep;
        self.heap.push(Reverse((0, 0, s)));

        let mut found = false;
        while let Some(Reverse((c, h, u))) = self.heap.pop() {
            if self.settled[u] == ep || (c, h) != (self.cost[u], self.hops[u]) {
                continue;
            }
            self.settled[u] = ep;
            if u == t {
                found = true;
                break;
            }
            for &ei in graph.out_edges(u) {
                let e = graph.edge(ei);
                let v = e.trg;
                if self.settled[v] == ep || is_blocked(v) || !state.usable(e, opts.amount_sat, opts.ignore_depletion) {
                    continue;
                }
                let nc = c + traversal_fee(graph, ei, t, opts);
                let nh = h + 1;
                if self.seen[v] != ep || (nc, nh) < (self.cost[v], self.hops[v]) {
                    self.seen[v] = ep;
                    self.cost[v] = nc;
                    self.hops[v] = nh;
                    self.pred[v] = ei;
                    self.heap.push(Reverse((nc, nh, v)));
                } else if (nc, nh) == (self.cost[v], self.hops[v]) && self.prefers(graph, u, self.pred[v]) {
                    self.pred[v] = ei;
                }
            }
        }
        if !found {
            return PaymentOutcome::failed(*tx);
        }
        let mut edges = Vec::with_capacity(self.hops[t] as usize);
        let mut v = t;
        while self.pred[v] != NONE {
            edges.push(self.pred[v]);
            v = graph.edge(self.pred[v]).src;
        }
        edges.reverse();
        if edges.len() > opts.max_hops {
            return match bounded_cheapest(graph, state, tx, opts, blocked) {
                Some(edges) => outcome_from_edges(graph, tx, edges, opts),
                None => PaymentOutcome::failed(*tx),
            };
        }
        outcome_from_edges(graph, tx, edges, opts)
    }

    /// Whether the settled path to `u` (extended by one edge) beats the current
    /// best path into the same node that arrives over edge `current`.
    fn prefers(&mut self, graph: &SnapshotGraph, u: NodeIdx, current: EdgeIdx) -> bool {
        let other = graph.edge(current).src;
        if other == u {
            return false;
        }
        fill_path(graph, &self.pred, u, &mut self.path_a);
        fill_path(graph, &self.pred, other, &mut self.path_b);
        self.path_a.cmp(&self.path_b) == Ordering::Less
    }
}

fn fill_path(graph: &SnapshotGraph, pred: &[EdgeIdx], mut v: NodeIdx, out: &mut Vec<NodeIdx>) {
    out.clear();
    out.push(v);
    while pred[v] != NONE {
        v = graph.edge(pred[v]).src;
        out.push(v);
    }
    out.reverse();
}

fn outcome_from_edges(graph: &SnapshotGraph, tx: &Transaction, edges: Vec<EdgeIdx>, opts: &RouteOptions) -> PaymentOutcome {
    let mut path = Vec::with_capacity(edges.len() + 1);
    path.push(tx.sender);
    path.extend(edges.iter().map(|&e| graph.edge(e).trg));
    let (total_fee_msat, credits) =
        path_cost(graph, &edges, opts.amount_sat, opts.count_last_hop_fee).expect("search yields contiguous paths");
    PaymentOutcome {
        tx: *tx,
        status: PaymentStatus::Success,
        path,
        edges,
        total_fee_msat,
        credits,
    }
}

/// Cheapest path with at most `max_hops` edges, by dynamic programming over
/// hop layers. The (fee, hops)-minimal walk is always simple because fees are
/// non-negative.
fn bounded_cheapest(
    graph: &SnapshotGraph,
    state: &BalanceState,
    tx: &Transaction,
    opts: &RouteOptions,
    blocked: Option<&[bool]>,
) -> Option<Vec<EdgeIdx>> {
    let n = graph.node_count();
    let is_blocked = |v: NodeIdx| blocked.is_some_and(|b| b[v]);
    let mut layers: Vec<Vec<(u64, EdgeIdx)>> = vec![vec![(u64::MAX, NONE); n]];
    layers[0][tx.sender] = (0, NONE);
    let mut best: Option<(u64, usize)> = None;
    for k in 1..=opts.max_hops {
        let prev = &layers[k - 1];
        let mut cur = vec![(u64::MAX, NONE); n];
        for (u, &(c, _)) in prev.iter().enumerate() {
            if c == u64::MAX || u == tx.recipient {
                continue;
            }
            for &ei in graph.out_edges(u) {
                let e = graph.edge(ei);
                if is_blocked(e.trg) || !state.usable(e, opts.amount_sat, opts.ignore_depletion) {
                    continue;
                }
                let nc = c + traversal_fee(graph, ei, tx.recipient, opts);
                if nc < cur[e.trg].0 {
                    cur[e.trg] = (nc, ei);
                }
            }
        }
        let at_t = cur[tx.recipient].0;
        if at_t != u64::MAX && best.is_none_or(|(bc, _)| at_t < bc) {
            best = Some((at_t, k));
        }
        layers.push(cur);
    }
    let (_, k) = best?;
    let mut edges = Vec::with_capacity(k);
    let mut v = tx.recipient;
    for layer in (1..=k).rev() {
        let ei = layers[layer][v].1;
        edges.push(ei);
        v = graph.edge(ei).src;
    }
    edges.reverse();
    Some(edges)
}

/// One-shot convenience wrapper around [`Router::cheapest_path`].
pub fn cheapest_path(graph: &SnapshotGraph, state: &BalanceState, tx: &Transaction, params: &SimParams) -> PaymentOutcome {
    Router::new().cheapest_path(graph, state, tx, &RouteOptions::from(params), None)
}
