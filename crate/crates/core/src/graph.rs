//! In-memory snapshot of the channel graph for one day.
//!
//! Nodes are stored sorted by their public identifier so that node indices,
//! edge order and every derived iteration order are reproducible across
//! platforms and runs.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = String;
pub type NodeIdx = usize;
pub type EdgeIdx = usize;
pub type ChannelIdx = usize;

/// Advertised forwarding policy of one channel direction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeePolicy {
    pub base_fee_msat: u64,
    pub fee_rate_ppm: u64,
    pub disabled: bool,
}

impl FeePolicy {
    pub fn new(base_fee_msat: u64, fee_rate_ppm: u64) -> Self {
        FeePolicy {
            base_fee_msat,
            fee_rate_ppm,
            disabled: false,
        }
    }
}

/// One direction of a channel, as read from disk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedChannelEdge {
    pub channel_id: String,
    pub src: NodeId,
    pub trg: NodeId,
    pub capacity_sat: u64,
    pub policy: FeePolicy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Channel {
    pub id: String,
    pub capacity_sat: u64,
    /// Lower-indexed endpoint; the "forward" direction runs `node_a -> node_b`.
    pub node_a: NodeIdx,
    pub node_b: NodeIdx,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub channel: ChannelIdx,
    pub src: NodeIdx,
    pub trg: NodeIdx,
    pub policy: FeePolicy,
    /// True when this edge runs from the channel's `node_a` to `node_b`.
    pub forward: bool,
}

/// Directed multigraph of channel halves surviving the load-time filters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnapshotGraph {
    snapshot_id: String,
    nodes: Vec<NodeId>,
    index: HashMap<NodeId, NodeIdx>,
    channels: Vec<Channel>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeIdx>>,
    in_edges: Vec<Vec<EdgeIdx>>,
    merchant: Vec<bool>,
    min_capacity_sat: u64,
}

impl SnapshotGraph {
    /// Builds a graph from raw directed rows.
    ///
    /// Rows with `capacity_sat < min_capacity_sat` are dropped, as are disabled
    /// directions unless `keep_disabled` is set. The node set is the union of
    /// surviving endpoints plus `isolated`.
    pub fn from_edges(
        snapshot_id: impl Into<String>,
        rows: &[DirectedChannelEdge],
        isolated: &[NodeId],
        min_capacity_sat: u64,
        keep_disabled: bool,
    ) -> Result<Self> {
        let snapshot_id = snapshot_id.into();
        validate_rows(&snapshot_id, rows)?;

        let surviving: Vec<&DirectedChannelEdge> = rows
            .iter()
            .filter(|r| r.capacity_sat >= min_capacity_sat && (keep_disabled || !r.policy.disabled))
            .collect();

        let mut names: Vec<NodeId> = surviving
            .iter()
            .flat_map(|r| [r.src.clone(), r.trg.clone()])
            .chain(isolated.iter().cloned())
            .collect();
        names.sort();
        names.dedup();
        let index: HashMap<NodeId, NodeIdx> =
            names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();

        let mut by_channel: BTreeMap<&str, Vec<&DirectedChannelEdge>> = BTreeMap::new();
        for r in &surviving {
            by_channel.entry(r.channel_id.as_str()).or_default().push(r);
        }

        let mut channels = Vec::with_capacity(by_channel.len());
        let mut edges = Vec::with_capacity(surviving.len());
        for (id, halves) in by_channel {
            let (u, v) = (index[&halves[0].src], index[&halves[0].trg]);
            let (node_a, node_b) = if u < v { (u, v) } else { (v, u) };
            let channel = channels.len();
            channels.push(Channel {
                id: id.to_string(),
                capacity_sat: halves[0].capacity_sat,
                node_a,
                node_b,
            });
            for h in halves {
                let src = index[&h.src];
                edges.push(Edge {
                    channel,
                    src,
                    trg: index[&h.trg],
                    policy: h.policy,
                    forward: src == node_a,
                });
            }
        }
        // Deterministic edge order: by source, target, then channel id.
        edges.sort_by(|a, b| {
            (a.src, a.trg, &channels[a.channel].id).cmp(&(b.src, b.trg, &channels[b.channel].id))
        });

        let mut out_edges = vec![Vec::new(); names.len()];
        let mut in_edges = vec![Vec::new(); names.len()];
        for (i, e) in edges.iter().enumerate() {
            out_edges[e.src].push(i);
            in_edges[e.trg].push(i);
        }

        Ok(SnapshotGraph {
            snapshot_id,
            merchant: vec![false; names.len()],
            nodes: names,
            index,
            channels,
            edges,
            out_edges,
            in_edges,
            min_capacity_sat,
        })
    }

    pub fn snapshot_id(&self) -> &str {
        &self.snapshot_id
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_id(&self, idx: NodeIdx) -> &str {
        &self.nodes[idx]
    }

    pub fn node_index(&self, id: &str) -> Option<NodeIdx> {
        self.index.get(id).copied()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: EdgeIdx) -> &Edge {
        &self.edges[idx]
    }

    pub fn out_edges(&self, node: NodeIdx) -> &[EdgeIdx] {
        &self.out_edges[node]
    }

    pub fn in_edges(&self, node: NodeIdx) -> &[EdgeIdx] {
        &self.in_edges[node]
    }

    pub fn capacity_of(&self, edge: &Edge) -> u64 {
        self.channels[edge.channel].capacity_sat
    }

    pub fn min_capacity_sat(&self) -> u64 {
        self.min_capacity_sat
    }

    /// Number of surviving channels adjacent to each node.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for c in &self.channels {
            deg[c.node_a] += 1;
            deg[c.node_b] += 1;
        }
        deg
    }

    /// Sum of adjacent channel capacities per node, in satoshi.
    pub fn node_capacities(&self) -> Vec<u64> {
        let mut cap = vec![0; self.nodes.len()];
        for c in &self.channels {
            cap[c.node_a] += c.capacity_sat;
            cap[c.node_b] += c.capacity_sat;
        }
        cap
    }

    pub fn total_capacity_sat(&self) -> u64 {
        self.channels.iter().map(|c| c.capacity_sat).sum()
    }

    /// Number of nodes with at least one surviving channel.
    pub fn non_isolated_count(&self) -> usize {
        self.degrees().iter().filter(|&&d| d > 0).count()
    }

    pub fn is_merchant(&self, node: NodeIdx) -> bool {
        self.merchant[node]
    }

    /// Flags the merchants present in this snapshot; unknown ids are ignored.
    pub fn set_merchants<'a>(&mut self, merchants: impl IntoIterator<Item = &'a NodeId>) {
        self.merchant.iter_mut().for_each(|m| *m = false);
        for id in merchants {
            if let Some(&i) = self.index.get(id) {
                self.merchant[i] = true;
            }
        }
    }

    pub fn with_merchants(mut self, merchants: &HashSet<NodeId>) -> Self {
        self.set_merchants(merchants);
        self
    }

    pub fn merchant_count(&self) -> usize {
        self.merchant.iter().filter(|&&m| m).count()
    }

    /// Boolean mask over node indices for the given ids (unknown ids ignored).
    pub fn node_mask<'a>(&self, ids: impl IntoIterator<Item = &'a NodeId>) -> Vec<bool> {
        let mut mask = vec![false; self.nodes.len()];
        for id in ids {
            if let Some(&i) = self.index.get(id) {
                mask[i] = true;
            }
        }
        mask
    }

    /// Rows equivalent to this graph's surviving edges.
    pub fn to_rows(&self) -> Vec<DirectedChannelEdge> {
        self.edges
            .iter()
            .map(|e| DirectedChannelEdge {
                channel_id: self.channels[e.channel].id.clone(),
                src: self.nodes[e.src].clone(),
                trg: self.nodes[e.trg].clone(),
                capacity_sat: self.channels[e.channel].capacity_sat,
                policy: e.policy,
            })
            .collect()
    }

    /// Re-applies the capacity filter at a higher threshold, keeping the
    /// node set and merchant flags.
    pub fn filtered(&self, min_capacity_sat: u64) -> Self {
        let rows: Vec<_> = self
            .to_rows()
            .into_iter()
            .filter(|r| r.capacity_sat >= min_capacity_sat)
            .collect();
        let mut g = SnapshotGraph::from_edges(
            self.snapshot_id.clone(),
            &rows,
            &self.nodes,
            min_capacity_sat.max(self.min_capacity_sat),
            true,
        )
        .expect("rows of a valid graph stay valid");
        let merchants: Vec<&NodeId> =
            (0..self.nodes.len()).filter(|&i| self.merchant[i]).map(|i| &self.nodes[i]).collect();
        g.set_merchants(merchants);
        g
    }
}

fn validate_rows(snapshot_id: &str, rows: &[DirectedChannelEdge]) -> Result<()> {
    let mut seen: HashMap<(&str, &str, &str), ()> = HashMap::new();
    let mut channel_shape: HashMap<&str, (&str, &str, u64)> = HashMap::new();
    for r in rows {
        if r.src == r.trg {
            return Err(Error::Validation(format!(
                "snapshot {snapshot_id}: channel {} is a self-loop on {}",
                r.channel_id, r.src
            )));
        }
        if r.capacity_sat == 0 {
            return Err(Error::Validation(format!(
                "snapshot {snapshot_id}: channel {} has zero capacity",
                r.channel_id
            )));
        }
        if seen.insert((&r.channel_id, &r.src, &r.trg), ()).is_some() {
            return Err(Error::Validation(format!(
                "snapshot {snapshot_id}: duplicate direction {} -> {} for channel {}",
                r.src, r.trg, r.channel_id
            )));
        }
        let (lo, hi) = if r.src < r.trg { (&r.src, &r.trg) } else { (&r.trg, &r.src) };
        match channel_shape.get(r.channel_id.as_str()) {
            None => {
                channel_shape.insert(&r.channel_id, (lo, hi, r.capacity_sat));
            }
            Some(&(a, b, cap)) => {
                if (a, b) != (lo.as_str(), hi.as_str()) {
                    return Err(Error::Validation(format!(
                        "snapshot {snapshot_id}: channel {} has inconsistent endpoints",
                        r.channel_id
                    )));
                }
                if cap != r.capacity_sat {
                    return Err(Error::Validation(format!(
                        "snapshot {snapshot_id}: channel {} directions disagree on capacity ({cap} vs {})",
                        r.channel_id, r.capacity_sat
                    )));
                }
            }
        }
    }
    Ok(())
}
