//! Growth of the channel graph over block time.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::graph::NodeId;
use crate::ingest::EdgeStreamEvent;
use crate::netstats::structure::{summarize, UndirectedGraph};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensificationFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares of `log E` on `log N`. Needs three points with `N, E >= 1`
/// and at least two distinct `N`.
pub fn densification_fit(series: &[(usize, usize)]) -> Option<DensificationFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|&&(n, e)| n >= 1 && e >= 1)
        .map(|&(n, e)| ((n as f64).ln(), (e as f64).ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let sst: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sse: f64 = pts.iter().map(|p| (p.1 - (a * p.0 + b)).powi(2)).sum();
    let r_squared = if sst == 0.0 { 1.0 } else { (1.0 - sse / sst).clamp(0.0, 1.0) };
    Some(DensificationFit {
        exponent: a,
        intercept: b,
        r_squared,
    })
}

/// Open channels as a multigraph keyed by node name.
#[derive(Default)]
struct LiveGraph {
    index: HashMap<NodeId, usize>,
    adj: Vec<HashMap<usize, u32>>,
    degree_hist: BTreeMap<usize, u64>,
}

impl LiveGraph {
    fn id(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.index.insert(name.to_string(), self.adj.len());
        self.adj.push(HashMap::new());
        self.adj.len() - 1
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn degree(&self, v: usize) -> usize {
        self.adj[v].values().map(|&c| c as usize).sum()
    }

    fn shift_degree(&mut self, v: usize, f: impl FnOnce(usize) -> usize) {
        let d = self.degree(v);
        if d > 0 {
            if let Some(c) = self.degree_hist.get_mut(&d) {
                *c -= 1;
                if *c == 0 {
                    self.degree_hist.remove(&d);
                }
            }
        }
        let nd = f(d);
        if nd > 0 {
            *self.degree_hist.entry(nd).or_default() += 1;
        }
    }

    fn open(&mut self, u: usize, v: usize) {
        self.shift_degree(u, |d| d + 1);
        self.shift_degree(v, |d| d + 1);
        *self.adj[u].entry(v).or_default() += 1;
        *self.adj[v].entry(u).or_default() += 1;
    }

    fn close(&mut self, u: usize, v: usize) {
        self.shift_degree(u, |d| d - 1);
        self.shift_degree(v, |d| d - 1);
        for (a, b) in [(u, v), (v, u)] {
            let c = self.adj[a].get_mut(&b).expect("closing an open channel");
            *c -= 1;
            if *c == 0 {
                self.adj[a].remove(&b);
            }
        }
    }

    fn distance(&self, s: usize, t: usize) -> Option<usize> {
        if s == t {
            return Some(0);
        }
        let mut dist: HashMap<usize, usize> = HashMap::from([(s, 0)]);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            for &v in self.adj[u].keys() {
                if v == t {
                    return Some(du + 1);
                }
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(v) {
                    e.insert(du + 1);
                    queue.push_back(v);
                }
            }
        }
        None
    }
}

/// Replays the stream in block order; `on_open` sees the graph of channels
/// open strictly before the event's block.
fn replay(stream: &[EdgeStreamEvent], mut on_open: impl FnMut(&LiveGraph, &EdgeStreamEvent)) {
    let mut g = LiveGraph::default();
    let mut closing: BinaryHeap<Reverse<(u64, usize, usize)>> = BinaryHeap::new();
    let mut i = 0;
    while i < stream.len() {
        let block = stream[i].open_block;
        while let Some(&Reverse((b, u, v))) = closing.peek() {
            if b > block {
                break;
            }
            closing.pop();
            g.close(u, v);
        }
        let mut j = i;
        while j < stream.len() && stream[j].open_block == block {
            on_open(&g, &stream[j]);
            j += 1;
        }
        for e in &stream[i..j] {
            let (u, v) = (g.id(&e.src), g.id(&e.trg));
            g.open(u, v);
            if let Some(c) = e.close_block {
                closing.push(Reverse((c, u, v)));
            }
        }
        i = j;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub end_block: u64,
    pub nodes: usize,
    pub edges: usize,
    pub average_degree: Option<f64>,
    pub effective_diameter: Option<f64>,
    pub cpd: Option<f64>,
    pub transitivity: Option<f64>,
}

/// Metrics of the graph of channels open at the end of every `block_window`
/// blocks, counted from the first event. A channel is open at `b` when it
/// opened before `b` and has not closed by `b`.
pub fn temporal_metrics(stream: &[EdgeStreamEvent], block_window: u64, workers: usize) -> Vec<WindowMetrics> {
    let window = block_window.max(1);
    let Some(first) = stream.iter().map(|e| e.open_block).min() else {
        return Vec::new();
    };
    let last = stream.iter().map(|e| e.open_block).max().unwrap_or(first);
    (1..)
        .map(|k| first + k * window)
        .take_while(|&end| end <= last + window)
        .map(|end| {
            let open = stream
                .iter()
                .filter(|e| e.open_block < end && e.close_block.is_none_or(|c| c > end))
                .map(|e| (e.src.as_str(), e.trg.as_str()));
            let (g, _) = UndirectedGraph::from_named(open);
            let s = summarize(&g, workers);
            WindowMetrics {
                end_block: end,
                nodes: s.nodes,
                edges: s.edges,
                average_degree: s.average_degree,
                effective_diameter: s.effective_diameter,
                cpd: s.cpd,
                transitivity: s.transitivity,
            }
        })
        .collect()
}

/// Hop distance between the endpoints of each new channel just before it
/// opened, as `distance -> count`, plus the count of disconnected endpoints.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LocalityHistogram {
    pub distances: BTreeMap<usize, u64>,
    pub infinite: u64,
}

impl LocalityHistogram {
    pub fn total(&self) -> u64 {
        self.distances.values().sum::<u64>() + self.infinite
    }

    pub fn fraction_at(&self, d: usize) -> Option<f64> {
        let t = self.total();
        (t > 0).then(|| self.distances.get(&d).copied().unwrap_or(0) as f64 / t as f64)
    }
}

pub fn edge_locality(stream: &[EdgeStreamEvent]) -> LocalityHistogram {
    let mut h = LocalityHistogram::default();
    replay(
        stream,
        |g, e| match (g.lookup(&e.src), g.lookup(&e.trg)) {
            (Some(u), Some(v)) => match g.distance(u, v) {
                Some(d) => *h.distances.entry(d).or_default() += 1,
                None => h.infinite += 1,
            },
            _ => h.infinite += 1,
        },
    );
    h
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelLifetime {
    pub channel_id: String,
    pub blocks: u64,
    /// Still open at the last observed block.
    pub censored: bool,
    pub merchant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeLifetime {
    pub node: NodeId,
    pub first_block: u64,
    pub last_block: u64,
    pub censored: bool,
    pub merchant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lifetimes {
    pub final_block: u64,
    pub channels: Vec<ChannelLifetime>,
    pub nodes: Vec<NodeLifetime>,
}

impl Lifetimes {
    /// Mean channel lifetime, optionally only channels with a merchant endpoint.
    pub fn mean_channel_lifetime(&self, merchants_only: bool) -> Option<f64> {
        let v: Vec<u64> = self.channels.iter().filter(|c| !merchants_only || c.merchant).map(|c| c.blocks).collect();
        (!v.is_empty()).then(|| v.iter().sum::<u64>() as f64 / v.len() as f64)
    }
}

/// Channel and node lifetimes in blocks; open channels are cut at the last
/// block seen in the stream.
pub fn lifetimes(stream: &[EdgeStreamEvent], merchants: &HashSet<NodeId>) -> Lifetimes {
    let final_block = stream
        .iter()
        .map(|e| e.close_block.unwrap_or(e.open_block).max(e.open_block))
        .max()
        .unwrap_or(0);
    let mut nodes: BTreeMap<&str, (u64, u64, bool)> = BTreeMap::new();
    let channels = stream
        .iter()
        .map(|e| {
            let end = e.close_block.unwrap_or(final_block);
            for n in [&e.src, &e.trg] {
                let slot = nodes.entry(n).or_insert((e.open_block, end, e.close_block.is_none()));
                slot.0 = slot.0.min(e.open_block);
                if end > slot.1 || (end == slot.1 && e.close_block.is_none()) {
                    slot.1 = end;
                    slot.2 = e.close_block.is_none();
                }
            }
            ChannelLifetime {
                channel_id: e.channel_id.clone(),
                blocks: end - e.open_block,
                censored: e.close_block.is_none(),
                merchant: merchants.contains(&e.src) || merchants.contains(&e.trg),
            }
        })
        .collect();
    let nodes = nodes
        .into_iter()
        .map(|(n, (first, last, censored))| NodeLifetime {
            node: n.to_string(),
            first_block: first,
            last_block: last,
            censored,
            merchant: merchants.contains(n),
        })
        .collect();
    Lifetimes {
        final_block,
        channels,
        nodes,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttachmentPoint {
    pub degree: usize,
    /// New-channel endpoints that had this degree.
    pub hits: u64,
    /// Nodes at this degree summed over endpoint draws.
    pub exposure: u64,
    pub probability: f64,
}

/// Per-node probability of receiving a new channel endpoint given its current
/// degree. Endpoints joining with degree 0 are left out.
pub fn attachment_curve(stream: &[EdgeStreamEvent]) -> Vec<AttachmentPoint> {
    let mut hits: BTreeMap<usize, u64> = BTreeMap::new();
    let mut exposure: BTreeMap<usize, u64> = BTreeMap::new();
    replay(
        stream,
        |g, e| {
            for (d, c) in &g.degree_hist {
                *exposure.entry(*d).or_default() += 2 * c;
            }
            for n in [&e.src, &e.trg] {
                if let Some(v) = g.lookup(n) {
                    let d = g.degree(v);
                    if d > 0 {
                        *hits.entry(d).or_default() += 1;
                    }
                }
            }
        },
    );
    exposure
        .into_iter()
        .map(|(degree, x)| {
            let h = hits.get(&degree).copied().unwrap_or(0);
            AttachmentPoint {
                degree,
                hits: h,
                exposure: x,
                probability: h as f64 / x as f64,
            }
        })
        .collect()
}

/// `(N, E)` of each window, for [`densification_fit`].
pub fn growth_series(windows: &[WindowMetrics]) -> Vec<(usize, usize)> {
    windows.iter().map(|w| (w.nodes, w.edges)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(id: &str, a: &str, b: &str, open: u64, close: Option<u64>) -> EdgeStreamEvent {
        EdgeStreamEvent {
            channel_id: id.into(),
            src: a.into(),
            trg: b.into(),
            capacity_sat: 100_000,
            open_block: open,
            close_block: close,
        }
    }

    #[test]
    fn planted_exponents() {
        let s: Vec<_> = (2..8usize).map(|k| (k * k, k * k * k)).collect();
        let f = densification_fit(&s).unwrap();
        assert!((f.exponent - 1.5).abs() < 1e-9 && (f.r_squared - 1.0).abs() < 1e-9);
        let lin: Vec<_> = (1..6).map(|k| (k * 10, k * 30)).collect();
        let f = densification_fit(&lin).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(densification_fit(&[(5, 5), (5, 6), (5, 7)]), None);
        assert_eq!(densification_fit(&[(5, 5), (6, 6)]), None);
    }

    #[test]
    fn triangle_closing_is_distance_two() {
        let s = vec![
            ev("1", "a", "b", 1, None),
            ev("2", "b", "c", 2, None),
            ev("3", "a", "c", 3, None),
            ev("4", "d", "e", 4, None),
            ev("5", "a", "e", 5, Some(9)),
        ];
        let h = edge_locality(&s);
        assert_eq!(h.distances, BTreeMap::from([(2, 1)]));
        assert_eq!(h.infinite, 4);
    }

    #[test]
    fn closed_channels_leave_the_graph() {
        let s = vec![ev("1", "a", "b", 1, Some(2)), ev("2", "b", "c", 2, None), ev("3", "a", "c", 3, None)];
        let h = edge_locality(&s);
        assert_eq!(h.infinite, 3);
    }

    #[test]
    fn lifetime_subtraction_and_censoring() {
        let s = vec![ev("1", "a", "b", 100, Some(5_574)), ev("2", "b", "c", 200, None)];
        let l = lifetimes(&s, &HashSet::from(["c".to_string()]));
        assert_eq!(l.final_block, 5_574);
        assert_eq!(l.channels[0].blocks, 5_474);
        assert!(!l.channels[0].censored);
        assert_eq!(l.channels[1].blocks, 5_374);
        assert!(l.channels[1].censored && l.channels[1].merchant);
        assert_eq!(l.mean_channel_lifetime(true), Some(5_374.0));
        let b = l.nodes.iter().find(|n| n.node == "b").unwrap();
        assert_eq!((b.first_block, b.last_block, b.censored), (100, 5_574, true));
    }

    #[test]
    fn windows_count_open_channels() {
        let s = vec![ev("1", "a", "b", 0, Some(15)), ev("2", "b", "c", 5, None), ev("3", "c", "d", 25, None)];
        let w = temporal_metrics(&s, 10, 0);
        let ne: Vec<_> = w.iter().map(|m| (m.end_block, m.nodes, m.edges)).collect();
        assert_eq!(ne, vec![(10, 3, 2), (20, 2, 1), (30, 3, 2)]);
    }

    #[test]
    fn attachment_prefers_hubs_in_star_growth() {
        let s: Vec<_> = (1..30).map(|i| ev(&i.to_string(), "hub", &format!("x{i}"), i as u64, None)).collect();
        let c = attachment_curve(&s);
        assert!(c.iter().all(|p| p.hits <= p.exposure));
        let hub_hits: u64 = c.iter().filter(|p| p.degree > 1).map(|p| p.hits).sum();
        assert_eq!(hub_hits, 27);
    }
}
