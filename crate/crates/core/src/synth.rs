//! Seeded synthetic channel networks with a hub-and-spoke shape.
//!
//! Used by the runnable examples and the test suites when no recorded
//! snapshots are at hand. Growth is preferential attachment; capacities are
//! log-uniform and larger for older nodes; fee policies mix a few common
//! settings with a long tail.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{DirectedChannelEdge, FeePolicy, NodeId, SnapshotGraph};
use crate::error::{Error, Result};
use crate::ingest::{write_canonical_rows, CanonicalRow, EdgeStreamEvent, EntityMap};
use crate::seeds::{derive_seed, rng_from};

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub nodes: usize,
    /// Maximum channels opened by each joining node.
    pub max_attach: usize,
    pub merchant_fraction: f64,
    /// Share of channel directions advertised as disabled.
    pub disabled_fraction: f64,
    /// The oldest `operator_nodes` nodes form one entity named `operator`.
    pub operator_nodes: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            nodes: 200,
            max_attach: 3,
            merchant_fraction: 0.05,
            disabled_fraction: 0.05,
            operator_nodes: 4,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticNetwork {
    pub rows: Vec<DirectedChannelEdge>,
    pub merchants: HashSet<NodeId>,
    pub entities: EntityMap,
}

pub fn node_name(i: usize) -> NodeId {
    format!("n{i:05}")
}

fn random_policy<R: Rng>(rng: &mut R, disabled_fraction: f64) -> FeePolicy {
    let base = *[0u64, 1_000, 1_000, 1_000, 1_000, 2_000, 5_000, 10_000].choose(rng).unwrap();
    let rate = *[1u64, 1, 10, 100, 100, 500, 1_000, 2_500].choose(rng).unwrap();
    FeePolicy {
        base_fee_msat: base,
        fee_rate_ppm: rate,
        disabled: rng.gen_bool(disabled_fraction),
    }
}

fn capacity<R: Rng>(rng: &mut R, age_bonus: f64) -> u64 {
    // log10 capacity in [4.3, 7.2], shifted up for old hubs.
    let exp = rng.gen_range(4.3..7.2) + age_bonus;
    10f64.powf(exp.min(7.6)).round() as u64
}

/// Undirected channel list `(u, v)` grown by preferential attachment.
fn grow<R: Rng>(rng: &mut R, nodes: usize, max_attach: usize) -> Vec<(usize, usize)> {
    let mut channels = Vec::new();
    let mut endpoints: Vec<usize> = Vec::new();
    if nodes < 2 {
        return channels;
    }
    channels.push((0, 1));
    endpoints.extend([0, 1]);
    for v in 2..nodes {
        let k = rng.gen_range(1..=max_attach.max(1)).min(v);
        let mut targets = BTreeSet::new();
        while targets.len() < k {
            targets.insert(endpoints[rng.gen_range(0..endpoints.len())]);
        }
        for u in targets {
            channels.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    channels
}

pub fn generate(cfg: &SynthConfig) -> SyntheticNetwork {
    let mut rng = rng_from(derive_seed(cfg.seed, &[0x5e7]));
    let channels = grow(&mut rng, cfg.nodes, cfg.max_attach);
    let mut rows = Vec::with_capacity(channels.len() * 2);
    for (i, &(u, v)) in channels.iter().enumerate() {
        let age_bonus = if u < cfg.nodes / 20 { 0.6 } else { 0.0 };
        let cap = capacity(&mut rng, age_bonus);
        let id = format!("ch{i:06}");
        for (a, b) in [(u, v), (v, u)] {
            rows.push(DirectedChannelEdge {
                channel_id: id.clone(),
                src: node_name(a),
                trg: node_name(b),
                capacity_sat: cap,
                policy: random_policy(&mut rng, cfg.disabled_fraction),
            });
        }
    }
    let merchant_count = ((cfg.nodes as f64) * cfg.merchant_fraction).round() as usize;
    let mut pool: Vec<usize> = (0..cfg.nodes).collect();
    pool.shuffle(&mut rng);
    let merchants = pool.into_iter().take(merchant_count).map(node_name).collect();
    let entities = EntityMap::from_pairs((0..cfg.operator_nodes.min(cfg.nodes)).map(|i| (node_name(i), "operator")))
        .expect("distinct nodes");
    SyntheticNetwork {
        rows,
        merchants,
        entities,
    }
}

impl SyntheticNetwork {
    /// Builds the snapshot graph with merchant flags set.
    pub fn graph(&self, snapshot_id: &str, min_capacity_sat: u64) -> SnapshotGraph {
        SnapshotGraph::from_edges(snapshot_id, &self.rows, &[], min_capacity_sat, false)
            .expect("synthetic rows are valid")
            .with_merchants(&self.merchants)
    }
}

/// A run of daily snapshots of the same network; each day drops a random
/// `churn` share of channels.
pub fn daily_snapshots(cfg: &SynthConfig, days: usize, churn: f64, min_capacity_sat: u64) -> (Vec<SnapshotGraph>, SyntheticNetwork) {
    let net = generate(cfg);
    let snapshots = (0..days)
        .map(|d| {
            let mut rng = rng_from(derive_seed(cfg.seed, &[0xda7, d as u64]));
            let dropped: HashSet<&str> = net
                .rows
                .iter()
                .map(|r| r.channel_id.as_str())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .filter(|_| rng.gen_bool(churn))
                .collect();
            let rows: Vec<_> = net.rows.iter().filter(|r| !dropped.contains(r.channel_id.as_str())).cloned().collect();
            SnapshotGraph::from_edges(format!("day{d:03}"), &rows, &[], min_capacity_sat, false)
                .expect("synthetic rows are valid")
                .with_merchants(&net.merchants)
        })
        .collect();
    (snapshots, net)
}

/// Channel open/close stream of a growing network. New channels either attach
/// preferentially or close a triangle with a neighbour's neighbour.
pub fn edge_stream(nodes: usize, triangle_bias: f64, seed: u64) -> Vec<EdgeStreamEvent> {
    let mut rng = rng_from(derive_seed(seed, &[0xed9e]));
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut endpoints: Vec<usize> = Vec::new();
    let mut events = Vec::new();
    let mut block = 500_000u64;
    let open = |u: usize, v: usize, block: u64, rng: &mut rand_chacha::ChaCha8Rng, events: &mut Vec<EdgeStreamEvent>| {
        let lifetime = rng.gen_range(500..12_000u64);
        let close = (rng.gen_bool(0.4)).then_some(block + lifetime);
        events.push(EdgeStreamEvent {
            channel_id: format!("s{:06}", events.len()),
            src: node_name(u),
            trg: node_name(v),
            capacity_sat: capacity(rng, 0.0),
            open_block: block,
            close_block: close,
        });
    };
    if nodes < 2 {
        return events;
    }
    open(0, 1, block, &mut rng, &mut events);
    adj[0].push(1);
    adj[1].push(0);
    endpoints.extend([0, 1]);
    let mut present = 2;
    let target = (nodes * 2).min(nodes * (nodes - 1) / 2);
    while present < nodes || events.len() < target {
        block += rng.gen_range(1..20);
        let (u, v) = if present < nodes && rng.gen_bool(0.5) {
            let v = present;
            present += 1;
            (endpoints[rng.gen_range(0..endpoints.len())], v)
        } else {
            let u = endpoints[rng.gen_range(0..endpoints.len())];
            let candidate = if rng.gen_bool(triangle_bias) {
                adj[u]
                    .choose(&mut rng)
                    .and_then(|&w| adj[w].choose(&mut rng).copied())
                    .filter(|&x| x != u && !adj[u].contains(&x))
            } else {
                None
            };
            match candidate {
                Some(x) => (u, x),
                None => {
                    let x = endpoints[rng.gen_range(0..endpoints.len())];
                    if x == u || adj[u].contains(&x) {
                        continue;
                    }
                    (u, x)
                }
            }
        };
        open(u, v, block, &mut rng, &mut events);
        adj[u].push(v);
        adj[v].push(u);
        endpoints.extend([u, v]);
    }
    events
}

/// Writes a synthetic dataset in the on-disk input formats: `snapshots.csv`
/// (all days, unfiltered), `merchants.csv`, `entities.csv` and
/// `edge_stream.csv`.
pub fn write_dataset(dir: &Path, cfg: &SynthConfig, days: usize, churn: f64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (snapshots, net) = daily_snapshots(cfg, days, churn, 0);
    let rows: Vec<CanonicalRow> = snapshots
        .iter()
        .flat_map(|g| g.to_rows().into_iter().map(move |r| CanonicalRow::from_edge(g.snapshot_id(), &r)))
        .collect();
    let path = dir.join("snapshots.csv");
    write_canonical_rows(File::create(&path).map_err(|e| Error::io(&path, e))?, &rows)?;

    let path = dir.join("merchants.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["pub_key", "tag"])?;
    let mut merchants: Vec<&NodeId> = net.merchants.iter().collect();
    merchants.sort();
    for m in merchants {
        w.write_record([m.as_str(), "merchant"])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("entities.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["pub_key", "entity_name"])?;
    for name in net.entities.entity_names() {
        for m in net.entities.members(&name) {
            w.write_record([m.as_str(), name.as_str()])?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("edge_stream.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for ev in edge_stream(cfg.nodes, 0.6, cfg.seed) {
        w.serialize(ev)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}
