//! Readers for snapshots, node labels and the channel open/close stream.
//!
//! The canonical snapshot format is a directed-edge CSV with header
//! `snapshot_id,channel_id,src,trg,capacity_sat,base_fee_msat,fee_rate_ppm,disabled`.
//! A row with an empty `channel_id` and `trg` lists `src` as an isolated node.
//! Node-client JSON graph dumps are accepted through [`convert_gossip_dump`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedChannelEdge, FeePolicy, NodeId, SnapshotGraph};

pub const CANONICAL_HEADER: [&str; 8] = [
    "snapshot_id",
    "channel_id",
    "src",
    "trg",
    "capacity_sat",
    "base_fee_msat",
    "fee_rate_ppm",
    "disabled",
];

/// Which endpoint's advertised policy a directed edge carries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyConvention {
    /// Edge `u -> v` carries the policy advertised by `u` (gossip semantics).
    #[default]
    Source,
    /// Edge `u -> v` carries the policy advertised by `v`.
    Target,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Channels with capacity below this many satoshi are dropped.
    pub min_capacity_sat: u64,
    pub keep_disabled: bool,
    pub policy_convention: PolicyConvention,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            min_capacity_sat: 60_000,
            keep_disabled: false,
            policy_convention: PolicyConvention::Source,
        }
    }
}

/// One row of the canonical directed-edge table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalRow {
    pub snapshot_id: String,
    pub channel_id: String,
    pub src: String,
    pub trg: String,
    pub capacity_sat: Option<u64>,
    pub base_fee_msat: Option<u64>,
    pub fee_rate_ppm: Option<u64>,
    pub disabled: Option<u8>,
}

impl CanonicalRow {
    pub fn isolated(snapshot_id: &str, node: &str) -> Self {
        CanonicalRow {
            snapshot_id: snapshot_id.into(),
            channel_id: String::new(),
            src: node.into(),
            trg: String::new(),
            capacity_sat: None,
            base_fee_msat: None,
            fee_rate_ppm: None,
            disabled: None,
        }
    }

    pub fn from_edge(snapshot_id: &str, e: &DirectedChannelEdge) -> Self {
        CanonicalRow {
            snapshot_id: snapshot_id.into(),
            channel_id: e.channel_id.clone(),
            src: e.src.clone(),
            trg: e.trg.clone(),
            capacity_sat: Some(e.capacity_sat),
            base_fee_msat: Some(e.policy.base_fee_msat),
            fee_rate_ppm: Some(e.policy.fee_rate_ppm),
            disabled: Some(e.policy.disabled as u8),
        }
    }

    fn is_isolated_marker(&self) -> bool {
        self.channel_id.is_empty() && self.trg.is_empty()
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<BufReader<File>>> {
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?))
}

fn line_of(err: &csv::Error) -> u64 {
    err.position().map(|p| p.line()).unwrap_or(0)
}

/// Deserializes every record, naming the offending line on failure.
fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(u64, T)>> {
    let mut reader = csv_reader(path)?;
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    let headers = reader.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map(|p| p.line()).unwrap_or(0);
                let value: T = record
                    .deserialize(Some(&headers))
                    .map_err(|e| Error::parse(path, line, e.to_string()))?;
                out.push((line, value));
            }
            Err(e) => return Err(Error::parse(path, line_of(&e), e.to_string())),
        }
    }
    Ok(out)
}

/// Reads a canonical directed-edge CSV.
pub fn read_canonical_rows(path: &Path) -> Result<Vec<CanonicalRow>> {
    let rows: Vec<(u64, CanonicalRow)> = read_records(path)?;
    let mut out = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        if row.src.is_empty() {
            return Err(Error::parse(path, line, "empty src"));
        }
        if !row.is_isolated_marker() {
            if row.channel_id.is_empty() || row.trg.is_empty() {
                return Err(Error::parse(path, line, "channel_id and trg must both be set"));
            }
            let missing = [
                ("capacity_sat", row.capacity_sat.is_none()),
                ("base_fee_msat", row.base_fee_msat.is_none()),
                ("fee_rate_ppm", row.fee_rate_ppm.is_none()),
                ("disabled", row.disabled.is_none()),
            ];
            if let Some((name, _)) = missing.iter().find(|(_, m)| *m) {
                return Err(Error::parse(path, line, format!("missing {name}")));
            }
            if row.disabled.unwrap() > 1 {
                return Err(Error::parse(path, line, "disabled must be 0 or 1"));
            }
        }
        out.push(row);
    }
    Ok(out)
}

pub fn write_canonical_rows<W: Write>(writer: W, rows: &[CanonicalRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CANONICAL_HEADER)?;
    for r in rows {
        w.write_record([
            r.snapshot_id.clone(),
            r.channel_id.clone(),
            r.src.clone(),
            r.trg.clone(),
            opt(r.capacity_sat),
            opt(r.base_fee_msat),
            opt(r.fee_rate_ppm),
            opt(r.disabled),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Groups canonical rows by snapshot id and builds one graph per id,
/// ordered by snapshot id.
pub fn graphs_from_rows(rows: &[CanonicalRow], opts: &LoadOptions) -> Result<Vec<SnapshotGraph>> {
    let mut grouped: BTreeMap<&str, (Vec<DirectedChannelEdge>, Vec<NodeId>)> = BTreeMap::new();
    for r in rows {
        let entry = grouped.entry(r.snapshot_id.as_str()).or_default();
        if r.is_isolated_marker() {
            entry.1.push(r.src.clone());
        } else {
            entry.0.push(DirectedChannelEdge {
                channel_id: r.channel_id.clone(),
                src: r.src.clone(),
                trg: r.trg.clone(),
                capacity_sat: r.capacity_sat.unwrap_or(0),
                policy: FeePolicy {
                    base_fee_msat: r.base_fee_msat.unwrap_or(0),
                    fee_rate_ppm: r.fee_rate_ppm.unwrap_or(0),
                    disabled: r.disabled.unwrap_or(0) == 1,
                },
            });
        }
    }
    grouped
        .into_iter()
        .map(|(id, (edges, isolated))| {
            SnapshotGraph::from_edges(id, &edges, &isolated, opts.min_capacity_sat, opts.keep_disabled)
        })
        .collect()
}

fn is_json(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Loads every snapshot contained in one file (canonical CSV or gossip JSON).
pub fn load_snapshot_file(path: &Path, opts: &LoadOptions) -> Result<Vec<SnapshotGraph>> {
    let rows = if is_json(path) {
        convert_gossip_dump(path, opts.policy_convention)?
    } else {
        read_canonical_rows(path)?
    };
    graphs_from_rows(&rows, opts)
}

/// Loads a file holding exactly one snapshot.
pub fn load_snapshot(path: &Path, opts: &LoadOptions) -> Result<SnapshotGraph> {
    let mut graphs = load_snapshot_file(path, opts)?;
    match graphs.len() {
        1 => Ok(graphs.pop().unwrap()),
        0 => Err(Error::Validation(format!("{}: no snapshot rows", path.display()))),
        n => Err(Error::Validation(format!(
            "{}: contains {n} snapshots; use load_snapshots",
            path.display()
        ))),
    }
}

/// Loads all snapshots from a file or from every `.csv`/`.json` file of a
/// directory (files in name order, snapshots within a file by id).
pub fn load_snapshots(path: &Path, opts: &LoadOptions) -> Result<Vec<SnapshotGraph>> {
    if !path.is_dir() {
        return load_snapshot_file(path, opts);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("csv") || e.eq_ignore_ascii_case("json"))
        })
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        out.extend(load_snapshot_file(&f, opts)?);
    }
    if out.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no snapshot files found", path.display())));
    }
    Ok(out)
}

// --- gossip dump -----------------------------------------------------------

fn num_or_string<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        N(u64),
        S(String),
    }
    match Raw::deserialize(d)? {
        Raw::N(n) => Ok(n),
        Raw::S(s) => s.trim().parse().map_err(serde::de::Error::custom),
    }
}

#[derive(Debug, Deserialize)]
struct GossipPolicy {
    #[serde(deserialize_with = "num_or_string")]
    fee_base_msat: u64,
    #[serde(deserialize_with = "num_or_string")]
    fee_rate_milli_msat: u64,
    #[serde(default)]
    disabled: bool,
}

#[derive(Debug, Deserialize)]
struct GossipEdge {
    #[serde(deserialize_with = "channel_id_string")]
    channel_id: String,
    node1_pub: String,
    node2_pub: String,
    #[serde(deserialize_with = "num_or_string")]
    capacity: u64,
    node1_policy: Option<GossipPolicy>,
    node2_policy: Option<GossipPolicy>,
}

fn channel_id_string<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    match v {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(serde::de::Error::custom(format!("bad channel_id {other}"))),
    }
}

#[derive(Debug, Deserialize)]
struct GossipNode {
    pub_key: String,
    #[allow(dead_code)]
    #[serde(default)]
    alias: String,
}

#[derive(Debug, Deserialize)]
struct GossipDump {
    #[serde(default)]
    nodes: Vec<GossipNode>,
    edges: Vec<GossipEdge>,
}

/// Converts a node-client graph dump into canonical rows.
///
/// `node1_policy` governs the direction departing `node1`. A missing policy
/// yields a disabled row. The snapshot id is the file stem. Nodes listed in
/// `nodes` without any channel are emitted as isolated-node rows.
pub fn convert_gossip_dump(path: &Path, convention: PolicyConvention) -> Result<Vec<CanonicalRow>> {
    let dump: GossipDump = serde_json::from_reader(open(path)?)
        .map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))?;
    let snapshot_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("snapshot")
        .to_string();
    Ok(gossip_rows(&snapshot_id, &dump, convention))
}

fn gossip_rows(snapshot_id: &str, dump: &GossipDump, convention: PolicyConvention) -> Vec<CanonicalRow> {
    let mut rows = Vec::with_capacity(dump.edges.len() * 2);
    let mut seen: HashSet<&str> = HashSet::new();
    for e in &dump.edges {
        seen.insert(&e.node1_pub);
        seen.insert(&e.node2_pub);
        let (p12, p21) = match convention {
            PolicyConvention::Source => (&e.node1_policy, &e.node2_policy),
            PolicyConvention::Target => (&e.node2_policy, &e.node1_policy),
        };
        for (src, trg, policy) in [(&e.node1_pub, &e.node2_pub, p12), (&e.node2_pub, &e.node1_pub, p21)] {
            let (base, rate, disabled) = match policy {
                Some(p) => (p.fee_base_msat, p.fee_rate_milli_msat, p.disabled),
                None => (0, 0, true),
            };
            rows.push(CanonicalRow {
                snapshot_id: snapshot_id.into(),
                channel_id: e.channel_id.clone(),
                src: src.clone(),
                trg: trg.clone(),
                capacity_sat: Some(e.capacity),
                base_fee_msat: Some(base),
                fee_rate_ppm: Some(rate),
                disabled: Some(disabled as u8),
            });
        }
    }
    let isolated: BTreeSet<&str> = dump
        .nodes
        .iter()
        .map(|n| n.pub_key.as_str())
        .filter(|k| !seen.contains(k))
        .collect();
    rows.extend(isolated.into_iter().map(|k| CanonicalRow::isolated(snapshot_id, k)));
    rows
}

// --- labels ----------------------------------------------------------------

#[derive(Deserialize)]
struct MerchantRow {
    pub_key: String,
    #[allow(dead_code)]
    #[serde(default)]
    tag: String,
}

#[derive(Deserialize)]
struct EntityRow {
    pub_key: String,
    entity_name: String,
}

/// Reads `pub_key,tag`; duplicates collapse.
pub fn load_merchants(path: &Path) -> Result<HashSet<NodeId>> {
    let rows: Vec<(u64, MerchantRow)> = read_records(path)?;
    Ok(rows.into_iter().map(|(_, r)| r.pub_key).collect())
}

/// Node-to-entity labels. Unmapped nodes are their own singleton entity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EntityMap {
    by_node: HashMap<NodeId, String>,
}

impl EntityMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails if a node is assigned to two different entities.
    pub fn from_pairs<I, A, B>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<NodeId>,
        B: Into<String>,
    {
        let mut by_node = HashMap::new();
        for (node, entity) in pairs {
            let (node, entity) = (node.into(), entity.into());
            if let Some(prev) = by_node.get(&node) {
                if *prev != entity {
                    return Err(Error::Validation(format!(
                        "node {node} mapped to both {prev} and {entity}"
                    )));
                }
            }
            by_node.insert(node, entity);
        }
        Ok(EntityMap { by_node })
    }

    pub fn entity_of<'a>(&'a self, node: &'a str) -> &'a str {
        self.by_node.get(node).map(String::as_str).unwrap_or(node)
    }

    pub fn is_empty(&self) -> bool {
        self.by_node.is_empty()
    }

    pub fn len(&self) -> usize {
        self.by_node.len()
    }

    /// Explicitly labelled members of `entity`, sorted. For an unlabelled
    /// name this is the singleton `{entity}`.
    pub fn members(&self, entity: &str) -> Vec<NodeId> {
        let mut m: Vec<NodeId> = self
            .by_node
            .iter()
            .filter(|(_, e)| e.as_str() == entity)
            .map(|(n, _)| n.clone())
            .collect();
        if m.is_empty() && !self.by_node.contains_key(entity) {
            m.push(entity.to_string());
        }
        m.sort();
        m
    }

    /// Names of explicitly labelled entities, sorted.
    pub fn entity_names(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.by_node.values().collect();
        set.into_iter().cloned().collect()
    }
}

/// Reads `pub_key,entity_name`.
pub fn load_entities(path: &Path) -> Result<EntityMap> {
    let rows: Vec<(u64, EntityRow)> = read_records(path)?;
    EntityMap::from_pairs(rows.into_iter().map(|(_, r)| (r.pub_key, r.entity_name)))
}

// --- edge stream -----------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeStreamEvent {
    pub channel_id: String,
    pub src: NodeId,
    pub trg: NodeId,
    pub capacity_sat: u64,
    pub open_block: u64,
    pub close_block: Option<u64>,
}

/// Reads the channel open/close stream, sorted by `open_block` (stable).
pub fn load_edge_stream(path: &Path) -> Result<Vec<EdgeStreamEvent>> {
    let rows: Vec<(u64, EdgeStreamEvent)> = read_records(path)?;
    let mut out = Vec::with_capacity(rows.len());
    for (line, ev) in rows {
        if let Some(close) = ev.close_block {
            if close < ev.open_block {
                return Err(Error::parse(path, line, "close_block precedes open_block"));
            }
        }
        if ev.src == ev.trg {
            return Err(Error::parse(path, line, "self-loop channel"));
        }
        out.push(ev);
    }
    out.sort_by_key(|e| e.open_block);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
        let p = dir.join(name);
        let mut f = File::create(&p).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        p
    }

    const HEADER: &str = "snapshot_id,channel_id,src,trg,capacity_sat,base_fee_msat,fee_rate_ppm,disabled\n";

    #[test]
    fn malformed_row_names_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "s.csv",
            &format!("{HEADER}d,c1,a,b,100,0,0,0\nd,c1,b,a,abc,0,0,0\n"),
        );
        match read_canonical_rows(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_direction_fails_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "s.csv",
            &format!("{HEADER}d,c1,a,b,100,0,0,0\nd,c1,a,b,100,0,0,0\n"),
        );
        let err = load_snapshot(&p, &LoadOptions { min_capacity_sat: 0, ..Default::default() }).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn loading_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "s.csv",
            &format!("{HEADER}d,c1,a,b,100000,1000,1,0\nd,c1,b,a,100000,0,5,0\nd,,z,,,,,\n"),
        );
        let opts = LoadOptions::default();
        let g1 = load_snapshot(&p, &opts).unwrap();
        let g2 = load_snapshot(&p, &opts).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(g1.node_count(), 3);
        assert_eq!(g1.edges().len(), 2);
    }

    const DUMP: &str = r#"{
      "nodes": [{"pub_key": "a", "alias": "A"}, {"pub_key": "b", "alias": "B"}, {"pub_key": "lonely", "alias": ""}],
      "edges": [{"channel_id": "123", "node1_pub": "a", "node2_pub": "b", "capacity": "100000",
                 "node1_policy": {"fee_base_msat": "1000", "fee_rate_milli_msat": "1", "disabled": false},
                 "node2_policy": null}]
    }"#;

    #[test]
    fn gossip_dump_conversion() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "day1.json", DUMP);
        let rows = convert_gossip_dump(&p, PolicyConvention::Source).unwrap();
        let channel_rows: Vec<_> = rows.iter().filter(|r| !r.channel_id.is_empty()).collect();
        assert_eq!(channel_rows.len(), 2);
        assert_eq!(channel_rows[0].base_fee_msat, Some(1000));
        assert_eq!(channel_rows[0].disabled, Some(0));
        assert_eq!(channel_rows[1].disabled, Some(1));
        assert_eq!(rows.last().unwrap().src, "lonely");
        assert!(rows.iter().all(|r| r.snapshot_id == "day1"));

        let swapped = convert_gossip_dump(&p, PolicyConvention::Target).unwrap();
        assert_eq!(swapped[0].disabled, Some(1));
        assert_eq!(swapped[1].base_fee_msat, Some(1000));
    }

    #[test]
    fn gossip_round_trip_matches_canonical() {
        let dir = tempfile::tempdir().unwrap();
        let json = write(dir.path(), "day1.json", DUMP);
        let csv = write(
            dir.path(),
            "day1.csv",
            &format!("{HEADER}day1,123,a,b,100000,1000,1,0\nday1,123,b,a,100000,0,0,1\nday1,,lonely,,,,,\n"),
        );
        let opts = LoadOptions { min_capacity_sat: 0, ..Default::default() };
        assert_eq!(load_snapshot(&json, &opts).unwrap(), load_snapshot(&csv, &opts).unwrap());

        let rows = convert_gossip_dump(&json, PolicyConvention::Source).unwrap();
        let mut buf = Vec::new();
        write_canonical_rows(&mut buf, &rows).unwrap();
        let out = write(dir.path(), "conv.csv", std::str::from_utf8(&buf).unwrap());
        assert_eq!(read_canonical_rows(&out).unwrap(), rows);
    }

    #[test]
    fn merchants_are_deduplicated() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "m.csv", "pub_key,tag\na,shop\nb,shop\na,exchange\n");
        assert_eq!(load_merchants(&p).unwrap().len(), 2);
    }

    #[test]
    fn empty_entity_file_maps_nodes_to_themselves() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "e.csv", "pub_key,entity_name\n");
        let m = load_entities(&p).unwrap();
        assert!(m.is_empty());
        assert_eq!(m.entity_of("x"), "x");
        assert_eq!(m.members("x"), vec!["x".to_string()]);
    }

    #[test]
    fn conflicting_entity_labels_rejected() {
        assert!(EntityMap::from_pairs([("a", "E1"), ("a", "E2")]).is_err());
        let m = EntityMap::from_pairs([("a", "E1"), ("b", "E1")]).unwrap();
        assert_eq!(m.members("E1"), vec!["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn edge_stream_is_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "s.csv",
            "channel_id,src,trg,capacity_sat,open_block,close_block\nc2,a,b,10,200,\nc1,b,c,10,100,150\n",
        );
        let s = load_edge_stream(&p).unwrap();
        assert_eq!(s[0].channel_id, "c1");
        assert_eq!(s[0].close_block, Some(150));
        assert_eq!(s[1].close_block, None);
    }

    #[test]
    fn edge_stream_rejects_close_before_open() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "s.csv",
            "channel_id,src,trg,capacity_sat,open_block,close_block\nc1,a,b,10,200,100\n",
        );
        assert!(matches!(load_edge_stream(&p), Err(Error::Parse { line: 2, .. })));
    }
}
