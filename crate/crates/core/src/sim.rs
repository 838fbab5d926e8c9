//! Day and experiment orchestration.
//!
//! A *cell* is one (snapshot, run) pair. Each cell owns its balances and
//! derives its random streams from the master seed, so cells can run on any
//! number of workers and still merge to bit-identical results.

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, NodeIdx, SnapshotGraph};
use crate::ingest::EntityMap;
use crate::router::{PaymentOutcome, RouteOptions, Router};
use crate::sampler::{sample_transactions, Transaction};
use crate::seeds::{cell_seed, DaySeeds};
use crate::state::{BalanceState, SimParams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDayStats {
    pub routing_income_msat: u64,
    pub routing_traffic: u64,
    pub sender_fee_msat: u64,
    pub sender_traffic: u64,
}

impl NodeDayStats {
    pub fn add(&mut self, other: &NodeDayStats) {
        self.routing_income_msat += other.routing_income_msat;
        self.routing_traffic += other.routing_traffic;
        self.sender_fee_msat += other.sender_fee_msat;
        self.sender_traffic += other.sender_traffic;
    }
}

/// Hop-count distribution of one or more days.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathLengthStats {
    /// Successful payments per hop count.
    pub histogram: BTreeMap<usize, u64>,
    pub failures: u64,
}

impl PathLengthStats {
    pub fn from_outcomes<'a>(outcomes: impl IntoIterator<Item = &'a PaymentOutcome>) -> Self {
        let mut s = PathLengthStats::default();
        for o in outcomes {
            s.record(o);
        }
        s
    }

    pub fn record(&mut self, o: &PaymentOutcome) {
        if o.is_success() {
            *self.histogram.entry(o.hop_count()).or_default() += 1;
        } else {
            self.failures += 1;
        }
    }

    pub fn merge(&mut self, other: &PathLengthStats) {
        for (&k, &c) in &other.histogram {
            *self.histogram.entry(k).or_default() += c;
        }
        self.failures += other.failures;
    }

    pub fn successes(&self) -> u64 {
        self.histogram.values().sum()
    }

    pub fn total(&self) -> u64 {
        self.successes() + self.failures
    }

    /// Failures over all attempted payments; `None` when nothing was attempted.
    pub fn failure_fraction(&self) -> Option<f64> {
        let t = self.total();
        (t > 0).then(|| self.failures as f64 / t as f64)
    }

    pub fn mean_path_length(&self) -> Option<f64> {
        let s = self.successes();
        (s > 0).then(|| self.histogram.iter().map(|(&k, &c)| k as f64 * c as f64).sum::<f64>() / s as f64)
    }

    /// Share of successful payments with exactly one intermediary (two hops),
    /// over all successes.
    pub fn single_intermediary_fraction(&self) -> Option<f64> {
        let s = self.successes();
        (s > 0).then(|| self.histogram.get(&2).copied().unwrap_or(0) as f64 / s as f64)
    }

    /// Same share, but over routed payments only (direct payments excluded).
    pub fn single_intermediary_fraction_routed(&self) -> Option<f64> {
        let routed: u64 = self.histogram.range(2..).map(|(_, c)| c).sum();
        (routed > 0).then(|| self.histogram.get(&2).copied().unwrap_or(0) as f64 / routed as f64)
    }

    /// Share of successes with exactly `hops` hops.
    pub fn fraction_with_hops(&self, hops: usize) -> Option<f64> {
        let s = self.successes();
        (s > 0).then(|| self.histogram.get(&hops).copied().unwrap_or(0) as f64 / s as f64)
    }
}

/// Result of one simulated day.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DayResult {
    pub snapshot_index: usize,
    pub run: usize,
    /// Indexed by the snapshot's node indices.
    pub stats: Vec<NodeDayStats>,
    pub paths: PathLengthStats,
    pub transactions: Vec<Transaction>,
    /// Kept only when requested; see [`ExperimentOptions::keep_outcomes`].
    pub outcomes: Vec<PaymentOutcome>,
}

impl DayResult {
    pub fn failures(&self) -> u64 {
        self.paths.failures
    }

    pub fn successes(&self) -> u64 {
        self.paths.successes()
    }
}

/// Routes `transactions` in order against `state`, applying each success.
///
/// Nodes set in `blocked` are absent from the graph; payments from or to them
/// fail.
pub fn simulate_transactions(
    graph: &SnapshotGraph,
    params: &SimParams,
    state: &mut BalanceState,
    transactions: &[Transaction],
    blocked: Option<&[bool]>,
    router: &mut Router,
) -> Result<(Vec<NodeDayStats>, Vec<PaymentOutcome>)> {
    let opts = RouteOptions::from(params);
    let mut stats = vec![NodeDayStats::default(); graph.node_count()];
    let mut outcomes = Vec::with_capacity(transactions.len());
    for tx in transactions {
        let out = router.cheapest_path(graph, state, tx, &opts, blocked);
        if out.is_success() {
            state.apply_payment(graph, &out.edges, tx.amount_sat, params.ignore_depletion)?;
            for &v in out.intermediaries() {
                stats[v].routing_traffic += 1;
            }
            for &(v, fee) in &out.credits {
                stats[v].routing_income_msat += fee;
            }
            let sender = &mut stats[tx.sender];
            sender.sender_traffic += 1;
            sender.sender_fee_msat += out.total_fee_msat;
        }
        outcomes.push(out);
    }
    Ok((stats, outcomes))
}

/// Simulates one day: fresh balances, sampled transactions, sequential routing.
pub fn simulate_day(graph: &SnapshotGraph, params: &SimParams, seeds: DaySeeds) -> Result<DayResult> {
    simulate_cell(graph, params, seeds, None, 0, 0, true, &mut Router::new())
}

#[allow(clippy::too_many_arguments)]
fn simulate_cell(
    graph: &SnapshotGraph,
    params: &SimParams,
    seeds: DaySeeds,
    blocked: Option<&[bool]>,
    snapshot_index: usize,
    run: usize,
    keep_outcomes: bool,
    router: &mut Router,
) -> Result<DayResult> {
    let mut state = BalanceState::init(graph, &mut seeds.balance_rng());
    let transactions = sample_transactions(graph, params, &mut seeds.sampling_rng())?;
    let (stats, outcomes) = simulate_transactions(graph, params, &mut state, &transactions, blocked, router)?;
    let paths = PathLengthStats::from_outcomes(&outcomes);
    Ok(DayResult {
        snapshot_index,
        run,
        stats,
        paths,
        transactions,
        outcomes: if keep_outcomes { outcomes } else { Vec::new() },
    })
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentOptions {
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    pub keep_outcomes: bool,
    /// Nodes removed from every snapshot; transactions are still sampled on
    /// the full graph so they match the baseline.
    pub removed_nodes: Option<HashSet<NodeId>>,
    /// When set, cells not yet started are skipped and the call returns
    /// [`Error::Interrupted`] together with no partial result; use
    /// [`run_experiment_partial`] to keep completed cells.
    pub cancel: Option<Arc<AtomicBool>>,
}

/// Per-cell results of a runs x snapshots grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateResult {
    pub params: SimParams,
    pub snapshot_ids: Vec<String>,
    /// Node ids of every snapshot, aligned with `DayResult::stats`.
    pub node_ids: Vec<Arc<Vec<NodeId>>>,
    /// Cells in (snapshot, run) order.
    pub cells: Vec<DayResult>,
}

/// Mean statistics of a node or entity over the cells it appears in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStats {
    pub routing_income_sat: f64,
    pub routing_traffic: f64,
    pub sender_fee_sat: f64,
    pub sender_traffic: f64,
    pub cells: usize,
}

impl MeanStats {
    fn accumulate(&mut self, s: &NodeDayStats) {
        self.routing_income_sat += s.routing_income_msat as f64 / 1_000.0;
        self.routing_traffic += s.routing_traffic as f64;
        self.sender_fee_sat += s.sender_fee_msat as f64 / 1_000.0;
        self.sender_traffic += s.sender_traffic as f64;
        self.cells += 1;
    }

    fn finish(&mut self) {
        if self.cells > 0 {
            let n = self.cells as f64;
            self.routing_income_sat /= n;
            self.routing_traffic /= n;
            self.sender_fee_sat /= n;
            self.sender_traffic /= n;
        }
    }
}

impl AggregateResult {
    pub fn cell(&self, snapshot_index: usize, run: usize) -> Option<&DayResult> {
        self.cells.iter().find(|c| c.snapshot_index == snapshot_index && c.run == run)
    }

    /// Node id -> stats of one cell.
    pub fn cell_stats(&self, cell: &DayResult) -> BTreeMap<NodeId, NodeDayStats> {
        let ids = &self.node_ids[cell.snapshot_index];
        ids.iter().cloned().zip(cell.stats.iter().copied()).collect()
    }

    /// Per-node means; a node contributes only in cells whose snapshot contains it.
    pub fn mean_node_stats(&self) -> BTreeMap<NodeId, MeanStats> {
        let mut out: BTreeMap<NodeId, MeanStats> = BTreeMap::new();
        for cell in &self.cells {
            for (id, s) in self.node_ids[cell.snapshot_index].iter().zip(&cell.stats) {
                out.entry(id.clone()).or_default().accumulate(s);
            }
        }
        out.values_mut().for_each(MeanStats::finish);
        out
    }

    /// Per-entity means of the summed member statistics, over the cells where
    /// at least one member is present.
    pub fn mean_entity_stats(&self, entities: &EntityMap) -> BTreeMap<String, MeanStats> {
        let mut out: BTreeMap<String, MeanStats> = BTreeMap::new();
        for cell in &self.cells {
            let per_entity = aggregate_entities(&self.cell_stats(cell), entities);
            for (name, s) in per_entity {
                out.entry(name).or_default().accumulate(&s);
            }
        }
        out.values_mut().for_each(MeanStats::finish);
        out
    }

    pub fn path_stats(&self) -> PathLengthStats {
        let mut s = PathLengthStats::default();
        for c in &self.cells {
            s.merge(&c.paths);
        }
        s
    }

    pub fn failure_fraction(&self) -> Option<f64> {
        self.path_stats().failure_fraction()
    }

    pub fn mean_path_length(&self) -> Option<f64> {
        self.path_stats().mean_path_length()
    }

    /// Nodes ordered by decreasing mean routing income (ties by id).
    pub fn income_ranking(&self) -> Vec<(NodeId, MeanStats)> {
        let mut v: Vec<_> = self.mean_node_stats().into_iter().collect();
        v.sort_by(|a, b| b.1.routing_income_sat.total_cmp(&a.1.routing_income_sat).then_with(|| a.0.cmp(&b.0)));
        v
    }
}

/// Sums node statistics per entity.
pub fn aggregate_entities(stats: &BTreeMap<NodeId, NodeDayStats>, entities: &EntityMap) -> BTreeMap<String, NodeDayStats> {
    let mut out: BTreeMap<String, NodeDayStats> = BTreeMap::new();
    for (node, s) in stats {
        out.entry(entities.entity_of(node).to_string()).or_default().add(s);
    }
    out
}

fn removal_masks(snapshots: &[SnapshotGraph], removed: &Option<HashSet<NodeId>>) -> Vec<Option<Vec<bool>>> {
    snapshots.iter().map(|g| removed.as_ref().map(|r| g.node_mask(r))).collect()
}

fn pool(workers: usize) -> Result<Option<rayon::ThreadPool>> {
    if workers == 0 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map(Some)
        .map_err(|e| Error::InvalidInput(format!("cannot start {workers} workers: {e}")))
}

pub(crate) fn run_parallel<T: Send, F>(workers: usize, items: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> T + Sync + Send,
{
    let work = || (0..items).into_par_iter().map(&f).collect::<Vec<T>>();
    Ok(match pool(workers)? {
        Some(p) => p.install(work),
        None => work(),
    })
}

/// Runs `params.runs` repetitions over every snapshot. Snapshot merchant flags
/// must already be set.
pub fn run_experiment(snapshots: &[SnapshotGraph], params: &SimParams, opts: &ExperimentOptions) -> Result<AggregateResult> {
    let (result, complete) = run_experiment_partial(snapshots, params, opts)?;
    if !complete {
        return Err(Error::Interrupted);
    }
    Ok(result)
}

/// Like [`run_experiment`] but returns the cells finished before a
/// cancellation, with a flag telling whether the grid is complete.
pub fn run_experiment_partial(
    snapshots: &[SnapshotGraph],
    params: &SimParams,
    opts: &ExperimentOptions,
) -> Result<(AggregateResult, bool)> {
    params.validate()?;
    if snapshots.is_empty() {
        return Err(Error::InvalidInput("at least one snapshot is required".into()));
    }
    let masks = removal_masks(snapshots, &opts.removed_nodes);
    let cells: Vec<(usize, usize)> =
        (0..snapshots.len()).flat_map(|s| (0..params.runs).map(move |r| (s, r))).collect();
    let cancelled = || opts.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed));

    let results = run_parallel(opts.workers, cells.len(), |i| {
        if cancelled() {
            return None;
        }
        let (s, r) = cells[i];
        let seeds = DaySeeds::from_cell(cell_seed(params.seed, r, s));
        let mut router = Router::new();
        Some(simulate_cell(&snapshots[s], params, seeds, masks[s].as_deref(), s, r, opts.keep_outcomes, &mut router))
    })?;

    let mut out = Vec::with_capacity(results.len());
    let mut complete = true;
    for r in results {
        match r {
            Some(day) => out.push(day?),
            None => complete = false,
        }
    }
    Ok((
        AggregateResult {
            params: params.clone(),
            snapshot_ids: snapshots.iter().map(|g| g.snapshot_id().to_string()).collect(),
            node_ids: snapshots.iter().map(|g| Arc::new(g.nodes().to_vec())).collect(),
            cells: out,
        },
        complete,
    ))
}

/// Re-runs the baseline day of a cell, keeping its outcomes, together with the
/// balance state it started from.
pub fn replay_cell(graph: &SnapshotGraph, params: &SimParams, snapshot_index: usize, run: usize) -> Result<(DayResult, BalanceState)> {
    let seeds = DaySeeds::from_cell(cell_seed(params.seed, run, snapshot_index));
    let initial = BalanceState::init(graph, &mut seeds.balance_rng());
    let day = simulate_cell(graph, params, seeds, None, snapshot_index, run, true, &mut Router::new())?;
    Ok((day, initial))
}

/// Convenience for tests and examples: node index -> id lookup of a cell.
pub fn node_stats_by_id(graph: &SnapshotGraph, stats: &[NodeDayStats]) -> BTreeMap<NodeId, NodeDayStats> {
    (0..graph.node_count()).map(|v: NodeIdx| (graph.node_id(v).to_string(), stats[v])).collect()
}
