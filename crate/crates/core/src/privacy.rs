//! Exposure of payment endpoints to intermediaries, and routing along
//! deliberately longer paths that stay cheap.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeIdx, NodeIdx, SnapshotGraph};
use crate::router::{path_cost, traversal_fee, PaymentOutcome, PaymentStatus, RouteOptions, Router};
use crate::sampler::Transaction;
use crate::seeds::{derive_seed, rng_from};
use crate::sim::{replay_cell, run_parallel, PathLengthStats};
use crate::state::{BalanceState, SimParams};

/// Share of successful payments with exactly one intermediary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleHopFraction {
    /// Over all successful payments, direct ones included.
    pub all_successes: Option<f64>,
    /// Over successful payments with at least one intermediary.
    pub routed_only: Option<f64>,
}

pub fn single_hop_fraction<'a>(outcomes: impl IntoIterator<Item = &'a PaymentOutcome>) -> SingleHopFraction {
    single_hop_from_stats(&PathLengthStats::from_outcomes(outcomes))
}

pub fn single_hop_from_stats(stats: &PathLengthStats) -> SingleHopFraction {
    SingleHopFraction {
        all_successes: stats.single_intermediary_fraction(),
        routed_only: stats.single_intermediary_fraction_routed(),
    }
}

/// Hop-count distribution of successful payments as `(hops, fraction)`.
pub fn hop_count_distribution(stats: &PathLengthStats) -> Vec<(usize, f64)> {
    let total = stats.successes();
    if total == 0 {
        return Vec::new();
    }
    stats.histogram.iter().map(|(&h, &c)| (h, c as f64 / total as f64)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityCurve {
    pub amount_sat: u64,
    /// `(d, fraction of nodes with more than d channels of capacity >= amount)`.
    pub points: Vec<(usize, f64)>,
}

pub fn plausibility_curve(graph: &SnapshotGraph, amount_sat: u64, thresholds: &[usize]) -> PlausibilityCurve {
    let n = graph.node_count();
    let mut qualifying = vec![0usize; n];
    for c in graph.channels().iter().filter(|c| c.capacity_sat >= amount_sat) {
        qualifying[c.node_a] += 1;
        qualifying[c.node_b] += 1;
    }
    let points = thresholds
        .iter()
        .map(|&d| {
            let frac = if n == 0 {
                0.0
            } else {
                qualifying.iter().filter(|&&k| k > d).count() as f64 / n as f64
            };
            (d, frac)
        })
        .collect();
    PlausibilityCurve { amount_sat, points }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub target_length: usize,
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub elite_count: usize,
    /// Fitness penalty per hop of deviation from the target length.
    pub length_penalty_msat: u64,
    pub seed: u64,
}

impl GaParams {
    pub fn new(target_length: usize, seed: u64) -> Self {
        GaParams {
            target_length,
            population_size: 50,
            generations: 100,
            tournament_size: 3,
            elite_count: 1,
            length_penalty_msat: 1_000_000_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_length == 0 {
            return Err(Error::InvalidInput("target length must be at least 1".into()));
        }
        if self.population_size < 2 {
            return Err(Error::InvalidInput("population must hold at least 2 paths".into()));
        }
        if self.tournament_size == 0 || self.elite_count >= self.population_size {
            return Err(Error::InvalidInput("tournament size must be positive and elites fewer than the population".into()));
        }
        Ok(())
    }
}

struct Evaluator<'a> {
    graph: &'a SnapshotGraph,
    state: &'a BalanceState,
    opts: &'a RouteOptions,
    recipient: NodeIdx,
}

impl Evaluator<'_> {
    /// Cheapest usable edge from `u` to `v`.
    fn hop(&self, u: NodeIdx, v: NodeIdx) -> Option<(EdgeIdx, u64)> {
        self.graph
            .out_edges(u)
            .iter()
            .copied()
            .filter(|&e| {
                let edge = self.graph.edge(e);
                edge.trg == v && self.state.usable(edge, self.opts.amount_sat, self.opts.ignore_depletion)
            })
            .map(|e| (e, traversal_fee(self.graph, e, self.recipient, self.opts)))
            .min_by_key(|&(e, fee)| (fee, e))
    }

    fn edges(&self, path: &[NodeIdx]) -> Option<Vec<EdgeIdx>> {
        path.windows(2).map(|w| self.hop(w[0], w[1]).map(|h| h.0)).collect()
    }

    fn cost(&self, path: &[NodeIdx]) -> u64 {
        path.windows(2)
            .map(|w| self.hop(w[0], w[1]).expect("genomes stay feasible").1)
            .sum()
    }

    /// Nodes `w` off the path with usable edges `u -> w -> v`.
    fn detours(&self, path: &[NodeIdx], u: NodeIdx, v: NodeIdx) -> Vec<NodeIdx> {
        let mut out: Vec<NodeIdx> = self
            .graph
            .out_edges(u)
            .iter()
            .map(|&e| self.graph.edge(e))
            .filter(|e| self.state.usable(e, self.opts.amount_sat, self.opts.ignore_depletion))
            .map(|e| e.trg)
            .filter(|w| !path.contains(w))
            .collect();
        out.sort_unstable();
        out.dedup();
        out.retain(|&w| self.hop(w, v).is_some());
        out
    }

    fn insert<R: Rng>(&self, path: &[NodeIdx], rng: &mut R) -> Option<Vec<NodeIdx>> {
        let mut slots: Vec<usize> = (0..path.len() - 1).collect();
        slots.shuffle(rng);
        for i in slots {
            let ws = self.detours(path, path[i], path[i + 1]);
            if let Some(&w) = ws.choose(rng) {
                let mut p = path.to_vec();
                p.insert(i + 1, w);
                return Some(p);
            }
        }
        None
    }

    fn remove<R: Rng>(&self, path: &[NodeIdx], rng: &mut R) -> Option<Vec<NodeIdx>> {
        let slots: Vec<usize> = (1..path.len().saturating_sub(1))
            .filter(|&i| self.hop(path[i - 1], path[i + 1]).is_some())
            .collect();
        slots.choose(rng).map(|&i| {
            let mut p = path.to_vec();
            p.remove(i);
            p
        })
    }

    fn mutate<R: Rng>(&self, path: &[NodeIdx], target: usize, rng: &mut R) -> Vec<NodeIdx> {
        let hops = path.len() - 1;
        let p_insert = match hops.cmp(&target) {
            std::cmp::Ordering::Less => 0.8,
            std::cmp::Ordering::Greater => 0.2,
            std::cmp::Ordering::Equal => 0.5,
        };
        let first_insert = rng.gen_bool(p_insert);
        let attempt = |ins: bool, rng: &mut R| if ins { self.insert(path, rng) } else { self.remove(path, rng) };
        attempt(first_insert, rng)
            .or_else(|| attempt(!first_insert, rng))
            .unwrap_or_else(|| path.to_vec())
    }
}

#[derive(Clone, Debug)]
struct Individual {
    path: Vec<NodeIdx>,
    cost: u64,
    fitness: u128,
}

impl Individual {
    fn new(path: Vec<NodeIdx>, ev: &Evaluator, ga: &GaParams) -> Self {
        let cost = ev.cost(&path);
        let dev = (path.len() - 1).abs_diff(ga.target_length) as u128;
        let fitness = cost as u128 + dev * ga.length_penalty_msat as u128;
        Individual { path, cost, fitness }
    }

    fn better(&self, other: &Individual) -> bool {
        (self.fitness, &self.path) < (other.fitness, &other.path)
    }
}

/// Cheapest path found with exactly `ga.target_length` hops, grown from the
/// cheapest path by detour insertions and removals.
///
/// Fails when the pair has no route at all or no exact-length path was seen
/// within the generation budget.
pub fn lengthened_path(
    graph: &SnapshotGraph,
    state: &BalanceState,
    tx: &Transaction,
    opts: &RouteOptions,
    ga: &GaParams,
    router: &mut Router,
) -> Result<PaymentOutcome> {
    ga.validate()?;
    let base = router.cheapest_path(graph, state, tx, opts, None);
    if !base.is_success() {
        return Ok(PaymentOutcome::failed(*tx));
    }
    Ok(evolve(graph, state, tx, opts, ga, &base).unwrap_or_else(|| PaymentOutcome::failed(*tx)))
}

fn evolve(
    graph: &SnapshotGraph,
    state: &BalanceState,
    tx: &Transaction,
    opts: &RouteOptions,
    ga: &GaParams,
    base: &PaymentOutcome,
) -> Option<PaymentOutcome> {
    let ev = Evaluator {
        graph,
        state,
        opts,
        recipient: tx.recipient,
    };
    let target = ga.target_length;
    if base.hop_count() == target {
        return Some(base.clone());
    }
    let mut rng = rng_from(ga.seed);
    let seed = Individual::new(base.path.clone(), &ev, ga);
    let spread = base.hop_count().abs_diff(target).max(1);

    let mut best: Option<Individual> = None;
    let consider = |ind: &Individual, best: &mut Option<Individual>| {
        if ind.path.len() - 1 == target && best.as_ref().is_none_or(|b| ind.better(b)) {
            *best = Some(ind.clone());
        }
    };

    let mut population = vec![seed.clone()];
    while population.len() < ga.population_size {
        let mut path = seed.path.clone();
        for _ in 0..rng.gen_range(1..=spread) {
            path = ev.mutate(&path, target, &mut rng);
        }
        population.push(Individual::new(path, &ev, ga));
    }
    population.iter().for_each(|i| consider(i, &mut best));

    for _ in 0..ga.generations {
        population.sort_by(|a, b| (a.fitness, &a.path).cmp(&(b.fitness, &b.path)));
        let mut next: Vec<Individual> = population[..ga.elite_count].to_vec();
        while next.len() < ga.population_size {
            let parent = (0..ga.tournament_size)
                .map(|_| &population[rng.gen_range(0..population.len())])
                .reduce(|a, b| if b.better(a) { b } else { a })
                .expect("tournament is non-empty");
            let child = Individual::new(ev.mutate(&parent.path, target, &mut rng), &ev, ga);
            consider(&child, &mut best);
            next.push(child);
        }
        population = next;
    }

    let best = best?;
    let edges = ev.edges(&best.path)?;
    let (total_fee_msat, credits) = path_cost(graph, &edges, opts.amount_sat, opts.count_last_hop_fee).ok()?;
    debug_assert_eq!(total_fee_msat, best.cost);
    Some(PaymentOutcome {
        tx: *tx,
        status: PaymentStatus::Success,
        path: best.path,
        edges,
        total_fee_msat,
        credits,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthCost {
    pub length: usize,
    pub attempts: usize,
    pub successes: usize,
    pub mean_cost_sat: Option<f64>,
    pub median_cost_sat: Option<f64>,
}

impl LengthCost {
    pub fn success_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.successes as f64 / self.attempts as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct CostVsLengthOptions {
    pub lengths: Vec<usize>,
    /// Template for the search; target length and seed are set per attempt.
    pub ga: GaParams,
    /// Successful baseline payments taken from each simulated day.
    pub payments_per_cell: usize,
    pub workers: usize,
}

impl Default for CostVsLengthOptions {
    fn default() -> Self {
        CostVsLengthOptions {
            lengths: (1..=6).collect(),
            ga: GaParams::new(1, 0),
            payments_per_cell: 20,
            workers: 0,
        }
    }
}

fn median(sorted: &[u64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2] as f64),
        _ => Some((sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0),
    }
}

/// Sender cost of the cheapest path of each fixed length, for successful
/// baseline payments evaluated at the day's initial balances.
pub fn cost_vs_length(snapshots: &[SnapshotGraph], params: &SimParams, opts: &CostVsLengthOptions) -> Result<Vec<LengthCost>> {
    params.validate()?;
    for &l in &opts.lengths {
        GaParams {
            target_length: l,
            ..opts.ga.clone()
        }
        .validate()?;
    }
    let cells: Vec<(usize, usize)> = (0..snapshots.len()).flat_map(|s| (0..params.runs).map(move |r| (s, r))).collect();
    let replays = run_parallel(opts.workers, cells.len(), |i| {
        let (s, r) = cells[i];
        replay_cell(&snapshots[s], params, s, r)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut jobs: Vec<(usize, usize, Transaction)> = Vec::new();
    for (ci, (day, _)) in replays.iter().enumerate() {
        let picked = day.outcomes.iter().enumerate().filter(|(_, o)| o.is_success()).take(opts.payments_per_cell);
        jobs.extend(picked.map(|(k, o)| (ci, k, o.tx)));
    }

    let route = RouteOptions::from(params);
    let results = run_parallel(opts.workers, jobs.len(), |j| {
        let (ci, k, tx) = jobs[j];
        let (s, r) = cells[ci];
        let initial = &replays[ci].1;
        let mut router = Router::new();
        let base = router.cheapest_path(&snapshots[s], initial, &tx, &route, None);
        opts.lengths
            .iter()
            .map(|&l| {
                if !base.is_success() {
                    return None;
                }
                let ga = GaParams {
                    target_length: l,
                    seed: derive_seed(opts.ga.seed, &[s as u64, r as u64, k as u64, l as u64]),
                    ..opts.ga.clone()
                };
                evolve(&snapshots[s], initial, &tx, &route, &ga, &base).map(|o| o.total_fee_msat)
            })
            .collect::<Vec<Option<u64>>>()
    })?;

    let mut per_length: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    Ok(opts
        .lengths
        .iter()
        .enumerate()
        .map(|(li, &l)| {
            let costs = per_length.entry(l).or_default();
            costs.extend(results.iter().filter_map(|r| r[li]));
            costs.sort_unstable();
            let sats: Vec<f64> = costs.iter().map(|&c| c as f64 / 1_000.0).collect();
            LengthCost {
                length: l,
                attempts: results.len(),
                successes: costs.len(),
                mean_cost_sat: (!sats.is_empty()).then(|| sats.iter().sum::<f64>() / sats.len() as f64),
                median_cost_sat: median(costs).map(|m| m / 1_000.0),
            }
        })
        .collect())
}
