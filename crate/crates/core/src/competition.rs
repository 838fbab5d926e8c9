//! How much of a router's traffic has a fallback, and how far it could raise
//! its base fee before senders switch to the next cheapest route.
//!
//! For a target `x` (a node or every node of an entity) the baseline day's
//! payments that crossed `x` are re-routed on the graph without `x`. Payments
//! with no alternative count as failures `phi(x)`; the rest yield fee deltas
//! `delta >= 0` against the cheapest route with `x` present. Both routes are
//! computed at the day's initial balances, so deltas reflect topology and fees
//! rather than depletion noise.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, NodeIdx, SnapshotGraph};
use crate::ingest::EntityMap;
use crate::router::{PaymentOutcome, RouteOptions, Router};
use crate::sim::{replay_cell, run_parallel, AggregateResult};
use crate::state::{BalanceState, SimParams};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalAnalysis {
    /// Baseline payments with an intermediary in the target.
    pub tau_x: u64,
    /// Of those, payments with no route once the target is removed.
    pub phi_x: u64,
    /// Extra fee of the cheapest route avoiding the target, per reroutable payment.
    pub deltas_msat: Vec<u64>,
    pub beta_star_msat: u64,
    pub gain_msat: u64,
}

impl RemovalAnalysis {
    pub fn failure_ratio(&self) -> Option<f64> {
        (self.tau_x > 0).then(|| self.phi_x as f64 / self.tau_x as f64)
    }
}

/// Base-fee increment maximising `beta * |{delta >= beta}|` over the observed
/// delta values; ties go to the smaller increment. Empty input gives `(0, 0)`.
pub fn optimal_base_fee_increment(deltas: &[u64]) -> (u64, u64) {
    let mut sorted = deltas.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut best = (0u64, 0u64);
    let mut i = 0;
    while i < sorted.len() {
        let beta = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == beta {
            j += 1;
        }
        // j values are >= beta.
        let gain = beta.saturating_mul(j as u64);
        if gain > best.1 || (gain == best.1 && beta < best.0) {
            best = (beta, gain);
        }
        i = j;
    }
    best
}

/// Removal impact of `targets` for one baseline day.
///
/// `outcomes` are the baseline payments in order, `initial` the balances the
/// day started from.
pub fn removal_impact(
    graph: &SnapshotGraph,
    initial: &BalanceState,
    outcomes: &[PaymentOutcome],
    targets: &[NodeIdx],
    params: &SimParams,
    router: &mut Router,
) -> Result<RemovalAnalysis> {
    if targets.is_empty() {
        return Err(Error::InvalidInput("removal target set is empty".into()));
    }
    let mut mask = vec![false; graph.node_count()];
    for &t in targets {
        mask[t] = true;
    }
    let opts = RouteOptions::from(params);
    let mut analysis = RemovalAnalysis::default();
    for out in outcomes.iter().filter(|o| o.is_success() && o.intermediaries().iter().any(|&v| mask[v])) {
        analysis.tau_x += 1;
        let with_x = router.cheapest_path(graph, initial, &out.tx, &opts, None);
        let without_x = router.cheapest_path(graph, initial, &out.tx, &opts, Some(&mask));
        if !with_x.is_success() || !without_x.is_success() {
            analysis.phi_x += 1;
            continue;
        }
        analysis.deltas_msat.push(without_x.total_fee_msat - with_x.total_fee_msat);
    }
    let (beta, gain) = optimal_base_fee_increment(&analysis.deltas_msat);
    analysis.beta_star_msat = beta;
    analysis.gain_msat = gain;
    Ok(analysis)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Target {
    Node(NodeId),
    Entity(String),
}

impl Target {
    pub fn label(&self) -> String {
        match self {
            Target::Node(id) => format!("node:{id}"),
            Target::Entity(name) => format!("entity:{name}"),
        }
    }

    pub fn members(&self, entities: &EntityMap) -> Vec<NodeId> {
        match self {
            Target::Node(id) => vec![id.clone()],
            Target::Entity(name) => entities.members(name),
        }
    }

    /// Parses `node:ID` or `entity:NAME`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("node", id)) if !id.is_empty() => Ok(Target::Node(id.into())),
            Some(("entity", name)) if !name.is_empty() => Ok(Target::Entity(name.into())),
            _ => Err(Error::InvalidInput(format!("bad target {s:?}; expected node:ID or entity:NAME"))),
        }
    }
}

/// The `k` nodes with the highest mean routing income, in rank order.
pub fn top_income_targets(baseline: &AggregateResult, k: usize) -> Vec<Target> {
    baseline.income_ranking().into_iter().take(k).map(|(id, _)| Target::Node(id)).collect()
}

/// Removal analysis of one target merged over all cells of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub target: Target,
    pub tau_x: u64,
    pub phi_x: u64,
    /// Mean optimal increment over cells with at least one reroutable payment.
    pub beta_star_sat: f64,
    /// Mean daily gain over cells where the target exists.
    pub gain_sat: f64,
    pub cells: usize,
}

impl TargetSummary {
    pub fn failure_ratio(&self) -> Option<f64> {
        (self.tau_x > 0).then(|| self.phi_x as f64 / self.tau_x as f64)
    }
}

/// Runs the removal analysis for every target on every (snapshot, run) cell
/// of the baseline grid defined by `params`.
pub fn fee_competition(
    snapshots: &[SnapshotGraph],
    params: &SimParams,
    entities: &EntityMap,
    targets: &[Target],
    workers: usize,
) -> Result<Vec<TargetSummary>> {
    params.validate()?;
    let cells: Vec<(usize, usize)> =
        (0..snapshots.len()).flat_map(|s| (0..params.runs).map(move |r| (s, r))).collect();
    let member_ids: Vec<Vec<NodeId>> = targets.iter().map(|t| t.members(entities)).collect();

    let per_cell = run_parallel(workers, cells.len(), |i| -> Result<Vec<Option<RemovalAnalysis>>> {
        let (s, r) = cells[i];
        let graph = &snapshots[s];
        let (day, initial) = replay_cell(graph, params, s, r)?;
        let mut router = Router::new();
        member_ids
            .iter()
            .map(|ids| {
                let idx: Vec<NodeIdx> = ids.iter().filter_map(|id| graph.node_index(id)).collect();
                if idx.is_empty() {
                    return Ok(None);
                }
                removal_impact(graph, &initial, &day.outcomes, &idx, params, &mut router).map(Some)
            })
            .collect()
    })?;

    let mut summaries: Vec<TargetSummary> = targets
        .iter()
        .map(|t| TargetSummary {
            target: t.clone(),
            tau_x: 0,
            phi_x: 0,
            beta_star_sat: 0.0,
            gain_sat: 0.0,
            cells: 0,
        })
        .collect();
    let mut beta_cells = vec![0usize; targets.len()];
    for cell in per_cell {
        for (t, analysis) in cell?.into_iter().enumerate() {
            let Some(a) = analysis else { continue };
            let s = &mut summaries[t];
            s.tau_x += a.tau_x;
            s.phi_x += a.phi_x;
            s.gain_sat += a.gain_msat as f64 / 1_000.0;
            s.cells += 1;
            if !a.deltas_msat.is_empty() {
                s.beta_star_sat += a.beta_star_msat as f64 / 1_000.0;
                beta_cells[t] += 1;
            }
        }
    }
    for (s, &bc) in summaries.iter_mut().zip(&beta_cells) {
        if s.cells > 0 {
            s.gain_sat /= s.cells as f64;
        }
        if bc > 0 {
            s.beta_star_sat /= bc as f64;
        }
    }
    Ok(summaries)
}

/// Income rank bands used to group routers: 1-10, 11-20, 21-50, 51-100, 101-.
pub const RANK_BANDS: [(usize, Option<usize>); 5] = [(1, Some(10)), (11, Some(20)), (21, Some(50)), (51, Some(100)), (101, None)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub band: String,
    pub members: usize,
    /// Mean of per-target `phi/tau` over members with `tau > 0`.
    pub mean_failure_ratio: Option<f64>,
    pub mean_beta_star_sat: Option<f64>,
    pub mean_gain_sat: Option<f64>,
}

/// Averages target summaries within income rank bands. `ranked` pairs each
/// summary with its 1-based income rank.
pub fn group_report(ranked: &[(usize, TargetSummary)]) -> Vec<GroupRow> {
    RANK_BANDS
        .iter()
        .map(|&(lo, hi)| {
            let members: Vec<&TargetSummary> = ranked
                .iter()
                .filter(|(rank, _)| *rank >= lo && hi.is_none_or(|h| *rank <= h))
                .map(|(_, s)| s)
                .collect();
            let ratios: Vec<f64> = members.iter().filter_map(|s| s.failure_ratio()).collect();
            let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            let betas: Vec<f64> = members.iter().map(|s| s.beta_star_sat).collect();
            let gains: Vec<f64> = members.iter().map(|s| s.gain_sat).collect();
            GroupRow {
                band: match hi {
                    Some(h) => format!("{lo}-{h}"),
                    None => format!("{lo}-"),
                },
                members: members.len(),
                mean_failure_ratio: mean(&ratios),
                mean_beta_star_sat: mean(&betas),
                mean_gain_sat: mean(&gains),
            }
        })
        .collect()
}

/// Ranks each summary by the baseline income ranking (targets missing from the
/// ranking are dropped).
pub fn rank_summaries(baseline: &AggregateResult, summaries: &[TargetSummary]) -> Vec<(usize, TargetSummary)> {
    let rank: BTreeMap<NodeId, usize> =
        baseline.income_ranking().into_iter().enumerate().map(|(i, (id, _))| (id, i + 1)).collect();
    summaries
        .iter()
        .filter_map(|s| match &s.target {
            Target::Node(id) => rank.get(id).map(|&r| (r, s.clone())),
            Target::Entity(_) => None,
        })
        .collect()
}
