//! CSV outputs. Headers are fixed and row order never depends on hash order.
//!
//! Satoshi amounts carry one decimal; millisatoshi totals are rounded half up
//! in integer arithmetic.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::competition::{GroupRow, TargetSummary};
use crate::error::{Error, Result};
use crate::netstats::centrality::CentralityCorrelation;
use crate::netstats::structure::StructureSummary;
use crate::netstats::temporal::{AttachmentPoint, Lifetimes, LocalityHistogram};
use crate::privacy::{LengthCost, PlausibilityCurve};
use crate::profitability::{DepletionRatio, EntityReport, RemovalFailure, SweepPoint};
use crate::sim::AggregateResult;

pub const NODE_STATS_HEADER: [&str; 7] =
    ["snapshot_id", "run", "node", "routing_income_sat", "routing_traffic", "sender_fee_sat", "sender_traffic"];
pub const SUMMARY_HEADER: [&str; 5] = ["snapshot_id", "run", "failures", "success", "mean_path_length"];
pub const TRANSACTIONS_HEADER: [&str; 6] = ["run", "snapshot_id", "tx_index", "sender", "recipient", "amount_sat"];
pub const REMOVAL_HEADER: [&str; 6] = ["target", "tau_x", "phi_x", "failure_ratio", "beta_star_sat", "gain_sat"];
pub const GROUP_HEADER: [&str; 5] = ["band", "members", "mean_failure_ratio", "mean_beta_star_sat", "mean_gain_sat"];
pub const ENTITY_REPORT_HEADER: [&str; 14] = [
    "entity",
    "capacity_sat",
    "capacity_fraction",
    "capacity_source",
    "advertised_fee_sat",
    "income_per_tx_sat",
    "daily_income_sat",
    "daily_traffic",
    "annual_roi",
    "fee_ratio",
    "economical_fee_sat",
    "rank_roi",
    "rank_fee",
    "rank_traffic",
];
pub const SWEEP_HEADER: [&str; 7] =
    ["value", "entity", "income_sat", "traffic", "income_per_tx_sat", "failure_fraction", "mean_path_len"];
pub const DEPLETION_HEADER: [&str; 4] = ["entity", "income_sat", "optimistic_income_sat", "ratio"];
pub const ENTITY_REMOVAL_HEADER: [&str; 2] = ["removed", "failure_fraction"];
pub const PRIVACY_HEADER: [&str; 3] = ["epsilon", "hop_count", "fraction"];
pub const SINGLE_HOP_HEADER: [&str; 3] = ["epsilon", "single_hop_all", "single_hop_routed"];
pub const PLAUSIBILITY_HEADER: [&str; 3] = ["amount_sat", "threshold", "fraction"];
pub const COST_VS_LENGTH_HEADER: [&str; 4] = ["L", "mean_cost_sat", "median_cost_sat", "success_rate"];
pub const GRAPH_METRICS_HEADER: [&str; 7] = ["window", "N", "E", "avg_degree", "eff_diameter", "cpd", "transitivity"];
pub const CORRELATIONS_HEADER: [&str; 6] = ["kind", "statistic", "method", "a", "b", "value"];
pub const LOCALITY_HEADER: [&str; 3] = ["distance", "count", "fraction"];
pub const LIFETIME_HEADER: [&str; 4] = ["channel_id", "blocks", "censored", "merchant"];
pub const ATTACHMENT_HEADER: [&str; 4] = ["degree", "hits", "exposure", "probability"];
pub const DENSIFICATION_HEADER: [&str; 3] = ["exponent", "intercept", "r_squared"];

/// Millisatoshi as satoshi with one decimal, rounded half up.
pub fn sat_string(msat: u64) -> String {
    let tenths = (msat as u128 + 50) / 100;
    format!("{}.{}", tenths / 10, tenths % 10)
}

pub fn fixed(x: f64, decimals: usize) -> String {
    format!("{x:.decimals$}")
}

pub fn opt(x: Option<f64>, decimals: usize) -> String {
    x.map(|v| fixed(v, decimals)).unwrap_or_default()
}

/// Writes a header and rows to `path`.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// One row per node with any activity, per cell, cells in grid order.
pub fn write_node_stats(path: &Path, agg: &AggregateResult) -> Result<()> {
    let rows = agg.cells.iter().flat_map(|c| {
        let ids = &agg.node_ids[c.snapshot_index];
        let snap = &agg.snapshot_ids[c.snapshot_index];
        c.stats
            .iter()
            .enumerate()
            .filter(|(_, s)| s.routing_traffic > 0 || s.sender_traffic > 0 || s.routing_income_msat > 0)
            .map(move |(v, s)| {
                vec![
                    snap.clone(),
                    c.run.to_string(),
                    ids[v].clone(),
                    sat_string(s.routing_income_msat),
                    s.routing_traffic.to_string(),
                    sat_string(s.sender_fee_msat),
                    s.sender_traffic.to_string(),
                ]
            })
    });
    write_csv(path, &NODE_STATS_HEADER, rows)
}

pub fn write_summary(path: &Path, agg: &AggregateResult) -> Result<()> {
    let rows = agg.cells.iter().map(|c| {
        vec![
            agg.snapshot_ids[c.snapshot_index].clone(),
            c.run.to_string(),
            c.failures().to_string(),
            c.successes().to_string(),
            opt(c.paths.mean_path_length(), 4),
        ]
    });
    write_csv(path, &SUMMARY_HEADER, rows)
}

pub fn write_transactions(path: &Path, agg: &AggregateResult) -> Result<()> {
    let rows = agg.cells.iter().flat_map(|c| {
        let ids = &agg.node_ids[c.snapshot_index];
        let snap = &agg.snapshot_ids[c.snapshot_index];
        c.transactions.iter().enumerate().map(move |(i, t)| {
            vec![
                c.run.to_string(),
                snap.clone(),
                i.to_string(),
                ids[t.sender].clone(),
                ids[t.recipient].clone(),
                t.amount_sat.to_string(),
            ]
        })
    });
    write_csv(path, &TRANSACTIONS_HEADER, rows)
}

pub fn write_removal(path: &Path, summaries: &[TargetSummary]) -> Result<()> {
    let rows = summaries.iter().map(|s| {
        vec![
            s.target.label(),
            s.tau_x.to_string(),
            s.phi_x.to_string(),
            opt(s.failure_ratio(), 4),
            fixed(s.beta_star_sat, 1),
            fixed(s.gain_sat, 1),
        ]
    });
    write_csv(path, &REMOVAL_HEADER, rows)
}

pub fn write_groups(path: &Path, groups: &[GroupRow]) -> Result<()> {
    let rows = groups.iter().map(|g| {
        vec![
            g.band.clone(),
            g.members.to_string(),
            opt(g.mean_failure_ratio, 4),
            opt(g.mean_beta_star_sat, 1),
            opt(g.mean_gain_sat, 1),
        ]
    });
    write_csv(path, &GROUP_HEADER, rows)
}

pub fn write_entity_report(path: &Path, rows: &[EntityReport]) -> Result<()> {
    let out = rows.iter().map(|r| {
        vec![
            r.entity.clone(),
            opt(r.capacity_sat, 0),
            opt(r.capacity_fraction, 5),
            r.capacity_source.as_str().to_string(),
            opt(r.advertised_fee_sat, 1),
            opt(r.income_per_tx_sat, 1),
            fixed(r.daily_income_sat, 1),
            fixed(r.daily_traffic, 1),
            opt(r.annual_roi, 6),
            opt(r.fee_ratio, 4),
            opt(r.economical_fee_sat, 1),
            r.rank_roi.to_string(),
            r.rank_fee.to_string(),
            r.rank_traffic.to_string(),
        ]
    });
    write_csv(path, &ENTITY_REPORT_HEADER, out)
}

/// Sweep curves restricted to `entities`, in the given order.
pub fn write_sweep(path: &Path, points: &[SweepPoint], entities: &[String]) -> Result<()> {
    let rows = points.iter().flat_map(|p| {
        entities.iter().map(move |name| {
            let s = p.entities.get(name);
            let income = s.map_or(0.0, |s| s.routing_income_sat);
            let traffic = s.map_or(0.0, |s| s.routing_traffic);
            vec![
                p.value.to_string(),
                name.clone(),
                fixed(income, 1),
                fixed(traffic, 2),
                if traffic > 0.0 { fixed(income / traffic, 1) } else { String::new() },
                opt(p.failure_fraction, 4),
                opt(p.mean_path_length, 4),
            ]
        })
    });
    write_csv(path, &SWEEP_HEADER, rows)
}

pub fn write_depletion(path: &Path, ratios: &BTreeMap<String, DepletionRatio>) -> Result<()> {
    let rows = ratios.iter().map(|(name, r)| {
        vec![name.clone(), fixed(r.income_sat, 1), fixed(r.optimistic_income_sat, 1), fixed(r.ratio, 4)]
    });
    write_csv(path, &DEPLETION_HEADER, rows)
}

/// The baseline appears as the row with an empty `removed` column.
pub fn write_entity_removal(path: &Path, baseline: Option<f64>, rows: &[RemovalFailure]) -> Result<()> {
    let first = std::iter::once(vec![String::new(), opt(baseline, 4)]);
    let rest = rows.iter().map(|r| vec![r.entity.clone(), opt(r.failure_fraction, 4)]);
    write_csv(path, &ENTITY_REMOVAL_HEADER, first.chain(rest))
}

pub fn write_privacy(path: &Path, per_epsilon: &[(f64, Vec<(usize, f64)>)]) -> Result<()> {
    let rows = per_epsilon
        .iter()
        .flat_map(|(eps, dist)| dist.iter().map(move |&(h, f)| vec![fixed(*eps, 2), h.to_string(), fixed(f, 6)]));
    write_csv(path, &PRIVACY_HEADER, rows)
}

pub fn write_single_hop(path: &Path, rows: &[(f64, Option<f64>, Option<f64>)]) -> Result<()> {
    let rows = rows.iter().map(|&(eps, all, routed)| vec![fixed(eps, 2), opt(all, 6), opt(routed, 6)]);
    write_csv(path, &SINGLE_HOP_HEADER, rows)
}

pub fn write_plausibility(path: &Path, curves: &[PlausibilityCurve]) -> Result<()> {
    let rows = curves
        .iter()
        .flat_map(|c| c.points.iter().map(move |&(d, f)| vec![c.amount_sat.to_string(), d.to_string(), fixed(f, 6)]));
    write_csv(path, &PLAUSIBILITY_HEADER, rows)
}

pub fn write_cost_vs_length(path: &Path, rows: &[LengthCost]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.length.to_string(),
            opt(r.mean_cost_sat, 1),
            opt(r.median_cost_sat, 1),
            fixed(r.success_rate(), 4),
        ]
    });
    write_csv(path, &COST_VS_LENGTH_HEADER, rows)
}

pub fn write_graph_metrics(path: &Path, rows: &[(String, StructureSummary)]) -> Result<()> {
    let rows = rows.iter().map(|(w, s)| {
        vec![
            w.clone(),
            s.nodes.to_string(),
            s.edges.to_string(),
            opt(s.average_degree, 4),
            opt(s.effective_diameter, 4),
            opt(s.cpd, 6),
            opt(s.transitivity, 6),
        ]
    });
    write_csv(path, &GRAPH_METRICS_HEADER, rows)
}

/// One correlation value.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationRow {
    pub kind: String,
    pub statistic: String,
    pub method: String,
    pub a: String,
    pub b: String,
    pub value: Option<f64>,
}

pub fn write_correlations(path: &Path, rows: &[CorrelationRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![r.kind.clone(), r.statistic.clone(), r.method.clone(), r.a.clone(), r.b.clone(), opt(r.value, 6)]
    });
    write_csv(path, &CORRELATIONS_HEADER, rows)
}

pub fn centrality_rows(rows: &[CentralityCorrelation], epsilon: f64) -> Vec<CorrelationRow> {
    rows.iter()
        .map(|c| CorrelationRow {
            kind: "centrality".into(),
            statistic: c.measure.as_str().into(),
            method: "spearman".into(),
            a: c.snapshot_id.clone(),
            b: fixed(epsilon, 2),
            value: c.spearman,
        })
        .collect()
}

/// Distances in increasing order, then `inf`.
pub fn write_locality(path: &Path, h: &LocalityHistogram) -> Result<()> {
    let total = h.total().max(1) as f64;
    let rows = h
        .distances
        .iter()
        .map(|(d, &c)| (d.to_string(), c))
        .chain(std::iter::once(("inf".to_string(), h.infinite)))
        .map(|(d, c)| vec![d, c.to_string(), fixed(c as f64 / total, 6)]);
    write_csv(path, &LOCALITY_HEADER, rows)
}

pub fn write_lifetimes(path: &Path, l: &Lifetimes) -> Result<()> {
    let rows = l.channels.iter().map(|c| {
        vec![c.channel_id.clone(), c.blocks.to_string(), (c.censored as u8).to_string(), (c.merchant as u8).to_string()]
    });
    write_csv(path, &LIFETIME_HEADER, rows)
}

pub fn write_attachment(path: &Path, points: &[AttachmentPoint]) -> Result<()> {
    let rows = points
        .iter()
        .map(|p| vec![p.degree.to_string(), p.hits.to_string(), p.exposure.to_string(), fixed(p.probability, 6)]);
    write_csv(path, &ATTACHMENT_HEADER, rows)
}
