//! Return on locked capital for router entities, and how income responds to
//! payment value, traffic volume, depletion and entity outages.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, SnapshotGraph};
use crate::ingest::EntityMap;
use crate::sim::{run_experiment, AggregateResult, ExperimentOptions, MeanStats};
use crate::state::{edge_fee, SimParams};

pub const DAYS_PER_YEAR: f64 = 365.0;
pub const DEFAULT_TARGET_ROI: f64 = 0.05;

/// `daily_income * 365 / capacity`; `None` for zero capacity.
pub fn annual_roi(daily_income_sat: f64, capacity_sat: f64) -> Option<f64> {
    (capacity_sat > 0.0).then(|| daily_income_sat * DAYS_PER_YEAR / capacity_sat)
}

/// Fee needed to reach `target_roi`, as `(economical_fee, fee_ratio)`.
///
/// `fee_ratio` is the income required for the target over the actual income;
/// the economical fee rescales the advertised fee by that ratio.
pub fn economical_fee(advertised_fee_sat: f64, capacity_sat: f64, daily_income_sat: f64, target_roi: f64) -> Option<(f64, f64)> {
    if daily_income_sat <= 0.0 {
        return None;
    }
    let required = target_roi * capacity_sat / DAYS_PER_YEAR;
    let ratio = required / daily_income_sat;
    Some((advertised_fee_sat * ratio, ratio))
}

/// How per-edge fees are averaged into one entity fee.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeeWeighting {
    Uniform,
    #[default]
    Capacity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacitySource {
    External,
    ChannelSum,
}

impl CapacitySource {
    pub fn as_str(&self) -> &'static str {
        match self {
            CapacitySource::External => "external",
            CapacitySource::ChannelSum => "channel-sum",
        }
    }
}

/// Mean (over snapshots) of the capacity of channels touching each entity,
/// each channel counted once per entity, plus the mean total network capacity.
pub fn entity_capacities(snapshots: &[SnapshotGraph], entities: &EntityMap) -> (BTreeMap<String, f64>, f64) {
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    let mut total = 0.0;
    for g in snapshots {
        total += g.total_capacity_sat() as f64;
        for c in g.channels() {
            let ea = entities.entity_of(g.node_id(c.node_a));
            let eb = entities.entity_of(g.node_id(c.node_b));
            *sums.entry(ea.to_string()).or_default() += c.capacity_sat as f64;
            if eb != ea {
                *sums.entry(eb.to_string()).or_default() += c.capacity_sat as f64;
            }
        }
    }
    let n = snapshots.len().max(1) as f64;
    sums.values_mut().for_each(|v| *v /= n);
    (sums, total / n)
}

/// Mean forwarding fee (satoshi) at `amount_sat` over each entity's outgoing
/// edges, pooled over all snapshots.
pub fn advertised_fees(
    snapshots: &[SnapshotGraph],
    entities: &EntityMap,
    amount_sat: u64,
    weighting: FeeWeighting,
) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for g in snapshots {
        for e in g.edges().iter().filter(|e| !e.policy.disabled) {
            let w = match weighting {
                FeeWeighting::Uniform => 1.0,
                FeeWeighting::Capacity => g.capacity_of(e) as f64,
            };
            let fee = edge_fee(&e.policy, amount_sat) as f64 / 1_000.0;
            let slot = acc.entry(entities.entity_of(g.node_id(e.src)).to_string()).or_default();
            slot.0 += w * fee;
            slot.1 += w;
        }
    }
    acc.into_iter().filter(|(_, (_, w))| *w > 0.0).map(|(k, (s, w))| (k, s / w)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub min_income_sat: f64,
    pub min_traffic: f64,
    pub target_roi: f64,
    pub fee_weighting: FeeWeighting,
    /// Entity capacities from an outside source; when absent capacities are
    /// summed from the snapshots.
    pub external_capacities: Option<BTreeMap<String, f64>>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            min_income_sat: 50.0,
            min_traffic: 10.0,
            target_roi: DEFAULT_TARGET_ROI,
            fee_weighting: FeeWeighting::Capacity,
            external_capacities: None,
        }
    }
}

/// One row of the entity profitability table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntityReport {
    pub entity: String,
    pub capacity_sat: Option<f64>,
    pub capacity_fraction: Option<f64>,
    pub capacity_source: CapacitySource,
    /// Mean forwarding fee at the simulated amount.
    pub advertised_fee_sat: Option<f64>,
    /// Alternative fee aggregation: simulated income per forwarded payment.
    pub income_per_tx_sat: Option<f64>,
    pub daily_income_sat: f64,
    pub daily_traffic: f64,
    pub annual_roi: Option<f64>,
    pub fee_ratio: Option<f64>,
    pub economical_fee_sat: Option<f64>,
    pub rank_roi: usize,
    pub rank_fee: usize,
    pub rank_traffic: usize,
}

/// Builds the profitability table for entities meeting the income and traffic
/// thresholds, ordered by RoI rank.
pub fn entity_report(
    aggregate: &AggregateResult,
    snapshots: &[SnapshotGraph],
    entities: &EntityMap,
    opts: &ReportOptions,
) -> Vec<EntityReport> {
    let stats = aggregate.mean_entity_stats(entities);
    let (summed, network_total) = entity_capacities(snapshots, entities);
    let external_total = opts.external_capacities.as_ref().map(|_| network_total);
    let fees = advertised_fees(snapshots, entities, aggregate.params.amount_sat, opts.fee_weighting);

    let mut rows: Vec<EntityReport> = stats
        .iter()
        .filter(|(_, s)| s.routing_income_sat >= opts.min_income_sat && s.routing_traffic >= opts.min_traffic)
        .map(|(name, s)| {
            let (capacity, source) = match &opts.external_capacities {
                Some(ext) => (ext.get(name).copied(), CapacitySource::External),
                None => (summed.get(name).copied(), CapacitySource::ChannelSum),
            };
            if capacity.is_none() {
                log::warn!("no capacity known for entity {name}; capacity columns left empty");
            }
            let total = external_total.unwrap_or(network_total);
            let advertised = fees.get(name).copied();
            let econ = match (advertised, capacity) {
                (Some(fee), Some(cap)) => economical_fee(fee, cap, s.routing_income_sat, opts.target_roi),
                _ => None,
            };
            EntityReport {
                entity: name.clone(),
                capacity_sat: capacity,
                capacity_fraction: capacity.filter(|_| total > 0.0).map(|c| (c / total).min(1.0)),
                capacity_source: source,
                advertised_fee_sat: advertised,
                income_per_tx_sat: (s.routing_traffic > 0.0).then(|| s.routing_income_sat / s.routing_traffic),
                daily_income_sat: s.routing_income_sat,
                daily_traffic: s.routing_traffic,
                annual_roi: capacity.and_then(|c| annual_roi(s.routing_income_sat, c)),
                fee_ratio: econ.map(|e| e.1),
                economical_fee_sat: econ.map(|e| e.0),
                rank_roi: 0,
                rank_fee: 0,
                rank_traffic: 0,
            }
        })
        .collect();

    assign_ranks(&mut rows, |r| r.annual_roi, |r, k| r.rank_roi = k);
    assign_ranks(&mut rows, |r| r.advertised_fee_sat, |r, k| r.rank_fee = k);
    assign_ranks(&mut rows, |r| Some(r.daily_traffic), |r, k| r.rank_traffic = k);
    rows.sort_by_key(|r| r.rank_roi);
    rows
}

/// Ranks by decreasing key (1 = largest); missing keys rank last; ties by name.
fn assign_ranks<K, S>(rows: &mut [EntityReport], key: K, mut set: S)
where
    K: Fn(&EntityReport) -> Option<f64>,
    S: FnMut(&mut EntityReport, usize),
{
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(&rows[a]), key(&rows[b]));
        match (ka, kb) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        }
        .then_with(|| rows[a].entity.cmp(&rows[b].entity))
    });
    for (rank, idx) in order.into_iter().enumerate() {
        set(&mut rows[idx], rank + 1);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Payment value in satoshi; snapshots are re-filtered at each value.
    Amount,
    /// Transactions per day.
    Tau,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Amount => "alpha",
            SweepAxis::Tau => "tau",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: u64,
    pub failure_fraction: Option<f64>,
    pub mean_path_length: Option<f64>,
    pub entities: BTreeMap<String, MeanStats>,
}

/// One full experiment per grid value.
pub fn sweep(
    snapshots: &[SnapshotGraph],
    params: &SimParams,
    entities: &EntityMap,
    axis: SweepAxis,
    values: &[u64],
    opts: &ExperimentOptions,
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&value| {
            let mut p = params.clone();
            let filtered;
            let graphs: &[SnapshotGraph] = match axis {
                SweepAxis::Tau => {
                    p.tau = value as usize;
                    snapshots
                }
                SweepAxis::Amount => {
                    p.amount_sat = value;
                    if snapshots.iter().any(|g| g.min_capacity_sat() > value) {
                        log::warn!("snapshots were filtered above {value} sat; lower channels are missing from this point");
                    }
                    filtered = snapshots.iter().map(|g| g.filtered(value)).collect::<Vec<_>>();
                    &filtered
                }
            };
            let agg = run_experiment(graphs, &p, opts)?;
            Ok(SweepPoint {
                value,
                failure_fraction: agg.failure_fraction(),
                mean_path_length: agg.mean_path_length(),
                entities: agg.mean_entity_stats(entities),
            })
        })
        .collect()
}

/// Entities with the highest mean income over the whole sweep.
pub fn top_sweep_entities(points: &[SweepPoint], n: usize) -> Vec<String> {
    let mut totals: BTreeMap<&str, f64> = BTreeMap::new();
    for p in points {
        for (name, s) in &p.entities {
            *totals.entry(name).or_default() += s.routing_income_sat;
        }
    }
    let mut v: Vec<(&str, f64)> = totals.into_iter().collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    v.into_iter().take(n).map(|(k, _)| k.to_string()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepletionRatio {
    pub income_sat: f64,
    pub optimistic_income_sat: f64,
    pub ratio: f64,
}

/// Entity income with depletion enforced over income with depletion ignored,
/// from two experiments with identical seeds.
pub fn depletion_ratio(
    snapshots: &[SnapshotGraph],
    params: &SimParams,
    entities: &EntityMap,
    opts: &ExperimentOptions,
) -> Result<BTreeMap<String, DepletionRatio>> {
    let enforced = SimParams {
        ignore_depletion: false,
        ..params.clone()
    };
    let optimistic = SimParams {
        ignore_depletion: true,
        ..params.clone()
    };
    let a = run_experiment(snapshots, &enforced, opts)?.mean_entity_stats(entities);
    let b = run_experiment(snapshots, &optimistic, opts)?.mean_entity_stats(entities);
    Ok(b.into_iter()
        .filter(|(_, s)| s.routing_income_sat > 0.0)
        .map(|(name, s)| {
            let income = a.get(&name).map_or(0.0, |x| x.routing_income_sat);
            (
                name,
                DepletionRatio {
                    income_sat: income,
                    optimistic_income_sat: s.routing_income_sat,
                    ratio: income / s.routing_income_sat,
                },
            )
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovalFailure {
    pub entity: String,
    pub failure_fraction: Option<f64>,
}

/// Failure fraction of the baseline and after removing each entity in turn.
/// Every run replays the baseline's transactions and initial balances.
pub fn entity_removal_failures(
    snapshots: &[SnapshotGraph],
    params: &SimParams,
    entities: &EntityMap,
    names: &[String],
    opts: &ExperimentOptions,
) -> Result<(Option<f64>, Vec<RemovalFailure>)> {
    let baseline_opts = ExperimentOptions {
        removed_nodes: None,
        ..opts.clone()
    };
    let baseline = run_experiment(snapshots, params, &baseline_opts)?.failure_fraction();
    let rows = names
        .iter()
        .map(|name| {
            let removed: HashSet<NodeId> = entities.members(name).into_iter().collect();
            let o = ExperimentOptions {
                removed_nodes: Some(removed),
                ..opts.clone()
            };
            Ok(RemovalFailure {
                entity: name.clone(),
                failure_fraction: run_experiment(snapshots, params, &o)?.failure_fraction(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((baseline, rows))
}
