//! Are the same nodes rich every day? Rank correlations of routing income
//! across days, and against centrality.

use lnsim::netstats::correlation::correlation_matrix;
use lnsim::netstats::{centrality_income_correlation, Measure, Method};
use lnsim::sim::{run_experiment, ExperimentOptions};
use lnsim::synth::{daily_snapshots, SynthConfig};
use lnsim::SimParams;

fn main() -> lnsim::Result<()> {
    let params = SimParams {
        tau: 2_000,
        runs: 2,
        seed: 13,
        ..SimParams::default()
    };
    let (snapshots, _) = daily_snapshots(&SynthConfig::default(), 3, 0.05, params.amount_sat);
    let agg = run_experiment(&snapshots, &params, &ExperimentOptions::default())?;

    let days: Vec<_> = (0..snapshots.len())
        .map(|d| {
            let mut total = std::collections::BTreeMap::new();
            for c in agg.cells.iter().filter(|c| c.snapshot_index == d) {
                for (id, s) in agg.cell_stats(c) {
                    *total.entry(id).or_insert(0.0) += s.routing_income_msat as f64;
                }
            }
            total
        })
        .collect();
    for method in Method::ALL {
        println!("{:<17} {:?}", method.as_str(), correlation_matrix(&days, method));
    }
    println!();
    for c in centrality_income_correlation(&agg, &snapshots, &Measure::ALL, 0) {
        println!("{} {:<12} spearman {:?}", c.snapshot_id, c.measure.as_str(), c.spearman);
    }
    Ok(())
}
