//! Exposure of payments to a single intermediary, and what longer paths cost.

use lnsim::privacy::{cost_vs_length, plausibility_curve, single_hop_from_stats, CostVsLengthOptions, GaParams};
use lnsim::sim::{run_experiment, ExperimentOptions};
use lnsim::synth::{daily_snapshots, SynthConfig};
use lnsim::SimParams;

fn main() -> lnsim::Result<()> {
    let params = SimParams {
        tau: 1_000,
        runs: 2,
        seed: 5,
        ..SimParams::default()
    };
    let (snapshots, _) = daily_snapshots(&SynthConfig::default(), 1, 0.0, params.amount_sat);
    for eps in [0.0, 0.8, 1.0] {
        let p = SimParams { merchant_ratio: eps, ..params.clone() };
        let agg = run_experiment(&snapshots, &p, &ExperimentOptions::default())?;
        let f = single_hop_from_stats(&agg.path_stats());
        println!("eps {eps:.1}: single intermediary {:.3} (routed only {:.3})", f.all_successes.unwrap_or(0.0), f.routed_only.unwrap_or(0.0));
    }

    let curve = plausibility_curve(&snapshots[0], 60_000, &[1, 2, 5, 10]);
    println!("\nnodes with more than d channels able to carry 60k sat: {:?}", curve.points);

    let opts = CostVsLengthOptions {
        lengths: (1..=5).collect(),
        ga: GaParams { generations: 40, ..GaParams::new(1, 9) },
        payments_per_cell: 10,
        workers: 0,
    };
    println!();
    for c in cost_vs_length(&snapshots, &params, &opts)? {
        println!("length {}: success {:.2}, median cost {:?} sat", c.length, c.success_rate(), c.median_cost_sat);
    }
    Ok(())
}
