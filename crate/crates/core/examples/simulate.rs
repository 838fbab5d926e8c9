//! One experiment: three days, five runs each, then the top earners.

use lnsim::sim::{run_experiment, ExperimentOptions};
use lnsim::synth::{daily_snapshots, SynthConfig};
use lnsim::SimParams;

fn main() -> lnsim::Result<()> {
    let params = SimParams {
        tau: 2_000,
        runs: 5,
        seed: 7,
        ..SimParams::default()
    };
    let (snapshots, _) = daily_snapshots(&SynthConfig::default(), 3, 0.05, params.amount_sat);
    let result = run_experiment(&snapshots, &params, &ExperimentOptions::default())?;

    println!("failure fraction  {:.4}", result.failure_fraction().unwrap_or(0.0));
    println!("mean path length  {:.3}", result.mean_path_length().unwrap_or(0.0));
    println!("top routers by daily income:");
    for (node, s) in result.income_ranking().into_iter().take(5) {
        println!("  {node}  {:>10.1} sat  {:>7.1} tx", s.routing_income_sat, s.routing_traffic);
    }
    Ok(())
}
