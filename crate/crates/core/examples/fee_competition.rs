//! How much could the busiest routers raise their base fee before senders
//! switch to the next cheapest path?

use lnsim::competition::{fee_competition, group_report, rank_summaries, top_income_targets};
use lnsim::ingest::EntityMap;
use lnsim::sim::{run_experiment, ExperimentOptions};
use lnsim::synth::{daily_snapshots, SynthConfig};
use lnsim::SimParams;

fn main() -> lnsim::Result<()> {
    let params = SimParams {
        tau: 1_000,
        runs: 3,
        seed: 11,
        ..SimParams::default()
    };
    let (snapshots, _) = daily_snapshots(&SynthConfig::default(), 2, 0.05, params.amount_sat);
    let baseline = run_experiment(&snapshots, &params, &ExperimentOptions::default())?;
    let targets = top_income_targets(&baseline, 20);
    let summaries = fee_competition(&snapshots, &params, &EntityMap::new(), &targets, 0)?;

    println!("{:<14} {:>6} {:>6} {:>10} {:>10}", "target", "tau", "phi", "beta*", "gain");
    for s in summaries.iter().take(10) {
        println!(
            "{:<14} {:>6} {:>6} {:>10.1} {:>10.1}",
            s.target.label(),
            s.tau_x,
            s.phi_x,
            s.beta_star_sat,
            s.gain_sat
        );
    }
    println!();
    for g in group_report(&rank_summaries(&baseline, &summaries)) {
        println!("{:<8} members={:<3} failure ratio {:?}", g.band, g.members, g.mean_failure_ratio);
    }
    Ok(())
}
