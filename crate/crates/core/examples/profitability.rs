//! Return on capital of routing entities and the fee that would make each one
//! earn a 5% yearly return.

use lnsim::profitability::{depletion_ratio, entity_report, ReportOptions};
use lnsim::sim::{run_experiment, ExperimentOptions};
use lnsim::synth::{daily_snapshots, SynthConfig};
use lnsim::SimParams;

fn main() -> lnsim::Result<()> {
    let params = SimParams {
        tau: 2_000,
        runs: 3,
        seed: 3,
        ..SimParams::default()
    };
    let (snapshots, net) = daily_snapshots(&SynthConfig::default(), 2, 0.05, params.amount_sat);
    let opts = ExperimentOptions::default();
    let agg = run_experiment(&snapshots, &params, &opts)?;
    let report = entity_report(&agg, &snapshots, &net.entities, &ReportOptions::default());

    println!("{:<10} {:>12} {:>9} {:>10} {:>12}", "entity", "income/day", "RoI", "fee", "economical");
    for r in report.iter().take(10) {
        println!(
            "{:<10} {:>12.1} {:>9.5} {:>10.3} {:>12.3}",
            r.entity,
            r.daily_income_sat,
            r.annual_roi.unwrap_or(f64::NAN),
            r.advertised_fee_sat.unwrap_or(f64::NAN),
            r.economical_fee_sat.unwrap_or(f64::NAN)
        );
    }

    let ratios = depletion_ratio(&snapshots, &params, &net.entities, &opts)?;
    if let Some(r) = ratios.get("operator") {
        println!("\noperator keeps {:.1}% of its depletion-free income", 100.0 * r.ratio);
    }
    Ok(())
}
