//! Writes a small synthetic dataset for trying the `lnsim` binary.
//!
//! cargo run --example synthetic_dataset -- data/
//! cargo run -- simulate --snapshots data/snapshots.csv --merchants data/merchants.csv --seed 1

use std::path::PathBuf;

use lnsim::synth::{write_dataset, SynthConfig};

fn main() -> lnsim::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data"));
    let cfg = SynthConfig {
        nodes: 300,
        ..SynthConfig::default()
    };
    write_dataset(&dir, &cfg, 3, 0.05)?;
    println!("wrote {}", dir.display());
    Ok(())
}
