//! Converts a gossip JSON dump to the canonical edge CSV on stdout.
//!
//! cargo run --example convert_gossip -- describegraph.json > snapshot.csv

use lnsim::ingest::{convert_gossip_dump, write_canonical_rows, PolicyConvention};

fn main() -> lnsim::Result<()> {
    let Some(path) = std::env::args().nth(1) else {
        eprintln!("usage: convert_gossip DUMP.json");
        std::process::exit(2);
    };
    let rows = convert_gossip_dump(path.as_ref(), PolicyConvention::Source)?;
    write_canonical_rows(std::io::stdout().lock(), &rows)
}
