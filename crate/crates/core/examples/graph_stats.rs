//! Structure of a snapshot against random graphs of the same size, and the
//! growth of a channel stream.

use lnsim::netstats::{densification_fit, edge_locality, reference_graph, temporal_metrics, Model};
use lnsim::netstats::structure::{summarize, UndirectedGraph};
use lnsim::netstats::temporal::growth_series;
use lnsim::synth::{edge_stream, generate, SynthConfig};

fn main() -> lnsim::Result<()> {
    let g = generate(&SynthConfig::default()).graph("day0", 0);
    let u = UndirectedGraph::from_snapshot(&g);
    let s = summarize(&u, 0);
    println!("snapshot  {s:?}");
    for model in [Model::ErdosRenyi, Model::BarabasiAlbert] {
        let r = reference_graph(s.nodes, s.edges, model, 1)?;
        println!("{:<9} {:?}", model.as_str(), summarize(&r, 0));
    }

    let stream = edge_stream(400, 0.6, 2);
    let windows = temporal_metrics(&stream, 500, 0);
    if let Some(fit) = densification_fit(&growth_series(&windows)) {
        println!("\ndensification exponent {:.3} (r2 {:.3})", fit.exponent, fit.r_squared);
    }
    let loc = edge_locality(&stream);
    println!("new channels closing a triangle: {:?}", loc.fraction_at(2));
    Ok(())
}
