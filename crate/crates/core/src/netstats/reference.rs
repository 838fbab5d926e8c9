//! Random reference graphs of a given size.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netstats::structure::UndirectedGraph;
use crate::seeds::rng_from;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    ErdosRenyi,
    BarabasiAlbert,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::ErdosRenyi => "er",
            Model::BarabasiAlbert => "ba",
        }
    }
}

/// Uniform random graph with exactly `m` edges.
pub fn erdos_renyi(n: usize, m: usize, seed: u64) -> Result<UndirectedGraph> {
    let max = n * n.saturating_sub(1) / 2;
    if m > max {
        return Err(Error::InvalidInput(format!("{m} edges do not fit on {n} nodes")));
    }
    let mut rng = rng_from(seed);
    // Draw the smaller of the edge set and its complement.
    let complement = m > max / 2;
    let want = if complement { max - m } else { m };
    let mut chosen = BTreeSet::new();
    while chosen.len() < want {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            chosen.insert((u.min(v), u.max(v)));
        }
    }
    let all = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Ok(if complement {
        UndirectedGraph::from_edges(n, all.filter(|e| !chosen.contains(e)))
    } else {
        UndirectedGraph::from_edges(n, chosen)
    })
}

/// Preferential attachment: a star on `m + 1` nodes, then each new node links
/// to `m` distinct existing nodes drawn in proportion to degree.
pub fn barabasi_albert(n: usize, m: usize, seed: u64) -> Result<UndirectedGraph> {
    if m == 0 || m >= n {
        return Err(Error::InvalidInput(format!("attachment {m} needs 1 <= m < n = {n}")));
    }
    let mut rng = rng_from(seed);
    let mut edges: Vec<(usize, usize)> = (1..=m).map(|v| (0, v)).collect();
    let mut repeated: Vec<usize> = std::iter::repeat_n(0, m).chain(1..=m).collect();
    for source in m + 1..n {
        let mut targets = BTreeSet::new();
        while targets.len() < m {
            targets.insert(*repeated.choose(&mut rng).expect("non-empty"));
        }
        for &t in &targets {
            edges.push((source, t));
        }
        repeated.extend(targets);
        repeated.extend(std::iter::repeat_n(source, m));
    }
    Ok(UndirectedGraph::from_edges(n, edges))
}

/// Reference graph with `n` nodes and about `m` edges. For preferential
/// attachment the per-node link count is `round(m / n)`, at least 1.
pub fn reference_graph(n: usize, m: usize, model: Model, seed: u64) -> Result<UndirectedGraph> {
    match model {
        Model::ErdosRenyi => erdos_renyi(n, m, seed),
        Model::BarabasiAlbert => {
            let k = ((m as f64 / n.max(1) as f64).round() as usize).max(1);
            barabasi_albert(n, k.min(n.saturating_sub(1)).max(1), seed)
        }
    }
}
