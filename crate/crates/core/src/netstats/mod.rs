//! Rank correlations, centrality and descriptive statistics of channel graphs
//! and their growth over time.

pub mod centrality;
pub mod correlation;
pub mod reference;
pub mod structure;
pub mod temporal;

pub use centrality::{betweenness, brandes, centrality, centrality_income_correlation, CentralityVector, Measure};
pub use correlation::{kendall, spearman, weighted_kendall, Method, RankCorrelation};
pub use reference::{barabasi_albert, erdos_renyi, reference_graph, Model};
pub use structure::{cpd, effective_diameter, transitivity, UndirectedGraph};
pub use temporal::{attachment_curve, densification_fit, edge_locality, lifetimes, temporal_metrics, DensificationFit};
