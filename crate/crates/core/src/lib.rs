//! Deterministic traffic simulation for payment channel networks.
//!
//! Given daily snapshots of a public channel graph, the simulator samples a
//! day of fixed-value payments, routes each along the cheapest
//! capacity-feasible path, and updates directed channel balances as payments
//! flow. On top of the per-node income and traffic this produces, the crate
//! offers analyses of fee competition ([`competition`]), routing profitability
//! ([`profitability`]), payment privacy ([`privacy`]) and descriptive graph
//! statistics ([`netstats`]).
//!
//! ```no_run
//! use lnsim::{ingest, sim, state::SimParams};
//! # fn main() -> lnsim::Result<()> {
//! let opts = ingest::LoadOptions::default();
//! let merchants = ingest::load_merchants("merchants.csv".as_ref())?;
//! let snapshots: Vec<_> = ingest::load_snapshots("snapshots/".as_ref(), &opts)?
//!     .into_iter()
//!     .map(|g| g.with_merchants(&merchants))
//!     .collect();
//! let result = sim::run_experiment(&snapshots, &SimParams::default(), &Default::default())?;
//! println!("failure fraction {:?}", result.failure_fraction());
//! # Ok(())
//! # }
//! ```

pub mod cli;
pub mod competition;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod netstats;
pub mod privacy;
pub mod profitability;
pub mod report;
pub mod router;
pub mod sampler;
pub mod seeds;
pub mod sim;
pub mod state;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{FeePolicy, NodeId, NodeIdx, SnapshotGraph};
pub use router::{PaymentOutcome, PaymentStatus};
pub use sampler::Transaction;
pub use state::{edge_fee, BalanceState, SimParams};
