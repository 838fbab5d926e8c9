//! Mutable per-run world: directed channel balances and the forwarding fee.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeIdx, FeePolicy, SnapshotGraph};

pub const MSAT_PER_SAT: u64 = 1_000;

/// Forwarding fee in millisatoshi for `amount_sat`:
/// `base_fee_msat + floor(fee_rate_ppm * amount_msat / 1e6)`, saturating at
/// `u64::MAX`.
pub fn edge_fee(policy: &FeePolicy, amount_sat: u64) -> u64 {
    let amount_msat = amount_sat as u128 * MSAT_PER_SAT as u128;
    let proportional = (policy.fee_rate_ppm as u128).saturating_mul(amount_msat) / 1_000_000;
    policy.base_fee_msat.saturating_add(proportional.min(u64::MAX as u128) as u64)
}

/// Simulation parameters shared by every analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Transactions per simulated day.
    pub tau: usize,
    /// Value of every transaction, satoshi.
    pub amount_sat: u64,
    /// Share of recipients drawn from merchants.
    pub merchant_ratio: f64,
    pub runs: usize,
    pub seed: u64,
    pub ignore_depletion: bool,
    /// Charge the fee of the edge entering the recipient as well.
    pub count_last_hop_fee: bool,
    pub max_hops: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            tau: 7_000,
            amount_sat: 60_000,
            merchant_ratio: 0.8,
            runs: 10,
            seed: 0,
            ignore_depletion: false,
            count_last_hop_fee: false,
            max_hops: 20,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.amount_sat == 0 {
            return Err(Error::InvalidInput("amount must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.merchant_ratio) {
            return Err(Error::InvalidInput(format!(
                "merchant ratio {} outside [0, 1]",
                self.merchant_ratio
            )));
        }
        if self.max_hops == 0 {
            return Err(Error::InvalidInput("max_hops must be at least 1".into()));
        }
        Ok(())
    }
}

/// Spendable balance of both directions of every channel, satoshi.
///
/// `balances[c] = [node_a -> node_b, node_b -> node_a]`; the two always sum to
/// the channel capacity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceState {
    capacity: Vec<u64>,
    balances: Vec<[u64; 2]>,
}

impl BalanceState {
    /// Splits each channel uniformly at random over the integers `0..=capacity`.
    pub fn init<R: Rng + ?Sized>(graph: &SnapshotGraph, rng: &mut R) -> Self {
        let capacity: Vec<u64> = graph.channels().iter().map(|c| c.capacity_sat).collect();
        let balances = capacity
            .iter()
            .map(|&cap| {
                let fwd = rng.gen_range(0..=cap);
                [fwd, cap - fwd]
            })
            .collect();
        BalanceState { capacity, balances }
    }

    /// Every channel fully on its `node_a` side.
    pub fn all_forward(graph: &SnapshotGraph) -> Self {
        let capacity: Vec<u64> = graph.channels().iter().map(|c| c.capacity_sat).collect();
        let balances = capacity.iter().map(|&c| [c, 0]).collect();
        BalanceState { capacity, balances }
    }

    /// Sets the balance of the direction `edge` runs in; the reverse gets the rest.
    pub fn set_balance(&mut self, edge: &Edge, amount_sat: u64) {
        let cap = self.capacity[edge.channel];
        let amount = amount_sat.min(cap);
        self.balances[edge.channel] = if edge.forward { [amount, cap - amount] } else { [cap - amount, amount] };
    }

    pub fn balance(&self, edge: &Edge) -> u64 {
        self.balances[edge.channel][dir(edge)]
    }

    pub fn channel_balances(&self, channel: usize) -> [u64; 2] {
        self.balances[channel]
    }

    pub fn channel_capacity(&self, channel: usize) -> u64 {
        self.capacity[channel]
    }

    pub fn channel_count(&self) -> usize {
        self.capacity.len()
    }

    /// Sum over all directed balances.
    pub fn total(&self) -> u128 {
        self.balances.iter().map(|b| b[0] as u128 + b[1] as u128).sum()
    }

    /// Whether the edge can carry `amount_sat` now.
    pub fn usable(&self, edge: &Edge, amount_sat: u64, ignore_depletion: bool) -> bool {
        !edge.policy.disabled && (ignore_depletion || self.balance(edge) >= amount_sat)
    }

    /// Moves `amount_sat` along every edge of `path`.
    ///
    /// With depletion enforced every edge must carry the amount, otherwise the
    /// state is left untouched and a contract violation is returned. With
    /// `ignore_depletion` the transfer saturates at the available balance so the
    /// per-channel bounds keep holding.
    pub fn apply_payment(
        &mut self,
        graph: &SnapshotGraph,
        path: &[EdgeIdx],
        amount_sat: u64,
        ignore_depletion: bool,
    ) -> Result<()> {
        if !ignore_depletion {
            if let Some(&bad) = path.iter().find(|&&e| self.balance(graph.edge(e)) < amount_sat) {
                let e = graph.edge(bad);
                return Err(Error::ContractViolation(format!(
                    "edge {} -> {} has {} sat, payment needs {amount_sat}",
                    graph.node_id(e.src),
                    graph.node_id(e.trg),
                    self.balance(e)
                )));
            }
        }
        for &idx in path {
            let e = graph.edge(idx);
            let d = dir(e);
            let b = &mut self.balances[e.channel];
            let moved = amount_sat.min(b[d]);
            b[d] -= moved;
            b[1 - d] += moved;
        }
        Ok(())
    }

    /// True if every channel satisfies `fwd + rev == capacity`.
    pub fn is_conserved(&self) -> bool {
        self.balances.iter().zip(&self.capacity).all(|(b, &c)| b[0] as u128 + b[1] as u128 == c as u128)
    }
}

fn dir(edge: &Edge) -> usize {
    if edge.forward {
        0
    } else {
        1
    }
}
