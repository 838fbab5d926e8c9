//! Deterministic derivation of per-cell random streams from a master seed.
//!
//! Every (snapshot, run) cell gets its own seed, so the order in which cells
//! execute never affects their results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `parts` into `master` one word at a time.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Seed of the cell simulating `snapshot_index` in repetition `run`.
pub fn cell_seed(master: u64, run: usize, snapshot_index: usize) -> u64 {
    derive_seed(master, &[run as u64, snapshot_index as u64])
}

/// Independent streams used inside one simulated day.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DaySeeds {
    pub balances: u64,
    pub sampling: u64,
}

impl DaySeeds {
    pub fn from_cell(seed: u64) -> Self {
        DaySeeds {
            balances: derive_seed(seed, &[0]),
            sampling: derive_seed(seed, &[1]),
        }
    }

    pub fn balance_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.balances)
    }

    pub fn sampling_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.sampling)
    }
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
