//! Seed derivation for reproducible replica streams.
//!
//! Replica `r` of a run with master seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(replica_seed(s, r))`, where
//!
//! ```text
//! replica_seed(s, r) = splitmix64(s + 0x9E37_79B9_7F4A_7C15 * (r + 1))
//! splitmix64(z):  z ^= z >> 30; z *= 0xBF58_476D_1CE4_E5B9;
//!                 z ^= z >> 27; z *= 0x94D0_49BB_1331_11EB;
//!                 z ^= z >> 31
//! ```
//!
//! (all arithmetic wrapping mod 2^64). Results therefore depend only on the
//! master seed and the replica index, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn replica_seed(master: u64, replica: u64) -> u64 {
    splitmix64(master.wrapping_add(GOLDEN_GAMMA.wrapping_mul(replica.wrapping_add(1))))
}

pub fn replica_rng(master: u64, replica: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(replica_seed(master, replica))
}

/// Maps 64 random bits to a uniform in [0, 1) using the top 53 bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
