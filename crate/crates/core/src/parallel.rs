use rayon::prelude::*;

use crate::rng::{replica_rng, StreamRng};

/// Runs `f` for replicas `0..count`, each with its own derived stream, and
/// returns the results in replica order.
pub fn replicate<T, F>(count: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut StreamRng) -> T + Sync,
{
    replicate_range(0, count, seed, f)
}

/// As [`replicate`] for replicas `start..start + len`.
pub fn replicate_range<T, F>(start: u64, len: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut StreamRng) -> T + Sync,
{
    (start..start + len)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            f(r, &mut rng)
        })
        .collect()
}
