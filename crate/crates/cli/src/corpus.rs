//! Synthetic corpora and non-member samples.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Keys `key_0 .. key_{n-1}` with values uniform in `[0, 2^k)`.
pub fn synthetic(n: usize, k: u32, seed: u64) -> Vec<(Vec<u8>, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| (format!("key_{i}").into_bytes(), rng.random_range(0..1u64 << k)))
        .collect()
}

/// `samples` distinct-from-`stored` keys: random 64-bit integers in their
/// little-endian encoding, redrawn on a collision with a stored key.
pub fn non_members(samples: u64, seed: u64, stored: &HashSet<Vec<u8>>) -> impl Iterator<Item = [u8; 8]> + '_ {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).map(move |_| loop {
        let key = rng.random::<u64>().to_le_bytes();
        if !stored.contains(&key[..]) {
            break key;
        }
    })
}

/// Hits among `samples` non-members, with the binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FpMeasure {
    pub samples: u64,
    pub hits: u64,
    pub rate: f64,
    pub sigma: f64,
}

pub fn measure_fp<F: Fn(&[u8]) -> Option<u64>>(
    query: F,
    samples: u64,
    seed: u64,
    stored: &HashSet<Vec<u8>>,
) -> FpMeasure {
    let hits = non_members(samples, seed, stored)
        .filter(|key| query(key).is_some())
        .count() as u64;
    let rate = hits as f64 / samples as f64;
    FpMeasure {
        samples,
        hits,
        rate,
        sigma: (rate * (1.0 - rate) / samples as f64).sqrt(),
    }
}
