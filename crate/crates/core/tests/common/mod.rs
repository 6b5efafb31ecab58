#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Pairs = Vec<(Vec<u8>, u64)>;

pub fn corpus(n: usize, k: u32, seed: u64) -> Pairs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| (format!("key_{i}").into_bytes(), rng.random_range(0..1u64 << k)))
        .collect()
}

/// Random 8-byte keys; `key_i` keys never have length 8 below 10^4, but
/// callers with larger corpora should still filter.
pub fn probes(count: usize, seed: u64) -> Vec<[u8; 8]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random::<u64>().to_le_bytes()).collect()
}

/// Trial-division primality, for checking the fast test.
pub fn naive_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

pub fn binomial_sigma(p: f64, samples: usize) -> f64 {
    (p * (1.0 - p) / samples as f64).sqrt()
}
