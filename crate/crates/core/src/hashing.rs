//! Seeded hash family.
//!
//! Every function in the family is SipHash-2-4 keyed with a 128-bit key
//! derived from `(master_seed, function_index)`. The 64-bit digest is reduced
//! to `[0, range)` by multiply-shift, which has no modulo bias for
//! ranges far below 2^64.

use std::hash::Hasher;

use siphasher::sip::SipHasher24;

use crate::error::{Error, Result};

/// One member of the hash family: a pure function of the key bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashSpec {
    pub master_seed: u64,
    pub function_index: u32,
    pub range: u64,
}

impl HashSpec {
    pub fn new(master_seed: u64, function_index: u32, range: u64) -> Result<Self> {
        if range == 0 {
            return Err(Error::InvalidRange);
        }
        Ok(HashSpec {
            master_seed,
            function_index,
            range,
        })
    }

    /// Raw 64-bit digest before range reduction.
    #[inline]
    pub fn digest(&self, key: &[u8]) -> u64 {
        let k1 = splitmix64(u64::from(self.function_index) ^ 0x6a09_e667_f3bc_c909);
        let mut h = SipHasher24::new_with_keys(self.master_seed, k1);
        h.write(key);
        h.finish()
    }

    #[inline]
    pub fn eval(&self, key: &[u8]) -> u64 {
        reduce(self.digest(key), self.range)
    }
}

/// Evaluates `spec` on `key`.
pub fn hash_key(spec: &HashSpec, key: &[u8]) -> Result<u64> {
    if spec.range == 0 {
        return Err(Error::InvalidRange);
    }
    Ok(spec.eval(key))
}

/// Maps a uniform 64-bit value onto `[0, range)`.
#[inline]
pub fn reduce(x: u64, range: u64) -> u64 {
    ((u128::from(x) * u128::from(range)) >> 64) as u64
}

/// Little-endian 8-byte encoding used for integer keys.
pub fn int_key(x: u64) -> [u8; 8] {
    x.to_le_bytes()
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed for a labelled sub-task (a rebuild
/// attempt, a bucket, ...). Different `(tag, counter)` pairs give unrelated
/// seeds.
pub fn derive_seed(master_seed: u64, tag: u64, counter: u64) -> u64 {
    let a = splitmix64(master_seed ^ splitmix64(tag));
    splitmix64(a ^ splitmix64(counter.wrapping_add(0x2545_f491_4f6c_dd1d)))
}

/// Function index 0 is reserved for the offset hash `h0`; blocks occupy
/// `1 + 2s*j .. 1 + 2s*(j+1)`.
pub const BLOCK_INDEX_BASE: u32 = 1;

/// A block of `2s` hash functions. The first `s` produce coefficients
/// (range = field size), the last `s` produce table columns (range = q).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashBlock {
    pub block_index: u32,
    pub specs: Vec<HashSpec>,
}

impl HashBlock {
    pub fn s(&self) -> usize {
        self.specs.len() / 2
    }

    /// Coefficient function `t` in `0..s`.
    pub fn coefficient(&self, t: usize) -> &HashSpec {
        &self.specs[t]
    }

    /// Column function `t` in `0..s`.
    pub fn column(&self, t: usize) -> &HashSpec {
        &self.specs[self.s() + t]
    }
}

pub fn derive_block(
    master_seed: u64,
    block_index: u32,
    s: usize,
    coefficient_range: u64,
    column_range: u64,
) -> Result<HashBlock> {
    if s == 0 {
        return Err(Error::InvalidParams("block needs s >= 1".into()));
    }
    let width = 2 * s as u64;
    let base = u64::from(BLOCK_INDEX_BASE) + width * u64::from(block_index);
    if base + width > u64::from(u32::MAX) {
        return Err(Error::InvalidParams(format!(
            "block index {block_index} exhausts the function index space"
        )));
    }
    let specs = (0..2 * s)
        .map(|t| {
            let range = if t < s { coefficient_range } else { column_range };
            HashSpec::new(master_seed, (base + t as u64) as u32, range)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HashBlock { block_index, specs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn single_bucket_is_zero() {
        let spec = HashSpec::new(7, 0, 1).unwrap();
        assert_eq!(hash_key(&spec, b"a").unwrap(), 0);
    }

    #[test]
    fn zero_range_rejected() {
        assert_eq!(HashSpec::new(7, 0, 0), Err(Error::InvalidRange));
        let spec = HashSpec {
            master_seed: 7,
            function_index: 0,
            range: 0,
        };
        assert_eq!(hash_key(&spec, b"a"), Err(Error::InvalidRange));
    }

    #[test]
    fn deterministic() {
        let spec = HashSpec::new(7, 3, 1000).unwrap();
        assert_eq!(spec.eval(b"hello"), spec.eval(b"hello"));
        assert_eq!(spec.digest(b"hello"), spec.digest(b"hello"));
    }

    // Frozen digests pin the family across platforms and releases.
    #[test]
    fn frozen_values() {
        let spec = HashSpec::new(7, 0, 1000).unwrap();
        let got: Vec<u64> = [&b"a"[..], b"key_0", b""].iter().map(|k| spec.eval(k)).collect();
        assert_eq!(got, FROZEN);
    }
    const FROZEN: [u64; 3] = [689, 177, 245];

    #[test]
    fn blocks_have_2s_distinct_indices() {
        let b = derive_block(11, 0, 2, 101, 53).unwrap();
        assert_eq!(b.specs.len(), 4);
        let idx: HashSet<u32> = b.specs.iter().map(|s| s.function_index).collect();
        assert_eq!(idx.len(), 4);
        assert_eq!(b.coefficient(0).range, 101);
        assert_eq!(b.column(1).range, 53);
        assert_eq!(b, derive_block(11, 0, 2, 101, 53).unwrap());
    }

    #[test]
    fn consecutive_blocks_disjoint() {
        let b0 = derive_block(11, 0, 3, 101, 53).unwrap();
        let b1 = derive_block(11, 1, 3, 101, 53).unwrap();
        let i0: HashSet<u32> = b0.specs.iter().map(|s| s.function_index).collect();
        assert!(b1.specs.iter().all(|s| !i0.contains(&s.function_index)));
        assert!(i0.iter().all(|&i| i != 0), "index 0 is reserved for h0");
    }

    #[test]
    fn reduce_bounds() {
        assert_eq!(reduce(u64::MAX, 10), 9);
        assert_eq!(reduce(0, 10), 0);
        assert_eq!(reduce(u64::MAX, 1), 0);
    }
}
