//! Bucketed sparse filter: a hash splits the keys into about
//! `n / (c log2 n)` buckets and each bucket gets its own small verified
//! [`SparseFilter`], so every linear system stays logarithmic in size.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hashing::{derive_seed, HashSpec};
use crate::sparse_filter::{build_verified, SparseFilter, SparseParams};

const TAG_BUCKET_HASH: u64 = 0x6275_636b_6574;
const TAG_BUCKET_BUILD: u64 = 0x0069_6e6e_6572;

pub const DEFAULT_MAX_BUCKET_TRIES: u32 = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct BucketParams {
    /// Bucket-count scale: `b = ceil(n / (c_bucket log2 n))`.
    pub c_bucket: f64,
    /// Slack in the bucket size bound `(1 + delta) n / b`.
    pub delta: f64,
    pub inner: SparseParams,
    pub max_bucket_tries: u32,
    /// Build buckets on the rayon pool. The result does not depend on it.
    pub parallel: bool,
}

impl BucketParams {
    pub fn new(c_bucket: f64, delta: f64, inner: SparseParams) -> Self {
        BucketParams {
            c_bucket,
            delta,
            inner,
            max_bucket_tries: DEFAULT_MAX_BUCKET_TRIES,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_bucket.is_finite() && self.c_bucket > 1.0) {
            return Err(Error::InvalidParams(format!(
                "c_bucket must exceed 1, got {}",
                self.c_bucket
            )));
        }
        let min_delta = 2.0 * std::f64::consts::E - 1.0;
        if !(self.delta.is_finite() && self.delta > min_delta) {
            return Err(Error::InvalidParams(format!(
                "delta must exceed 2e - 1 = {min_delta:.4}, got {}",
                self.delta
            )));
        }
        if self.max_bucket_tries == 0 {
            return Err(Error::InvalidParams("max_bucket_tries must be at least 1".into()));
        }
        self.inner.validate()
    }
}

/// `max(1, ceil(n / (c log2 n)))`, and 1 for `n < 2`.
pub fn bucket_count(n: usize, c_bucket: f64) -> usize {
    if n < 2 {
        return 1;
    }
    let x = n as f64 / (c_bucket * (n as f64).log2());
    (x.ceil() as usize).max(1)
}

/// Largest bucket size allowed at acceptance, `floor((1 + delta) n / b)`.
pub fn bucket_size_bound(n: usize, b: usize, delta: f64) -> usize {
    let x = (1.0 + delta) * n as f64 / b as f64;
    // values within float noise of an integer count as that integer
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

/// Seed used for the inner build of bucket `index`.
pub fn bucket_build_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, TAG_BUCKET_BUILD, index as u64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketStats {
    /// Bucket hashes drawn, including the accepted one.
    pub hash_tries: u32,
    /// Bucket sizes under the accepted hash.
    pub histogram: Vec<usize>,
    pub size_bound: usize,
    /// Tables built per bucket before verification succeeded.
    pub iterations: Vec<u32>,
}

impl BucketStats {
    pub fn max_bucket(&self) -> usize {
        self.histogram.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketedFilter {
    n: usize,
    bucket_hash: HashSpec,
    filters: Vec<SparseFilter>,
}

/// Draws bucket hashes until no bucket exceeds the size bound. Returns the
/// accepted hash, the per-key bucket, the number of draws and the bound.
fn choose_bucket_hash<K: AsRef<[u8]>>(
    pairs: &[(K, u64)],
    params: &BucketParams,
    master_seed: u64,
) -> Result<(HashSpec, Vec<usize>, u32, usize)> {
    let n = pairs.len();
    let b = bucket_count(n, params.c_bucket);
    let bound = bucket_size_bound(n, b, params.delta);
    for t in 0..params.max_bucket_tries {
        let spec = HashSpec::new(derive_seed(master_seed, TAG_BUCKET_HASH, u64::from(t)), 0, b as u64)?;
        let assign: Vec<usize> = pairs.iter().map(|(k, _)| spec.eval(k.as_ref()) as usize).collect();
        let mut sizes = vec![0usize; b];
        for &a in &assign {
            sizes[a] += 1;
        }
        if sizes.iter().all(|&s| s <= bound) {
            return Ok((spec, assign, t + 1, bound));
        }
    }
    Err(Error::BuildFailure {
        attempts: params.max_bucket_tries,
        reason: format!("no bucket hash keeps all {b} buckets within {bound} keys"),
    })
}

/// Partitions `pairs` and builds one verified filter per bucket.
pub fn build_bucketed<K: AsRef<[u8]> + Sync>(
    pairs: &[(K, u64)],
    params: &BucketParams,
    master_seed: u64,
) -> Result<(BucketedFilter, BucketStats)> {
    params.validate()?;
    crate::graph_filter::check_pairs(pairs, params.inner.k)?;
    let (bucket_hash, assign, hash_tries, size_bound) = choose_bucket_hash(pairs, params, master_seed)?;
    let b = bucket_hash.range as usize;
    let mut buckets: Vec<Vec<(&[u8], u64)>> = vec![Vec::new(); b];
    for ((key, value), &a) in pairs.iter().zip(&assign) {
        buckets[a].push((key.as_ref(), *value));
    }
    let build = |(i, bucket): (usize, &Vec<(&[u8], u64)>)| {
        build_verified(bucket, &params.inner, bucket_build_seed(master_seed, i)).map_err(|e| Error::Bucket {
            bucket: i,
            source: Box::new(e),
        })
    };
    let results: Vec<_> = if params.parallel {
        buckets.par_iter().enumerate().map(build).collect()
    } else {
        buckets.iter().enumerate().map(build).collect()
    };
    let mut filters = Vec::with_capacity(b);
    let mut iterations = Vec::with_capacity(b);
    // the first failing bucket by index, independent of scheduling
    for r in results {
        let v = r?;
        iterations.push(v.iterations);
        filters.push(v.filter);
    }
    let stats = BucketStats {
        hash_tries,
        histogram: buckets.iter().map(Vec::len).collect(),
        size_bound,
        iterations,
    };
    Ok((
        BucketedFilter {
            n: pairs.len(),
            bucket_hash,
            filters,
        },
        stats,
    ))
}

impl BucketedFilter {
    /// Reassembles a filter from stored parts; used by the codec.
    pub fn from_parts(n: usize, bucket_seed: u64, filters: Vec<SparseFilter>) -> Result<Self> {
        if filters.is_empty() {
            return Err(Error::InvalidParams(
                "a bucketed filter needs at least one bucket".into(),
            ));
        }
        if filters.iter().map(SparseFilter::len).sum::<usize>() != n {
            return Err(Error::InvalidParams("bucket key counts do not add up to n".into()));
        }
        Ok(BucketedFilter {
            n,
            bucket_hash: HashSpec::new(bucket_seed, 0, filters.len() as u64)?,
            filters,
        })
    }

    pub fn bucket_of(&self, key: &[u8]) -> usize {
        self.bucket_hash.eval(key) as usize
    }

    pub fn query(&self, key: &[u8]) -> Option<u64> {
        self.filters[self.bucket_of(key)].query(key)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bucket_count(&self) -> usize {
        self.filters.len()
    }

    pub fn bucket_seed(&self) -> u64 {
        self.bucket_hash.master_seed
    }

    pub fn filters(&self) -> &[SparseFilter] {
        &self.filters
    }

    pub fn k(&self) -> u32 {
        self.filters[0].k()
    }

    /// Sum of the per-bucket table sizes in bits.
    pub fn table_bits(&self) -> usize {
        self.filters.iter().map(SparseFilter::table_bits).sum()
    }

    /// Largest number of blocks probed in any bucket.
    pub fn max_blocks_used(&self) -> u32 {
        self.filters.iter().map(SparseFilter::blocks_used).max().unwrap_or(0)
    }
}

/// Query on a bucketed filter.
pub fn query_bucketed(filter: &BucketedFilter, key: &[u8]) -> Option<u64> {
    filter.query(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::splitmix64;

    fn pairs(n: usize, seed: u64) -> Vec<(Vec<u8>, u64)> {
        (0..n)
            .map(|i| (format!("key_{i}").into_bytes(), splitmix64(seed ^ i as u64) % 256))
            .collect()
    }

    fn params() -> BucketParams {
        BucketParams::new(4.0, 5.0, SparseParams::new(2, 0.05, 31, 8))
    }

    #[test]
    fn counts() {
        assert_eq!(bucket_count(0, 4.0), 1);
        assert_eq!(bucket_count(1, 4.0), 1);
        assert_eq!(bucket_count(2, 4.0), 1);
        // 10^4 / (4 * 13.2877) = 188.14
        assert_eq!(bucket_count(10_000, 4.0), 189);
        assert_eq!(bucket_size_bound(10_000, 189, 5.0), 317);
        assert_eq!(bucket_size_bound(10, 2, 5.0), 30);
    }

    #[test]
    fn validation() {
        let mut p = params();
        p.delta = 4.4;
        assert!(p.validate().is_err());
        p.delta = 4.5;
        assert!(p.validate().is_ok());
        p.c_bucket = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn members_round_trip() {
        let p = pairs(2000, 1);
        let (f, stats) = build_bucketed(&p, &params(), 9).unwrap();
        assert_eq!(stats.histogram.iter().sum::<usize>(), 2000);
        assert!(stats.max_bucket() <= stats.size_bound);
        for (key, value) in &p {
            assert_eq!(f.query(key), Some(*value));
        }
    }

    #[test]
    fn schedule_independent() {
        let p = pairs(1500, 2);
        let mut seq = params();
        seq.parallel = false;
        let (a, sa) = build_bucketed(&p, &params(), 4).unwrap();
        let (b, sb) = build_bucketed(&p, &seq, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
    }

    #[test]
    fn two_keys_single_bucket_matches_plain_build() {
        let p = pairs(2, 3);
        let (f, _) = build_bucketed(&p, &params(), 7).unwrap();
        assert_eq!(f.bucket_count(), 1);
        let plain = build_verified(&p, &params().inner, bucket_build_seed(7, 0)).unwrap();
        assert_eq!(f.filters()[0], plain.filter);
    }

    #[test]
    fn empty_buckets_are_trivial() {
        let p: Vec<(Vec<u8>, u64)> = Vec::new();
        let (f, stats) = build_bucketed(&p, &params(), 1).unwrap();
        assert_eq!(stats.histogram, vec![0]);
        assert_eq!(f.query(b"x"), None);
    }
}
