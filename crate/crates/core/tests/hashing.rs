use std::collections::HashSet;

use bloomier::hashing::{derive_block, derive_seed, HashSpec, BLOCK_INDEX_BASE};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn outputs_pass_chi_square() {
    let bins = 100u64;
    let keys = 100_000u64;
    let dist = ChiSquared::new((bins - 1) as f64).unwrap();
    let (lo, hi) = (dist.inverse_cdf(0.0005), dist.inverse_cdf(0.9995));
    for (seed, index) in [(1u64, 0u32), (2, 7), (0xdead_beef, 123)] {
        let h = HashSpec::new(seed, index, bins).unwrap();
        let mut counts = vec![0u64; bins as usize];
        for i in 0..keys {
            counts[h.eval(format!("k{i}").as_bytes()) as usize] += 1;
        }
        let expected = keys as f64 / bins as f64;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(
            (lo..=hi).contains(&stat),
            "seed {seed} index {index}: chi2 {stat} outside [{lo}, {hi}]"
        );
    }
}

#[test]
fn pairwise_collisions_near_one_over_range() {
    let range = 1000u64;
    let pairs = 100_000usize;
    let h = HashSpec::new(42, 3, range).unwrap();
    let hits = (0..pairs)
        .filter(|i| h.eval(format!("x{i}").as_bytes()) == h.eval(format!("y{i}").as_bytes()))
        .count();
    let p = 1.0 / range as f64;
    let rate = hits as f64 / pairs as f64;
    let sigma = (p * (1.0 - p) / pairs as f64).sqrt();
    assert!((rate - p).abs() <= 3.0 * sigma, "rate {rate} vs {p}");
}

#[test]
fn distinct_indices_are_unrelated() {
    let a = HashSpec::new(5, 1, 1 << 40).unwrap();
    let b = HashSpec::new(5, 2, 1 << 40).unwrap();
    let c = HashSpec::new(6, 1, 1 << 40).unwrap();
    let agree = (0..1000)
        .filter(|i| {
            let key = format!("k{i}");
            a.eval(key.as_bytes()) == b.eval(key.as_bytes()) || a.eval(key.as_bytes()) == c.eval(key.as_bytes())
        })
        .count();
    assert_eq!(agree, 0);
}

#[test]
fn zero_range_rejected() {
    assert!(HashSpec::new(0, 0, 0).is_err());
}

#[test]
fn blocks_use_disjoint_function_indices() {
    let s = 3;
    let mut seen = HashSet::new();
    for j in 0..20 {
        let block = derive_block(9, j, s, 1_000_003, 101).unwrap();
        assert_eq!(block.s(), s);
        assert_eq!(block.block_index, j);
        for t in 0..s {
            assert_eq!(block.coefficient(t).range, 1_000_003);
            assert_eq!(block.column(t).range, 101);
        }
        for spec in &block.specs {
            assert!(spec.function_index >= BLOCK_INDEX_BASE);
            assert!(seen.insert(spec.function_index));
        }
    }
    assert_eq!(seen.len(), 20 * 2 * s);
    assert!(derive_block(9, 0, 0, 7, 7).is_err());
    assert!(derive_block(9, u32::MAX, 2, 7, 7).is_err());
}

#[test]
fn derived_seeds_do_not_repeat() {
    let seeds: HashSet<u64> = (0..50)
        .flat_map(|tag| (0..200).map(move |c| derive_seed(77, tag, c)))
        .collect();
    assert_eq!(seeds.len(), 50 * 200);
}

proptest! {
    #[test]
    fn eval_is_in_range_and_pure(seed: u64, index: u32, range in 1u64.., key: Vec<u8>) {
        let h = HashSpec::new(seed, index, range).unwrap();
        let y = h.eval(&key);
        prop_assert!(y < range);
        prop_assert_eq!(y, HashSpec::new(seed, index, range).unwrap().eval(&key));
    }
}
