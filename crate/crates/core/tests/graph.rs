mod common;

use bloomier::graph_filter::{back_substitute, default_component_cap, is_simple_acyclic};
use bloomier::{Error, GraphFilter, GraphParams, MutableGraphFilter};
use common::{binomial_sigma, corpus, probes};
use proptest::prelude::*;

#[test]
fn first_try_rate_at_threshold_c() {
    let pairs = corpus(10_000, 8, 1);
    let seeds = 1000;
    let first = (0..seeds)
        .filter(|&s| {
            GraphFilter::build(&pairs, &GraphParams::new(2.09, 1 << 16, 8), s)
                .unwrap()
                .attempts()
                == 1
        })
        .count();
    let rate = first as f64 / seeds as f64;
    let floor = 1.0 / 3.0;
    assert!(
        rate >= floor - 3.0 * binomial_sigma(floor, seeds as usize),
        "first-try rate {rate}"
    );
}

#[test]
fn default_cap_is_met_at_ten_thousand() {
    let pairs = corpus(10_000, 8, 2);
    let params = GraphParams::new(2.5, 1 << 16, 8);
    let cap = default_component_cap(pairs.len());
    let mut accepted = 0;
    for seed in 0..100 {
        if let Ok(f) = MutableGraphFilter::build(&pairs, &params, seed) {
            assert!(f.largest_component() <= cap);
            accepted += 1;
        }
    }
    assert!(accepted >= 99, "{accepted}/100");
}

#[test]
fn non_member_answers_are_values_in_range() {
    let pairs = corpus(2000, 5, 3);
    let f = GraphFilter::build(&pairs, &GraphParams::new(2.5, 1 << 12, 5), 3).unwrap();
    for key in probes(20_000, 3) {
        if let Some(v) = f.query(&key) {
            assert!(v < 32);
        }
    }
}

#[test]
fn exhausted_tries_report_build_failure() {
    let pairs = corpus(5000, 4, 4);
    let mut params = GraphParams::new(2.01, 256, 4);
    params.max_tries = 1;
    // at c barely above 2 a single draw is almost never acyclic
    let failures = (0..20)
        .filter(|&s| matches!(GraphFilter::build(&pairs, &params, s), Err(Error::BuildFailure { .. })))
        .count();
    assert!(failures >= 15, "{failures}");
}

#[test]
fn duplicates_reported_even_with_one_try() {
    let mut pairs = corpus(100, 4, 5);
    pairs.push(pairs[10].clone());
    let mut params = GraphParams::new(2.5, 256, 4);
    params.max_tries = 1;
    assert!(matches!(
        GraphFilter::build(&pairs, &params, 0),
        Err(Error::DuplicateKey(100))
    ));
}

fn small_pairs() -> impl Strategy<Value = (Vec<(Vec<u8>, u64)>, u32)> {
    (1u32..=12).prop_flat_map(|k| {
        (
            prop::collection::hash_map(prop::collection::vec(any::<u8>(), 0..12), 0..1u64 << k, 0..300)
                .prop_map(|m| m.into_iter().collect::<Vec<_>>()),
            Just(k),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn members_get_their_values(
        (pairs, k) in small_pairs(),
        c_hundredths in 210u32..400,
        extra_bits in 0u32..8,
        seed: u64,
    ) {
        let m = (1u64 << k) << extra_bits;
        let params = GraphParams::new(f64::from(c_hundredths) / 100.0, m, k);
        let f = GraphFilter::build(&pairs, &params, seed).unwrap();
        for (key, v) in &pairs {
            prop_assert_eq!(f.query(key), Some(*v));
        }
    }

    #[test]
    fn update_only_touches_its_component(
        (pairs, k) in small_pairs().prop_filter("need a key", |(p, _)| !p.is_empty()),
        pick: prop::sample::Index,
        new_value: u64,
        seed: u64,
    ) {
        let params = GraphParams { component_cap: Some(usize::MAX), ..GraphParams::new(2.5, 1 << 16, k) };
        let mut f = MutableGraphFilter::build(&pairs, &params, seed).unwrap();
        let i = pick.index(pairs.len());
        let new_value = new_value % (1 << k);
        let before = f.filter().table().to_vec();
        let size = f.component_size(&pairs[i].0).unwrap();
        let touched = f.update_value(&pairs[i].0, new_value).unwrap();
        prop_assert_eq!(touched, size);

        let after = f.filter().table().to_vec();
        let changed = before.iter().zip(&after).filter(|(a, b)| a != b).count();
        prop_assert!(changed <= size);
        for (j, (key, v)) in pairs.iter().enumerate() {
            let want = if j == i { new_value } else { *v };
            prop_assert_eq!(f.query(key), Some(want));
        }
    }

    #[test]
    fn back_substitution_satisfies_every_edge(
        (pairs, k) in small_pairs(),
        seed: u64,
    ) {
        let params = GraphParams { component_cap: Some(usize::MAX), ..GraphParams::new(3.0, 1 << 16, k) };
        let f = MutableGraphFilter::build(&pairs, &params, seed).unwrap();
        let graph = f.graph();
        prop_assert!(is_simple_acyclic(&graph));
        let values: Vec<u64> = pairs.iter().map(|(_, v)| *v).collect();
        let h3 = vec![0; pairs.len()];
        let g = back_substitute(&graph, &values, &h3, 1 << 16).unwrap();
        for e in &graph.edges {
            prop_assert_eq!((g[e.u] + g[e.v]) % (1 << 16), values[e.key_id]);
        }
    }
}
