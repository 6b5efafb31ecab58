//! `bench`: build timings and space on synthetic corpora.

use std::collections::HashSet;
use std::time::Instant;

use bloomier::codec::Filter;
use bloomier::hashing::derive_seed;
use clap::Args;
use serde::Serialize;

use crate::corpus::{measure_fp, synthetic, FpMeasure};
use crate::error::{CliError, CliResult};
use crate::{build_filter, print_json, BuildSummary, Scheme, SchemeArgs};

const CORPUS_TAG: u64 = 0x636f_7270_7573;
const FP_TAG: u64 = 0x6670;

pub const MAX_GRAPH_SIZE: usize = 1_000_000;
pub const MAX_SPARSE_SIZE: usize = 10_000;
pub const MAX_BUCKETED_SIZE: usize = 1_000_000;

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    scheme: Scheme,
    /// Comma-separated corpus sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Timed trials per size; one extra warm-up build is discarded.
    #[arg(long, default_value_t = 5)]
    trials: u32,
    /// Non-member samples for the false-positive estimate.
    #[arg(long, default_value_t = 100_000)]
    fp_samples: u64,
    #[command(flatten)]
    params: SchemeArgs,
}

#[derive(Debug, Serialize)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<u64>,
    k: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    buckets: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct FpReport {
    #[serde(flatten)]
    measure: FpMeasure,
    /// `rate -/+ 3 sigma`, clamped to `[0, 1]`.
    interval: [f64; 2],
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    scheme: Scheme,
    n: usize,
    parameters: Parameters,
    trials: u32,
    /// Mean wall time of the timed builds.
    build_wall_time_ms: f64,
    build_wall_time_ms_min: f64,
    /// Mean graph attempts or bucket hash draws.
    retries: Option<f64>,
    /// Mean hash blocks `r` (largest per bucket for the bucketed scheme).
    blocks_used: Option<f64>,
    /// Mean verified-build iterations (summed over buckets).
    rebuilds: Option<f64>,
    /// Table payload bits, headers excluded.
    serialized_bits: usize,
    image_bytes: usize,
    bits_per_key: f64,
    measured_fp_rate: FpReport,
}

fn mean(xs: &[Option<u32>]) -> Option<f64> {
    let v: Option<Vec<u32>> = xs.iter().copied().collect();
    v.filter(|v| !v.is_empty())
        .map(|v| v.iter().map(|&x| f64::from(x)).sum::<f64>() / v.len() as f64)
}

fn check_size(scheme: Scheme, n: usize) -> CliResult<()> {
    let cap = match scheme {
        Scheme::Graph => MAX_GRAPH_SIZE,
        Scheme::Sparse => MAX_SPARSE_SIZE,
        Scheme::Bucketed => MAX_BUCKETED_SIZE,
    };
    if n > cap {
        return Err(CliError::Usage(format!(
            "size {n} exceeds the {scheme:?} bench budget of {cap}"
        )));
    }
    Ok(())
}

fn bench_size(args: &BenchArgs, n: usize) -> CliResult<BenchReport> {
    let base = &args.params;
    let pairs = synthetic(n, base.k, derive_seed(base.seed, CORPUS_TAG, n as u64));
    let mut times = Vec::new();
    let mut summaries: Vec<BuildSummary> = Vec::new();
    let mut last: Option<Filter> = None;
    for t in 0..=args.trials {
        let trial = SchemeArgs {
            seed: derive_seed(base.seed, n as u64, u64::from(t)),
            ..base.clone()
        };
        let start = Instant::now();
        let (filter, summary) = build_filter(args.scheme, &pairs, &trial)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        if t > 0 {
            times.push(ms);
            summaries.push(summary);
            last = Some(filter);
        }
    }
    let filter = last.expect("at least one timed trial");
    let summary = summaries.last().expect("at least one timed trial");
    let stored: HashSet<Vec<u8>> = pairs.iter().map(|(k, _)| k.clone()).collect();
    let fp = measure_fp(
        |key| filter.query(key),
        args.fp_samples,
        derive_seed(base.seed, FP_TAG, n as u64),
        &stored,
    );
    let is_graph = args.scheme == Scheme::Graph;
    Ok(BenchReport {
        scheme: args.scheme,
        n,
        parameters: Parameters {
            c: is_graph.then_some(base.c),
            m: is_graph.then_some(base.m),
            p: summary.p,
            q: summary.q,
            k: base.k,
            s: summary.s,
            eps: (!is_graph).then_some(base.eps),
            buckets: summary.buckets,
        },
        trials: args.trials,
        build_wall_time_ms: times.iter().sum::<f64>() / times.len() as f64,
        build_wall_time_ms_min: times.iter().copied().fold(f64::INFINITY, f64::min),
        retries: mean(&summaries.iter().map(|s| s.retries).collect::<Vec<_>>()),
        blocks_used: mean(&summaries.iter().map(|s| s.blocks).collect::<Vec<_>>()),
        rebuilds: mean(&summaries.iter().map(|s| s.rebuilds).collect::<Vec<_>>()),
        serialized_bits: summary.table_bits,
        image_bytes: summary.image_bytes,
        bits_per_key: if n > 0 {
            summary.table_bits as f64 / n as f64
        } else {
            0.0
        },
        measured_fp_rate: FpReport {
            interval: [(fp.rate - 3.0 * fp.sigma).max(0.0), (fp.rate + 3.0 * fp.sigma).min(1.0)],
            measure: fp,
        },
    })
}

pub fn cmd_bench(args: BenchArgs) -> CliResult<()> {
    if args.trials == 0 || args.fp_samples == 0 {
        return Err(CliError::Usage("--trials and --fp-samples must be at least 1".into()));
    }
    for &n in &args.sizes {
        check_size(args.scheme, n)?;
    }
    let reports = args
        .sizes
        .iter()
        .map(|&n| bench_size(&args, n))
        .collect::<CliResult<Vec<_>>>()?;
    print_json(&reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_of_options() {
        assert_eq!(mean(&[Some(1), Some(2)]), Some(1.5));
        assert_eq!(mean(&[Some(1), None]), None);
        assert_eq!(mean(&[]), None);
    }

    #[test]
    fn budgets() {
        assert!(check_size(Scheme::Sparse, 10_000).is_ok());
        assert!(check_size(Scheme::Sparse, 10_001).is_err());
        assert!(check_size(Scheme::Graph, 1_000_001).is_err());
    }
}
