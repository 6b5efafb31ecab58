mod bench;
mod corpus;
mod error;

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bloomier::bucketed_filter::build_bucketed;
use bloomier::codec::{self, Filter};
use bloomier::sparse_filter::build_verified;
use bloomier::{BucketParams, GraphFilter, GraphParams, SparseParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "bloomier", version, about = "Build, query and benchmark Bloomier filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a filter from a key<TAB>value file.
    Build(BuildArgs),
    /// Look up keys read from standard input, one per line.
    Query(QueryArgs),
    /// Measure how often non-members get a value.
    Fprate(FprateArgs),
    /// Time builds on synthetic corpora.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Graph,
    Sparse,
    Bucketed,
}

/// Construction parameters shared by `build` and `bench`.
#[derive(Args, Clone, Debug)]
pub struct SchemeArgs {
    /// Value width in bits.
    #[arg(long)]
    pub k: u32,
    /// Graph scheme: table entries per key.
    #[arg(long, default_value_t = 2.5)]
    pub c: f64,
    /// Graph scheme: ring modulus.
    #[arg(long, default_value_t = 65536)]
    pub m: u64,
    /// Sparse schemes: terms per equation.
    #[arg(long, default_value_t = 2)]
    pub s: usize,
    /// Sparse schemes: table slack.
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Sparse schemes: bit length of the field prime.
    #[arg(long, default_value_t = 31)]
    pub mbits: u32,
    /// Bucketed scheme: bucket-count scale.
    #[arg(long, default_value_t = 4.0)]
    pub c_bucket: f64,
    /// Bucketed scheme: bucket size slack.
    #[arg(long, default_value_t = 5.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SchemeArgs {
    pub fn graph_params(&self) -> GraphParams {
        GraphParams::new(self.c, self.m, self.k)
    }

    pub fn sparse_params(&self) -> SparseParams {
        SparseParams::new(self.s, self.eps, self.mbits, self.k)
    }

    pub fn bucket_params(&self) -> BucketParams {
        BucketParams::new(self.c_bucket, self.delta, self.sparse_params())
    }
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    scheme: Scheme,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    params: SchemeArgs,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    filter: PathBuf,
}

#[derive(Args)]
struct FprateArgs {
    #[arg(long)]
    filter: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corpus the filter was built from; sampled keys found in it are
    /// redrawn.
    #[arg(long)]
    input: Option<PathBuf>,
}

/// Build statistics printed as one JSON line.
#[derive(Debug, Default, Serialize)]
pub struct BuildSummary {
    pub scheme: &'static str,
    pub n: usize,
    pub k: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulus: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    /// Graph attempts or bucket hash draws, including the accepted one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retries: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rebuilds: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub buckets: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_bucket: Option<usize>,
    pub table_bits: usize,
    pub image_bytes: usize,
}

/// Builds `pairs` under `scheme`.
pub fn build_filter(scheme: Scheme, pairs: &[(Vec<u8>, u64)], a: &SchemeArgs) -> CliResult<(Filter, BuildSummary)> {
    let n = pairs.len();
    let (filter, summary) = match scheme {
        Scheme::Graph => {
            let f = GraphFilter::build(pairs, &a.graph_params(), a.seed)?;
            let s = BuildSummary {
                scheme: "graph",
                modulus: Some(f.modulus()),
                retries: Some(f.attempts()),
                ..Default::default()
            };
            (Filter::Graph(f), s)
        }
        Scheme::Sparse => {
            let v = build_verified(pairs, &a.sparse_params(), a.seed)?;
            let s = BuildSummary {
                scheme: "sparse",
                p: Some(v.filter.field().p),
                q: Some(v.filter.field().q),
                s: Some(a.s),
                blocks: Some(v.filter.blocks_used()),
                rebuilds: Some(v.iterations),
                ..Default::default()
            };
            (Filter::Sparse(v.filter), s)
        }
        Scheme::Bucketed => {
            let (f, stats) = build_bucketed(pairs, &a.bucket_params(), a.seed)?;
            let s = BuildSummary {
                scheme: "bucketed",
                s: Some(a.s),
                retries: Some(stats.hash_tries),
                blocks: Some(f.max_blocks_used()),
                rebuilds: Some(stats.iterations.iter().sum()),
                buckets: Some(f.bucket_count()),
                max_bucket: Some(stats.max_bucket()),
                ..Default::default()
            };
            (Filter::Bucketed(f), s)
        }
    };
    let summary = BuildSummary {
        n,
        k: a.k,
        table_bits: filter.table_bits(),
        image_bytes: codec::encode(&filter).len(),
        ..summary
    };
    Ok((filter, summary))
}

fn read_corpus(path: &Path, k: u32) -> CliResult<Vec<(Vec<u8>, u64)>> {
    let file = File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    Ok(codec::read_tsv(BufReader::new(file), k)?)
}

fn load_filter(path: &Path) -> CliResult<Filter> {
    let bytes = fs::read(path).map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))?;
    codec::decode(&bytes).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let line = serde_json::to_string(value).map_err(|e| CliError::Failure(e.to_string()))?;
    println!("{line}");
    Ok(())
}

fn cmd_build(args: BuildArgs) -> CliResult<()> {
    let pairs = read_corpus(&args.input, args.params.k)?;
    let (filter, summary) = build_filter(args.scheme, &pairs, &args.params)?;
    fs::write(&args.out, codec::encode(&filter))
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", args.out.display())))?;
    print_json(&summary)
}

fn cmd_query(args: QueryArgs) -> CliResult<()> {
    let filter = load_filter(&args.filter)?;
    let stdin = io::stdin().lock();
    let mut out = BufWriter::new(io::stdout().lock());
    let io_err = |e: io::Error| CliError::Failure(e.to_string());
    for line in stdin.lines() {
        let line = line.map_err(|e| CliError::Usage(format!("reading keys: {e}")))?;
        let key = line.strip_suffix('\r').unwrap_or(&line);
        match filter.query(key.as_bytes()) {
            Some(v) => writeln!(out, "{v}"),
            None => writeln!(out, "BOT"),
        }
        .map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

fn cmd_fprate(args: FprateArgs) -> CliResult<()> {
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let filter = load_filter(&args.filter)?;
    let stored: HashSet<Vec<u8>> = match &args.input {
        Some(path) => read_corpus(path, filter.k())?.into_iter().map(|(k, _)| k).collect(),
        None => HashSet::new(),
    };
    let m = corpus::measure_fp(|key| filter.query(key), args.samples, args.seed, &stored);
    print_json(&m)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Query(a) => cmd_query(a),
        Command::Fprate(a) => cmd_fprate(a),
        Command::Bench(a) => bench::cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
