//! `bench`: configuration-driven benchmark harness for preconditioned CG.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use precondbench::harness::{
    baselines_path, read_direct_baselines, read_records, records_path, run_benchmark,
    BenchmarkConfig, OrderingSpec,
};
use precondbench::profile::RunStatus;
use precondbench::report::{make_report, ReportMode};

#[derive(Parser)]
#[command(name = "bench", about = "Preconditioned-CG benchmarking toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark sweep from a JSON config.
    Run(RunArgs),
    /// Aggregate run records into profiles, summary tables and plots.
    Report(ReportArgs),
    /// Prefetch matrices listed in a JSON file into the cache.
    Fetch(FetchArgs),
    /// Generate a deterministic test matrix as a Matrix Market file.
    Gen(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Benchmark config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Skip run keys that already have records.
    #[arg(long)]
    resume: bool,
    /// Worker threads; overrides the config's parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// RHS seed; overrides the config (default there: 123456789).
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict the sweep to one ordering: natural, rcm, or file:<path>.
    #[arg(long)]
    ordering: Option<String>,
    /// Report label for a file: ordering (default: the file stem).
    #[arg(long)]
    ordering_label: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding records.jsonl (a sweep's output_dir).
    #[arg(long)]
    records: PathBuf,
    /// vs_control, vs_control_with_gen, vs_direct, or vs_direct_with_gen.
    #[arg(long)]
    mode: String,
    /// Output directory (default: <records>/report).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FetchArgs {
    /// JSON list of {id, url, checksum?} entries.
    #[arg(long)]
    list: PathBuf,
    /// Cache directory (default: $PRECOND_BENCH_CACHE or ./cache).
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Never touch the network; fail on cache misses.
    #[arg(long)]
    offline: bool,
}

#[derive(Args)]
struct GenArgs {
    /// poisson2d, tridiag, or random_sdd.
    #[arg(long)]
    kind: String,
    /// Grid side for poisson2d (matrix dimension is k²).
    #[arg(long)]
    k: Option<usize>,
    /// Dimension for tridiag / random_sdd.
    #[arg(long)]
    n: Option<usize>,
    /// Off-diagonal density for random_sdd.
    #[arg(long, default_value_t = 0.2)]
    density: f64,
    #[arg(long, default_value_t = 123_456_789)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    if let Err(err) = dispatch(Cli::parse()) {
        eprintln!("bench: {err:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Report(args) => cmd_report(args),
        Command::Fetch(args) => cmd_fetch(args),
        Command::Gen(args) => cmd_gen(args),
    }
}

fn parse_ordering(spec: &str, label: Option<&str>) -> Result<OrderingSpec> {
    if let Some(path) = spec.strip_prefix("file:") {
        let path = PathBuf::from(path);
        let label = label
            .map(String::from)
            .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "external".into());
        return Ok(OrderingSpec::File { file: path, label });
    }
    match spec {
        "natural" | "rcm" => Ok(OrderingSpec::Named(spec.into())),
        other => bail!("unknown ordering {other}; use natural, rcm, or file:<path>"),
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = BenchmarkConfig::from_json_file(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(jobs) = args.jobs {
        config.parallelism = jobs.max(1);
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(ordering) = &args.ordering {
        config.orderings = vec![parse_ordering(ordering, args.ordering_label.as_deref())?];
    }
    let outcome = run_benchmark(&config, args.resume)?;
    let converged =
        outcome.records.iter().filter(|r| r.status == RunStatus::Converged).count();
    println!(
        "{} records ({} converged), {} solves executed, {} skipped",
        outcome.records.len(),
        converged,
        outcome.executed,
        outcome.skipped
    );
    println!("records: {}", records_path(&config.output_dir).display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let Some(mode) = ReportMode::parse(&args.mode) else {
        bail!(
            "unknown mode {}; expected vs_control, vs_control_with_gen, vs_direct, \
             or vs_direct_with_gen",
            args.mode
        );
    };
    let records = read_records(&records_path(&args.records))
        .with_context(|| format!("reading records under {}", args.records.display()))?;
    let baselines = read_direct_baselines(&baselines_path(&args.records))?;
    let out = args.out.unwrap_or_else(|| args.records.join("report"));
    let baseline_arg = if baselines.is_empty() { None } else { Some(&baselines) };
    let paths = make_report(&records, mode, &out, baseline_arg)?;
    println!("summary: {}", paths.summary_csv.display());
    println!("best:    {}", paths.best_csv.display());
    println!(
        "curves:  {} csv, {} svg under {}",
        paths.profile_csvs.len(),
        paths.svgs.len(),
        out.display()
    );
    Ok(())
}

#[derive(Deserialize)]
struct FetchEntry {
    id: String,
    url: String,
    #[serde(default)]
    checksum: Option<String>,
}

fn cmd_fetch(args: FetchArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.list)
        .with_context(|| format!("reading {}", args.list.display()))?;
    let entries: Vec<FetchEntry> = serde_json::from_str(&text)?;
    let cache = args
        .cache
        .or_else(|| std::env::var(precondbench::fetch::CACHE_ENV).ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("cache"));
    let mut failures = 0;
    for entry in &entries {
        match precondbench::fetch::fetch_matrix(
            &entry.id,
            &entry.url,
            &cache,
            args.offline,
            entry.checksum.as_deref(),
        ) {
            Ok((path, sha256)) => println!("{}: {} ({})", entry.id, path.display(), sha256),
            Err(e) => {
                failures += 1;
                eprintln!("{}: skipped ({e})", entry.id);
            }
        }
    }
    if failures > 0 {
        bail!("{failures} of {} matrices could not be fetched", entries.len());
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let matrix = match args.kind.as_str() {
        "poisson2d" => {
            let k = args.k.context("poisson2d needs --k")?;
            precondbench::gen::poisson2d(k)?
        }
        "tridiag" => {
            let n = args.n.context("tridiag needs --n")?;
            precondbench::gen::tridiag(n)?
        }
        "random_sdd" => {
            let n = args.n.context("random_sdd needs --n")?;
            precondbench::gen::random_sdd(n, args.density, args.seed)?
        }
        other => bail!("unknown kind {other}; expected poisson2d, tridiag, or random_sdd"),
    };
    precondbench::write_matrix_market(&matrix, &args.out)?;
    println!("{} ({}x{}, {} nnz)", args.out.display(), matrix.dim(), matrix.dim(), matrix.nnz());
    Ok(())
}
