use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hrf::bench::{
    cluster_benchmark, export, flops_report, mse_verify, pointwise_sweep, resolve_workers, run_with_workers,
    softmax_distribution_bench, write_records, Format, HarnessConfig, TableRecord,
};
use hrf::rng::Seed;
use hrf::Result;

/// Benchmarks for hybrid random feature estimators.
#[derive(Parser)]
#[command(name = "hrf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run seed; overrides the `seed` field of the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; tables go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: HRF_WORKERS, else all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate quantiles and relative errors on a same-length angle grid.
    Pointwise,
    /// Compare empirical MSEs with the closed forms.
    MseVerify,
    /// Synthetic clustered-data benchmark.
    ClusterBench,
    /// Distances between approximate and exact softmax distributions.
    SoftmaxDist,
    /// Modelled and measured feature construction cost.
    Flops,
}

fn emit<R: TableRecord>(records: &[R], out: Option<&Path>, format: Format) -> Result<()> {
    match out {
        Some(path) => export(records, path, format),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_records(records, &mut lock, format)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => HarnessConfig::from_json_file(path)?,
        None => HarnessConfig::default(),
    };
    let seed = cli.seed.map(Seed).or(cfg.seed).unwrap_or(Seed(0));
    let workers = resolve_workers(cli.workers.or(cfg.workers));
    let out = cli.out.as_deref();
    run_with_workers(workers, || match cli.command {
        Command::Pointwise => emit(&pointwise_sweep(&cfg.pointwise, seed)?, out, cli.format),
        Command::MseVerify => {
            let rec = mse_verify(&cfg.mse_verify, seed)?;
            let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
            for r in &rec {
                let w = worst.entry(r.formula.as_str()).or_insert(0.0);
                *w = w.max(r.rel_dev);
            }
            for (formula, dev) in &worst {
                eprintln!("{formula}: max relative deviation {dev:.4e}");
            }
            emit(&rec, out, cli.format)
        }
        Command::ClusterBench => emit(&cluster_benchmark(&cfg.cluster_bench, seed)?, out, cli.format),
        Command::SoftmaxDist => emit(&softmax_distribution_bench(&cfg.softmax_dist, seed)?, out, cli.format),
        Command::Flops => emit(&flops_report(&cfg.flops, seed)?, out, cli.format),
    })?
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
