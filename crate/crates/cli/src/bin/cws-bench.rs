use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use cws_cli::{load_traces, parse_strategies};
use cws_core::harness::{aggregate, export, sweep, write_records, ExportFormat, SweepConfig, DEFAULT_REPETITIONS};
use cws_core::sim::ClusterConfig;

/// Replay every trace under every strategy and compare makespans against the
/// baseline scheduler.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Directory of trace JSON files.
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    cluster: PathBuf,
    /// `all` or a comma-separated list; baseline_default is always added.
    #[arg(long, default_value = "all")]
    strategies: String,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Skip writing one decision log per run.
    #[arg(long)]
    no_logs: bool,
    /// Seeded multiplicative runtime noise, e.g. 0.1 for +-10%.
    #[arg(long)]
    jitter: Option<f64>,
    /// Run sequentially instead of on all cores.
    #[arg(long)]
    sequential: bool,
}

fn main() -> Result<()> {
    let args = Args::parse();
    anyhow::ensure!(args.reps > 0, "--reps must be positive");
    let traces = load_traces(&args.traces)?;
    let mut strategies = parse_strategies(&args.strategies)?;
    if !strategies.iter().any(|s| s.is_baseline()) {
        strategies.push(cws_core::StrategyName::BaselineDefault);
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let mut config = SweepConfig::new(ClusterConfig::from_path(&args.cluster)?);
    config.strategies = strategies;
    config.repetitions = args.reps;
    config.base_seed = args.seed;
    config.parallel = !args.sequential;
    if let Some(j) = args.jitter {
        anyhow::ensure!((0.0..1.0).contains(&j), "--jitter must be in [0, 1)");
        config.jitter = Some(j);
    }
    config.log_dir = (!args.no_logs).then(|| args.out.join("logs"));
    if let Some(n) = args.batch_size {
        anyhow::ensure!(n > 0, "--batch-size must be positive");
        config.batch_size = n;
    }

    let records = sweep(&traces, &config)?;
    write_records(&records, args.out.join("records.jsonl"))?;
    let aggregates = aggregate(&records)?;
    export(&aggregates, ExportFormat::Csv, args.out.join("aggregates.csv"))?;
    export(&aggregates, ExportFormat::Markdown, args.out.join("aggregates.md"))?;
    eprintln!(
        "{} runs over {} traces; results in {}",
        records.len(),
        traces.len(),
        args.out.display()
    );
    Ok(())
}
