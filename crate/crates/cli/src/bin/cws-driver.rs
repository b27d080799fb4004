use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use cws_core::driver::{run_trace, DriverConfig, InProcessClient, RunResult};
use cws_core::log::write_jsonl;
use cws_core::model::TaskState;
use cws_core::sim::ClusterConfig;
use cws_core::strategy::StrategyName;
use cws_core::trace::{self, LayeredParams, WorkflowTrace};
use cws_core::{ExecutionId, Scheduler};
use cws_server::HttpClient;
use serde_json::json;

/// Replay workflow traces against the scheduler like a workflow system would.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trace to completion and print a summary.
    Run {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        strategy: StrategyName,
        /// Simulated cluster. Required unless --endpoint is given.
        #[arg(long)]
        cluster: Option<PathBuf>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Talk to a running cws-server instead of an in-process scheduler.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value = "cws-driver")]
        execution: String,
        /// Write the decision log (in-process runs only).
        #[arg(long)]
        decision_log: Option<PathBuf>,
        /// Write per-task results as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic trace.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fan-out width (fork-join, critical-path-heavy) or length (chain).
        #[arg(long, default_value_t = 16)]
        width: usize,
        /// Chain stages for critical-path-heavy, layers for layered.
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = 1000)]
        runtime_ms: u64,
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Example,
    ForkJoin,
    Chain,
    Layered,
    CriticalPathHeavy,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            trace,
            strategy,
            cluster,
            batch_size,
            seed,
            endpoint,
            execution,
            decision_log,
            out,
        } => {
            let trace = WorkflowTrace::from_path(&trace)?;
            let mut config = DriverConfig::new(ExecutionId::parse(&execution)?, strategy);
            config.seed = seed;
            if let Some(n) = batch_size {
                anyhow::ensure!(n > 0, "--batch-size must be positive");
                config.batch_size = n;
            }
            let result = match (endpoint, cluster) {
                (Some(url), _) => {
                    if decision_log.is_some() {
                        bail!("--decision-log is only available for in-process runs");
                    }
                    run_trace(&trace, &mut HttpClient::new(&url)?, &config)?
                }
                (None, Some(cluster)) => {
                    let mut scheduler = Scheduler::new(&ClusterConfig::from_path(&cluster)?)?;
                    let result = run_trace(&trace, &mut InProcessClient::new(&mut scheduler), &config);
                    if let Some(path) = &decision_log {
                        let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
                        write_jsonl(scheduler.log(), std::io::BufWriter::new(file))?;
                    }
                    result?
                }
                (None, None) => bail!("either --cluster or --endpoint is required"),
            };
            report(&trace, strategy, &result, out)
        }
        Command::Generate {
            kind,
            out,
            seed,
            width,
            depth,
            runtime_ms,
            name,
        } => {
            let mut t = match kind {
                Kind::Example => trace::critical_path_example(runtime_ms),
                Kind::ForkJoin => trace::fork_join(width, runtime_ms),
                Kind::Chain => trace::chain(width, runtime_ms),
                Kind::Layered => trace::random_layered(
                    "layered",
                    LayeredParams {
                        layers: depth,
                        ..LayeredParams::default()
                    },
                    seed,
                ),
                Kind::CriticalPathHeavy => trace::critical_path_heavy("critical-path-heavy", width, depth, seed),
            };
            if let Some(n) = name {
                t.name = n;
            }
            std::fs::write(&out, t.to_json()).with_context(|| format!("writing {}", out.display()))?;
            Ok(())
        }
    }
}

fn report(trace: &WorkflowTrace, strategy: StrategyName, result: &RunResult, out: Option<PathBuf>) -> Result<()> {
    let summary = json!({
        "trace": trace.name,
        "strategy": strategy,
        "makespanMs": result.makespan_ms,
        "tasks": trace.physical_tasks.len(),
        "finished": result.count(TaskState::Finished),
        "failed": result.count(TaskState::Failed),
        "withdrawn": result.count(TaskState::Withdrawn),
        "batches": result.batches.len(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if let Some(path) = out {
        std::fs::write(&path, serde_json::to_string_pretty(&result.tasks)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
