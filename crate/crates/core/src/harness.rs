//! Strategy comparison: sweep traces x strategies x repetitions through the
//! in-process scheduler and summarize makespans against the baseline.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clock::Millis;
use crate::driver::{run_trace, DriverConfig, InProcessClient, RunResult};
use crate::error::{Error, Result};
use crate::ids::ExecutionId;
use crate::log::{write_jsonl, LogRecord};
use crate::model::TaskState;
use crate::scheduler::Scheduler;
use crate::sim::{ClusterConfig, Jitter, Simulator};
use crate::strategy::StrategyName;
use crate::trace::WorkflowTrace;

pub const DEFAULT_REPETITIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRecord {
    pub trace: String,
    pub strategy: StrategyName,
    pub seed: u64,
    pub repetition: usize,
    pub makespan_ms: Millis,
    pub task_count: usize,
    pub finished: usize,
    pub failed: usize,
    pub withdrawn: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decisions_log: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub strategies: Vec<StrategyName>,
    pub repetitions: usize,
    /// Repetition `r` runs with seed `base_seed + r`.
    pub base_seed: u64,
    pub batch_size: usize,
    pub cluster: ClusterConfig,
    /// Where to write one decision log per run, if anywhere.
    pub log_dir: Option<PathBuf>,
    pub parallel: bool,
    /// Multiplicative runtime noise amplitude, seeded per run.
    pub jitter: Option<f64>,
}

impl SweepConfig {
    pub fn new(cluster: ClusterConfig) -> Self {
        Self {
            strategies: StrategyName::all(),
            repetitions: DEFAULT_REPETITIONS,
            base_seed: 0,
            batch_size: usize::MAX,
            cluster,
            log_dir: None,
            parallel: true,
            jitter: None,
        }
    }
}

/// Replays one trace with one strategy on a fresh scheduler.
pub fn run_once(
    trace: &WorkflowTrace,
    strategy: StrategyName,
    seed: u64,
    cluster: &ClusterConfig,
    batch_size: usize,
    jitter: Option<f64>,
) -> Result<(RunResult, Vec<LogRecord>)> {
    let mut sim = Simulator::new(cluster)?;
    if let Some(amplitude) = jitter {
        sim = sim.with_jitter(Jitter { amplitude, seed });
    }
    let mut scheduler = Scheduler::with_simulator(sim);
    let execution = ExecutionId::parse("run").expect("literal id is valid");
    let config = DriverConfig {
        execution,
        strategy,
        seed,
        batch_size,
    };
    let result = run_trace(trace, &mut InProcessClient::new(&mut scheduler), &config).map_err(|e| match e {
        Error::ExecutionFailed { execution, tasks } => Error::ExecutionFailed {
            execution: format!("{execution} (trace {}, strategy {strategy}, seed {seed})", trace.name),
            tasks,
        },
        other => other,
    })?;
    Ok((result, scheduler.take_log()))
}

fn log_file_name(trace: &str, strategy: StrategyName, repetition: usize) -> String {
    let safe: String = trace
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{safe}__{strategy}__r{repetition}.jsonl")
}

/// One record per (trace, strategy, repetition), in that nesting order.
pub fn sweep(traces: &[WorkflowTrace], config: &SweepConfig) -> Result<Vec<RunRecord>> {
    if let Some(dir) = &config.log_dir {
        fs::create_dir_all(dir)?;
    }
    let jobs: Vec<(&WorkflowTrace, StrategyName, usize)> = traces
        .iter()
        .flat_map(|t| {
            config
                .strategies
                .iter()
                .flat_map(move |s| (0..config.repetitions).map(move |r| (t, *s, r)))
        })
        .collect();
    let run = |&(trace, strategy, repetition): &(&WorkflowTrace, StrategyName, usize)| -> Result<RunRecord> {
        let seed = config.base_seed + repetition as u64;
        let (result, log) = run_once(trace, strategy, seed, &config.cluster, config.batch_size, config.jitter)?;
        let decisions_log = match &config.log_dir {
            Some(dir) => {
                let name = log_file_name(&trace.name, strategy, repetition);
                let file = fs::File::create(dir.join(&name))?;
                write_jsonl(&log, BufWriter::new(file))?;
                Some(name)
            }
            None => None,
        };
        Ok(RunRecord {
            trace: trace.name.clone(),
            strategy,
            seed,
            repetition,
            makespan_ms: result.makespan_ms,
            task_count: trace.physical_tasks.len(),
            finished: result.count(TaskState::Finished),
            failed: result.count(TaskState::Failed),
            withdrawn: result.count(TaskState::Withdrawn),
            decisions_log,
        })
    };
    if config.parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    }
}

pub fn write_records(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StrategyAggregate {
    pub trace: String,
    pub strategy: StrategyName,
    pub runs: usize,
    pub median_makespan_ms: Millis,
    pub min_makespan_ms: Millis,
    pub stddev_ms: f64,
    /// `100 * (median - baseline median) / baseline median`.
    pub median_change_vs_baseline_pct: f64,
    /// Share of runs faster than the baseline's median.
    pub better_than_baseline_median_pct: f64,
    /// Share of runs faster than the baseline's best run.
    pub better_than_baseline_min_pct: f64,
}

/// Lower middle element for even counts. `values` must be non-empty.
pub fn median(values: &[Millis]) -> Millis {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted[(sorted.len() - 1) / 2]
}

/// Sample standard deviation; zero for fewer than two values.
pub fn stddev(values: &[Millis]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let ss: f64 = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

fn pct(part: usize, whole: usize) -> f64 {
    100.0 * part as f64 / whole as f64
}

/// Per-trace, per-strategy makespan statistics relative to
/// `baseline_default`. Traces keep their first-appearance order; strategies
/// are in canonical order with the baseline last.
pub fn aggregate(records: &[RunRecord]) -> Result<Vec<StrategyAggregate>> {
    let mut trace_order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<(usize, StrategyName), Vec<Millis>> = BTreeMap::new();
    for r in records {
        let idx = match trace_order.iter().position(|t| *t == r.trace) {
            Some(i) => i,
            None => {
                trace_order.push(&r.trace);
                trace_order.len() - 1
            }
        };
        groups.entry((idx, r.strategy)).or_default().push(r.makespan_ms);
    }
    let mut out = Vec::with_capacity(groups.len());
    for (idx, trace) in trace_order.iter().enumerate() {
        let baseline = groups
            .get(&(idx, StrategyName::BaselineDefault))
            .ok_or_else(|| Error::MissingBaseline((*trace).to_owned()))?;
        let base_median = median(baseline);
        let base_min = *baseline.iter().min().expect("group is non-empty");
        for ((_, strategy), makespans) in groups.iter().filter(|((i, _), _)| *i == idx) {
            let med = median(makespans);
            let change = if base_median == 0 {
                0.0
            } else {
                100.0 * (med as f64 - base_median as f64) / base_median as f64
            };
            out.push(StrategyAggregate {
                trace: (*trace).to_owned(),
                strategy: *strategy,
                runs: makespans.len(),
                median_makespan_ms: med,
                min_makespan_ms: *makespans.iter().min().expect("group is non-empty"),
                stddev_ms: stddev(makespans),
                median_change_vs_baseline_pct: change,
                better_than_baseline_median_pct: pct(
                    makespans.iter().filter(|&&m| m < base_median).count(),
                    makespans.len(),
                ),
                better_than_baseline_min_pct: pct(
                    makespans.iter().filter(|&&m| m < base_min).count(),
                    makespans.len(),
                ),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
    Markdown,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            "markdown" | "markdown-table" | "md" => Ok(ExportFormat::Markdown),
            other => Err(format!("unknown export format {other:?}")),
        }
    }
}

pub fn render(aggregates: &[StrategyAggregate], format: ExportFormat) -> Result<String> {
    match format {
        ExportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for a in aggregates {
                writer.serialize(a).map_err(|e| Error::Io(e.to_string()))?;
            }
            let bytes = writer.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        ExportFormat::Json => Ok(serde_json::to_string_pretty(aggregates)? + "\n"),
        ExportFormat::Markdown => Ok(markdown(aggregates)),
    }
}

pub fn export(aggregates: &[StrategyAggregate], format: ExportFormat, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, render(aggregates, format)?)?;
    Ok(())
}

type Cell = fn(&StrategyAggregate) -> String;

/// One table per trace: metrics as rows, strategies as columns.
fn markdown(aggregates: &[StrategyAggregate]) -> String {
    let mut traces: Vec<&str> = Vec::new();
    for a in aggregates {
        if !traces.contains(&a.trace.as_str()) {
            traces.push(&a.trace);
        }
    }
    let mut out = String::new();
    for trace in traces {
        let cols: Vec<&StrategyAggregate> = aggregates.iter().filter(|a| a.trace == trace).collect();
        let _ = writeln!(out, "### {trace}\n");
        out.push_str("| Metric |");
        for c in &cols {
            let _ = write!(out, " {} |", c.strategy);
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(cols.len()));
        out.push('\n');
        let rows: [(&str, Cell); 6] = [
            ("Median makespan (ms)", |a| a.median_makespan_ms.to_string()),
            ("Min makespan (ms)", |a| a.min_makespan_ms.to_string()),
            ("Std. dev. (ms)", |a| format!("{:.1}", a.stddev_ms)),
            ("Median change vs. baseline (%)", |a| format!("{:.1}", a.median_change_vs_baseline_pct)),
            ("Runs better than baseline median (%)", |a| format!("{:.1}", a.better_than_baseline_median_pct)),
            ("Runs better than baseline min (%)", |a| format!("{:.1}", a.better_than_baseline_min_pct)),
        ];
        for (label, cell) in rows {
            let _ = write!(out, "| {label} |");
            for c in &cols {
                let _ = write!(out, " {} |", cell(c));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
