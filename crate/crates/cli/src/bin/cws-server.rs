use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use cws_core::clock::ScaledWallClock;
use cws_core::log::write_jsonl;
use cws_core::sim::ClusterConfig;
use cws_core::{Millicores, Scheduler};
use cws_server::{serve, AppState, TimeSource};

/// Serve the workflow-aware scheduler over HTTP, backed by a simulated cluster.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Bind address. CWS_LISTEN, when set, takes precedence.
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: String,
    /// Cluster description (JSON). Defaults to 4 nodes with 4 cores and 16 GiB each.
    #[arg(long)]
    cluster: Option<PathBuf>,
    /// Simulated milliseconds per wall-clock millisecond.
    #[arg(long, default_value_t = 1.0)]
    time_scale: f64,
    /// Write the decision log (JSON Lines) here on shutdown.
    #[arg(long)]
    decision_log: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> Result<()> {
    let args = Args::parse();
    let listen = std::env::var("CWS_LISTEN").unwrap_or(args.listen);
    let cluster = match &args.cluster {
        Some(p) => ClusterConfig::from_path(p)?,
        None => ClusterConfig::uniform(4, Millicores::from_cores(4), 16 << 30),
    };
    anyhow::ensure!(args.time_scale > 0.0, "--time-scale must be positive");
    let state = AppState::new(
        Scheduler::new(&cluster)?,
        TimeSource::Wall(ScaledWallClock::new(args.time_scale)),
    );
    let listener = tokio::net::TcpListener::bind(&listen)
        .await
        .with_context(|| format!("binding {listen}"))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    serve(listener, state.clone(), async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    if let Some(path) = args.decision_log {
        let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_jsonl(state.scheduler().log(), std::io::BufWriter::new(file))?;
    }
    Ok(())
}
