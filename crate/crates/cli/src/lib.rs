//! Helpers shared by the command-line tools.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use cws_core::strategy::StrategyName;
use cws_core::trace::WorkflowTrace;

/// `all`, or a comma-separated list of strategy names.
pub fn parse_strategies(spec: &str) -> Result<Vec<StrategyName>> {
    if spec.trim() == "all" {
        return Ok(StrategyName::all());
    }
    let mut out = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let s: StrategyName = name.parse()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        bail!("no strategies given");
    }
    Ok(out)
}

/// Every `*.json` trace in `dir`, sorted by file name.
pub fn load_traces(dir: &Path) -> Result<Vec<WorkflowTrace>> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .with_context(|| format!("reading trace directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .json traces in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| WorkflowTrace::from_path(p).with_context(|| format!("loading {}", p.display())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_lists() {
        assert_eq!(parse_strategies("all").unwrap().len(), 22);
        let two = parse_strategies("fifo-fair, baseline_default,fifo-fair").unwrap();
        assert_eq!(two, vec!["fifo-fair".parse().unwrap(), StrategyName::BaselineDefault]);
        assert!(parse_strategies("fifo").is_err());
        assert!(parse_strategies(",").is_err());
    }
}
