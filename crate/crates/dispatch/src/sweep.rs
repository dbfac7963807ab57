//! Sweep of the unbalance-to-generation weight ratio.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{io, Result};
use crate::experiment::{run_experiment, write_artifacts, AlgoSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ratio: f64,
    pub k1: f64,
    pub k2: f64,
    pub summary: AlgoSummary,
}

/// The configuration for one ratio: k1 as configured and k2 = ratio * k1.
pub fn ratio_config(base: &RunConfig, ratio: f64) -> RunConfig {
    let mut c = base.clone();
    c.algorithms = vec![base.sweep.algorithm];
    let w = &mut c.grid.weights;
    w.k2 = ratio * w.k1;
    c
}

/// Runs the sweep algorithm once per ratio. With `out`, each ratio's
/// artifacts go to `ratio_<r>/` and the summary to `sweep.json`.
pub fn sweep_k_ratio(base: &RunConfig, out: Option<&Path>) -> Result<Vec<SweepPoint>> {
    let mut points = Vec::new();
    for &ratio in &base.sweep.ratios {
        let cfg = ratio_config(base, ratio);
        let (report, outputs, prep) = run_experiment(&cfg)?;
        if let Some(dir) = out {
            write_artifacts(&dir.join(format!("ratio_{ratio:e}")), &report, &outputs, &prep)?;
        }
        let summary = report.algorithms.into_iter().next().expect("one algorithm per ratio");
        points.push(SweepPoint { ratio, k1: cfg.grid.weights.k1, k2: cfg.grid.weights.k2, summary });
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let path = dir.join("sweep.json");
        let mut text = serde_json::to_string_pretty(&points).expect("sweep serialises");
        text.push('\n');
        std::fs::write(&path, text).map_err(io(&path))?;
    }
    Ok(points)
}
