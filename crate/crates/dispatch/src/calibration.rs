//! Critic estimates against realised returns-to-go.

use std::path::Path;

use mg_dispatch_core::drl::{run_episode, BundleKind, CriticSet, Encoded, Observability, PolicyBundle};
use mg_dispatch_core::nn::Tape;
use mg_dispatch_core::{DayProfile, MicrogridConfig, State};
use serde::Serialize;

use crate::error::{io, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationPoint {
    pub episode: usize,
    /// One-based step.
    pub t: usize,
    /// Critic estimate in return units.
    pub estimate: f64,
    pub realized: f64,
}

/// Runs `bundle` from each charge in `socs` and pairs `value(t, x, u)` with
/// the realised return-to-go at every step where `value` answers.
pub fn calibrate_with(
    bundle: &PolicyBundle,
    day: &DayProfile,
    socs: &[f64],
    grid: &MicrogridConfig,
    value: &mut dyn FnMut(usize, &Encoded, f64) -> Result<Option<f64>>,
) -> Result<Vec<CalibrationPoint>> {
    let gamma = grid.horizon.gamma;
    let mut tape = Tape::new();
    let mut out = Vec::new();
    for (episode, &soc) in socs.iter().enumerate() {
        let trace = run_episode(&mut bundle.controller(), day, soc, grid)?;
        let mut togo = vec![0.0; trace.rows.len() + 1];
        for (t, r) in trace.rows.iter().enumerate().rev() {
            togo[t] = r.reward + gamma * togo[t + 1];
        }
        for (t, row) in trace.rows.iter().enumerate() {
            let Some(actor) = bundle.actor_for(t) else { continue };
            let x = match bundle.kind.observability() {
                Observability::Full => bundle.norm.state(&State { p_load: row.p_load, p_pv: row.p_pv, soc: row.soc }),
                Observability::Partial => bundle.norm.history(&day.history(t, grid.horizon.tau, row.soc)),
            };
            let u = bundle.spec.forward(actor, &x.main, &x.side, &mut tape)?[0];
            if let Some(q) = value(t, &x, u)? {
                out.push(CalibrationPoint { episode, t: t + 1, estimate: q, realized: togo[t] });
            }
        }
    }
    Ok(out)
}

/// [`calibrate_with`] using the trained critics, rescaled to return units.
pub fn qvalue_calibration(
    bundle: &PolicyBundle,
    critics: &CriticSet,
    day: &DayProfile,
    socs: &[f64],
    grid: &MicrogridConfig,
) -> Result<Vec<CalibrationPoint>> {
    let stationary = matches!(bundle.kind, BundleKind::Stationary | BundleKind::StationaryRecurrent);
    let mut tape = Tape::new();
    let mut aux = Vec::new();
    let mut value = |t: usize, x: &Encoded, u: f64| -> Result<Option<f64>> {
        let idx = if stationary { 0 } else { t };
        let Some(q) = critics.critics.get(idx) else { return Ok(None) };
        aux.clear();
        aux.extend_from_slice(&x.side);
        aux.push(u);
        let v = critics.spec.forward(q, &x.main, &aux, &mut tape)?[0];
        Ok(Some(v / critics.reward_scale))
    };
    calibrate_with(bundle, day, socs, grid, &mut value)
}

pub fn save_calibration(path: &Path, points: &[CalibrationPoint]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(io(path))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
    let mut go = || -> csv::Result<()> {
        for p in points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    };
    go().map_err(|e| Error::Io { path: path.to_path_buf(), source: e.into() })
}

/// Pearson correlation between estimates and realisations.
pub fn correlation(points: &[CalibrationPoint]) -> f64 {
    let est: Vec<f64> = points.iter().map(|p| p.estimate).collect();
    let real: Vec<f64> = points.iter().map(|p| p.realized).collect();
    mg_dispatch_core::stats::correlation(&est, &real)
}
