//! CSV export of episode traces and training curves.

use std::io::{Read, Write};
use std::path::Path;

use mg_dispatch_core::drl::{CurvePoint, EpisodeTrace, TraceRow};

use crate::error::{io, Error, Result};

pub const TRACE_HEADER: [&str; 8] = ["t", "p_load", "p_pv", "soc", "p_dg", "c_dg", "c_us", "reward"];
pub const CURVE_HEADER: [&str; 5] = ["step", "episode", "critic_loss", "mean_q", "eval_return"];

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source: e.into() }
}

pub fn write_trace(writer: impl Write, trace: &EpisodeTrace) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER)?;
    for r in &trace.rows {
        w.write_record([
            r.t.to_string(),
            r.p_load.to_string(),
            r.p_pv.to_string(),
            r.soc.to_string(),
            r.p_dg.to_string(),
            r.c_dg.to_string(),
            r.c_us.to_string(),
            r.reward.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trace(path: &Path, trace: &EpisodeTrace) -> Result<()> {
    let f = std::fs::File::create(path).map_err(io(path))?;
    write_trace(std::io::BufWriter::new(f), trace).map_err(|e| csv_err(path, e))
}

/// Reads rows written by [`write_trace`]. The initial charge is the first
/// row's `soc` and the return the sum of rewards.
pub fn read_trace(reader: impl Read, origin: &Path) -> Result<EpisodeTrace> {
    let mut rdr = csv::Reader::from_reader(reader);
    let perr = |line: u64, detail: String| Error::Parse { path: origin.to_path_buf(), line, detail };
    let header = rdr.headers().map_err(|e| perr(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(perr(1, format!("expected header `{}`", TRACE_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| perr(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| perr(line, format!("bad number `{}`", &rec[i]))) };
        rows.push(TraceRow {
            t: rec[0].parse().map_err(|_| perr(line, format!("bad step `{}`", &rec[0])))?,
            p_load: f(1)?,
            p_pv: f(2)?,
            soc: f(3)?,
            p_dg: f(4)?,
            c_dg: f(5)?,
            c_us: f(6)?,
            reward: f(7)?,
        });
    }
    let initial_soc = rows.first().map_or(f64::NAN, |r| r.soc);
    let ret = rows.iter().map(|r| r.reward).sum();
    Ok(EpisodeTrace { initial_soc, rows, ret })
}

pub fn save_curve(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(io(path))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    let mut go = || -> csv::Result<()> {
        w.write_record(CURVE_HEADER)?;
        for p in curve {
            w.write_record([
                p.step.to_string(),
                p.episode.to_string(),
                p.critic_loss.to_string(),
                p.mean_q.to_string(),
                opt(p.eval_return),
            ])?;
        }
        w.flush()?;
        Ok(())
    };
    go().map_err(|e| csv_err(path, e))
}
