//! Timestamped load/PV series: CSV input and output, day slicing and
//! synthetic generation.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeDelta};
use mg_dispatch_core::profile::{synth_series, ProfileShape};
use mg_dispatch_core::{DayProfile, Exo, HorizonConfig};

use crate::error::{io, Error, Result};

pub const HEADER: [&str; 3] = ["timestamp", "load_kw", "pv_kw"];
const TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Uniformly spaced load/PV records.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousSeries {
    pub delta_t: f64,
    pub timestamps: Vec<NaiveDateTime>,
    pub values: Vec<Exo>,
}

pub fn step_duration(delta_t: f64) -> Result<TimeDelta> {
    let secs = (delta_t * 3600.0).round();
    if !(secs >= 1.0) || (secs - delta_t * 3600.0).abs() > 1e-6 {
        return Err(Error::Config(format!("delta_t {delta_t} h is not a whole number of seconds")));
    }
    Ok(TimeDelta::seconds(secs as i64))
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    DateTime::parse_from_rfc3339(s)
        .map(|d| d.naive_utc())
        .ok()
        .or_else(|| NaiveDateTime::parse_from_str(s, TIME_FORMAT).ok())
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").ok())
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M").ok())
        .or_else(|| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0)))
}

pub fn format_timestamp(t: &NaiveDateTime) -> String {
    t.format(TIME_FORMAT).to_string()
}

impl ExogenousSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, t: &NaiveDateTime) -> Option<usize> {
        self.timestamps.binary_search(t).ok()
    }

    /// Parses and validates CSV text; `origin` names the source in errors.
    pub fn read(reader: impl Read, delta_t: f64, origin: &Path) -> Result<Self> {
        let step = step_duration(delta_t)?;
        let parse_err = |line: u64, detail: String| Error::Parse { path: origin.to_path_buf(), line, detail };
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        if header.len() == 0 || (header.len() == 1 && header[0].is_empty()) {
            return Err(parse_err(1, "empty file".into()));
        }
        if header.iter().collect::<Vec<_>>() != HEADER {
            return Err(parse_err(1, format!("expected header `{}`", HEADER.join(","))));
        }
        let mut out = Self { delta_t, timestamps: Vec::new(), values: Vec::new() };
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 3 {
                return Err(parse_err(line, format!("expected 3 fields, found {}", rec.len())));
            }
            let ts = parse_timestamp(&rec[0]).ok_or_else(|| parse_err(line, format!("bad timestamp `{}`", &rec[0])))?;
            let num = |i: usize, name: &str| -> Result<f64> {
                let v: f64 = rec[i].parse().map_err(|_| parse_err(line, format!("bad {name} `{}`", &rec[i])))?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("{name} must be finite")));
                }
                if v < 0.0 {
                    return Err(parse_err(line, format!("negative {name} {v}")));
                }
                Ok(v)
            };
            let (load, pv) = (num(1, "load_kw")?, num(2, "pv_kw")?);
            if let Some(prev) = out.timestamps.last() {
                if ts - *prev != step {
                    return Err(Error::Spacing(format!(
                        "{} follows {} (line {line}); expected a step of {} s",
                        format_timestamp(&ts),
                        format_timestamp(prev),
                        step.num_seconds()
                    )));
                }
            }
            out.timestamps.push(ts);
            out.values.push(Exo { load, pv });
        }
        if out.is_empty() {
            return Err(parse_err(2, "no data rows".into()));
        }
        Ok(out)
    }

    pub fn load(path: &Path, delta_t: f64) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(io(path))?;
        Self::read(std::io::BufReader::new(f), delta_t, path)
    }

    pub fn write(&self, writer: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(HEADER)?;
        for (t, v) in self.timestamps.iter().zip(&self.values) {
            w.write_record([format_timestamp(t), v.load.to_string(), v.pv.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(io(path))?;
        self.write(std::io::BufWriter::new(f)).map_err(|e| Error::Io { path: path.into(), source: e.into() })
    }

    /// The `t_steps` pairs from `day_start` plus the `tau` pairs before it.
    pub fn slice_day(&self, day_start: &NaiveDateTime, horizon: &HorizonConfig) -> Result<DayProfile> {
        let idx = self.index_of(day_start).ok_or_else(|| {
            mg_dispatch_core::Error::Insufficient(format!("{} is not in the series", format_timestamp(day_start)))
        })?;
        self.slice_index(idx, horizon)
    }

    pub fn slice_index(&self, idx: usize, horizon: &HorizonConfig) -> Result<DayProfile> {
        let (warm, steps) = (horizon.tau, horizon.t_steps);
        if idx < warm || idx + steps > self.len() {
            return Err(mg_dispatch_core::Error::Insufficient(format!(
                "day starting {} needs {warm} earlier and {steps} following pairs",
                format_timestamp(&self.timestamps[idx.min(self.len() - 1)])
            ))
            .into());
        }
        Ok(DayProfile::new(warm, self.values[idx - warm..idx + steps].to_vec(), false)?)
    }

    /// Synthetic series of `days` whole days starting at `start`.
    pub fn synthetic(seed: u64, days: usize, start: NaiveDateTime, delta_t: f64, shape: &ProfileShape) -> Result<Self> {
        let step = step_duration(delta_t)?;
        let values = synth_series(seed, days, delta_t, shape);
        let timestamps = (0..values.len()).map(|i| start + step * i as i32).collect();
        Ok(Self { delta_t, timestamps, values })
    }
}
