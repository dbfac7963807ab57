//! Days and episode sources for the four cases.

use mg_dispatch_core::grid::ExoBounds;
use mg_dispatch_core::profile::{EpisodeSource, InitialSoc};
use mg_dispatch_core::{DayProfile, Exo, HorizonConfig};

use crate::config::{Case, RunConfig};
use crate::error::{Error, Result};
use crate::series::{parse_timestamp, ExogenousSeries};

/// A series plus the position of the test day within it.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub series: ExogenousSeries,
    pub test_index: usize,
    pub horizon: HorizonConfig,
}

impl Dataset {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let h = cfg.grid.horizon;
        let per_day = h.t_steps;
        let series = match &cfg.data.csv {
            Some(path) => ExogenousSeries::load(path, h.delta_t)?,
            None => {
                let start = parse_timestamp(&cfg.data.synth_start)
                    .ok_or_else(|| Error::Config(format!("bad data.synth_start `{}`", cfg.data.synth_start)))?;
                // One leading day supplies the earliest warm-up pairs.
                let days = cfg.data.train_days.max(cfg.data.forecast_days) + 2;
                ExogenousSeries::synthetic(cfg.data.synth_seed, days, start, h.delta_t, &cfg.data.shape)?
            }
        };
        let test_index = match &cfg.data.test_day {
            Some(s) => {
                let t = parse_timestamp(s).ok_or_else(|| Error::Config(format!("bad data.test_day `{s}`")))?;
                series.index_of(&t).ok_or_else(|| Error::Config(format!("test day {s} is not in the series")))?
            }
            None => series.len().checked_sub(per_day).ok_or_else(|| {
                mg_dispatch_core::Error::Insufficient(format!("series shorter than one day of {per_day} steps"))
            })?,
        };
        let ds = Self { series, test_index, horizon: h };
        ds.test_day()?;
        Ok(ds)
    }

    pub fn test_day(&self) -> Result<DayProfile> {
        self.series.slice_index(self.test_index, &self.horizon)
    }

    /// The `n` whole days immediately before the test day, most recent last.
    pub fn train_days(&self, n: usize) -> Result<Vec<DayProfile>> {
        let per_day = self.horizon.t_steps;
        (1..=n)
            .rev()
            .map(|k| {
                let idx = self.test_index.checked_sub(k * per_day).ok_or_else(|| {
                    mg_dispatch_core::Error::Insufficient(format!("no data for training day {k} before the test day"))
                })?;
                self.series.slice_index(idx, &self.horizon)
            })
            .collect()
    }

    pub fn source(&self, case: Case, train_days: usize, initial_soc: InitialSoc) -> Result<EpisodeSource> {
        if case.same_day() {
            Ok(EpisodeSource::same_day(self.test_day()?, initial_soc))
        } else {
            Ok(EpisodeSource::history_days(self.train_days(train_days)?, self.test_day()?, initial_soc)?)
        }
    }

    /// Up to `days` whole days of pairs that precede the test day.
    pub fn history(&self, days: usize) -> &[Exo] {
        let start = self.test_index.saturating_sub(days * self.horizon.t_steps);
        &self.series.values[start..self.test_index]
    }

    /// Everything realised before the test day's first step.
    pub fn past(&self) -> &[Exo] {
        &self.series.values[..self.test_index]
    }

    /// Input scaling ranges from every pair the case can see.
    pub fn bounds(&self, source: &EpisodeSource) -> ExoBounds {
        ExoBounds::from_pairs(source.all_pairs())
    }
}
