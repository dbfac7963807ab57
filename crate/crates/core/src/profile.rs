//! Exogenous load/PV data arranged per episode day.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;

use crate::error::{config, Error, Result};
use crate::grid::{BatteryParams, History, HorizonConfig, Observation, State};
use crate::math::{clamp, exp, libm_cos, libm_sin, wrap24};
use crate::rng::{self, Rng};

/// One step's aggregated load and PV output (kW).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Exo {
    pub load: f64,
    pub pv: f64,
}

/// The load/PV pairs of one episode day, preceded by the warm-up pairs that
/// feed the first step's history.
///
/// Step `t` (zero-based) sees `current(t)`; its lagged window is the `tau`
/// pairs immediately before it, so the warm-up holds `tau` pairs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DayProfile {
    warmup: usize,
    pairs: Vec<Exo>,
    /// Warm-up pairs were synthesised by repeating the earliest real pair.
    pub padded: bool,
}

impl DayProfile {
    pub fn new(warmup: usize, pairs: Vec<Exo>, padded: bool) -> Result<Self> {
        if pairs.len() <= warmup {
            return Err(Error::Insufficient(alloc::format!(
                "day profile needs more than {warmup} pairs, got {}",
                pairs.len()
            )));
        }
        Ok(Self { warmup, pairs, padded })
    }

    /// Slices `steps` pairs starting at `start`, taking `warmup` preceding pairs
    /// when they exist and padding with the earliest available pair otherwise.
    pub fn from_series(series: &[Exo], start: usize, steps: usize, warmup: usize) -> Result<Self> {
        if start + steps > series.len() || steps == 0 {
            return Err(Error::Insufficient(alloc::format!(
                "series of {} pairs cannot supply {steps} steps from index {start}",
                series.len()
            )));
        }
        let have = start.min(warmup);
        let mut pairs = Vec::with_capacity(warmup + steps);
        let first = series[start - have];
        pairs.extend(core::iter::repeat_n(first, warmup - have));
        pairs.extend_from_slice(&series[start - have..start + steps]);
        Self::new(warmup, pairs, have < warmup)
    }

    pub fn warmup(&self) -> usize {
        self.warmup
    }

    pub fn steps(&self) -> usize {
        self.pairs.len() - self.warmup
    }

    pub fn pairs(&self) -> &[Exo] {
        &self.pairs
    }

    /// The day's own pairs without warm-up.
    pub fn day(&self) -> &[Exo] {
        &self.pairs[self.warmup..]
    }

    /// Realised pair of step `t`.
    pub fn current(&self, t: usize) -> Exo {
        self.pairs[self.warmup + t]
    }

    /// Realised pair of step `t - 1` (the warm-up tail for `t = 0`).
    pub fn lagged(&self, t: usize) -> Exo {
        self.pairs[self.warmup + t - 1]
    }

    /// The `tau` pairs preceding step `t`, oldest first.
    pub fn window(&self, t: usize, tau: usize) -> &[Exo] {
        let end = self.warmup + t;
        &self.pairs[end - tau..end]
    }

    /// Every step's lagged pair, i.e. the trajectory a partially observing
    /// planner knows about in advance.
    pub fn lagged_day(&self) -> Vec<Exo> {
        (0..self.steps()).map(|t| self.lagged(t)).collect()
    }

    pub fn state(&self, t: usize, soc: f64) -> State {
        State::new(self.current(t), soc)
    }

    /// Pair the environment moves to after step `t`; the last step repeats itself.
    pub fn next_exo(&self, t: usize) -> Exo {
        if t + 1 < self.steps() {
            self.current(t + 1)
        } else {
            self.current(t)
        }
    }

    /// History input of step `t` with window `tau` and current charge `soc`.
    pub fn history(&self, t: usize, tau: usize, soc: f64) -> History {
        let w = self.window(t, tau);
        let head = Observation { p_load_prev: w[tau - 1].load, p_pv_prev: w[tau - 1].pv, soc };
        History::new(w[..tau - 1].iter().copied(), head)
    }
}

/// Qualitative shape of the synthetic diurnal curves.
///
/// Load falls from midnight to an early-morning trough, rises through a
/// midday hump to an evening peak; PV is zero at night and follows a truncated
/// bell between `pv_start_hour` and `pv_end_hour`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields, default))]
pub struct ProfileShape {
    pub load_base: f64,
    pub night_amplitude: f64,
    pub night_width: f64,
    pub midday_amplitude: f64,
    pub midday_hour: f64,
    pub midday_width: f64,
    pub evening_amplitude: f64,
    pub evening_peak_hour: f64,
    pub evening_width: f64,
    pub pv_peak: f64,
    pub pv_start_hour: f64,
    pub pv_peak_hour: f64,
    pub pv_end_hour: f64,
    /// Bound of the per-point multiplicative noise.
    pub noise: f64,
    /// Bound of the per-day multiplicative level shift of load and PV.
    pub day_spread: f64,
}

impl Default for ProfileShape {
    fn default() -> Self {
        Self {
            load_base: 250.0,
            night_amplitude: 90.0,
            night_width: 3.5,
            midday_amplitude: 180.0,
            midday_hour: 12.0,
            midday_width: 3.0,
            evening_amplitude: 450.0,
            evening_peak_hour: 18.0,
            evening_width: 2.0,
            pv_peak: 250.0,
            pv_start_hour: 8.0,
            pv_peak_hour: 14.0,
            pv_end_hour: 19.0,
            noise: 0.02,
            day_spread: 0.0,
        }
    }
}

fn bump(h: f64, center: f64, width: f64) -> f64 {
    // Circular distance on the 24 h clock.
    let mut d = wrap24(h - center);
    if d > 12.0 {
        d = 24.0 - d;
    }
    exp(-0.5 * (d / width) * (d / width))
}

impl ProfileShape {
    /// Noise-free load at clock hour `h`.
    pub fn load_at(&self, h: f64) -> f64 {
        let h = wrap24(h);
        self.load_base
            + self.night_amplitude * bump(h, 0.0, self.night_width)
            + self.midday_amplitude * bump(h, self.midday_hour, self.midday_width)
            + self.evening_amplitude * bump(h, self.evening_peak_hour, self.evening_width)
    }

    /// Noise-free PV output at clock hour `h`.
    pub fn pv_at(&self, h: f64) -> f64 {
        let h = wrap24(h);
        if h <= self.pv_start_hour || h >= self.pv_end_hour {
            0.0
        } else if h <= self.pv_peak_hour {
            self.pv_peak * libm_sin(0.5 * PI * (h - self.pv_start_hour) / (self.pv_peak_hour - self.pv_start_hour))
        } else {
            self.pv_peak * libm_cos(0.5 * PI * (h - self.pv_peak_hour) / (self.pv_end_hour - self.pv_peak_hour))
        }
    }

    /// Step index (zero-based, day starting at midnight) of the evening peak.
    pub fn evening_peak_step(&self, delta_t: f64) -> usize {
        libm::round(self.evening_peak_hour / delta_t) as usize
    }
}

fn noisy(rng: &mut Rng, x: f64, bound: f64) -> f64 {
    if bound <= 0.0 {
        return x;
    }
    x * (1.0 + rng.random_range(-bound..=bound))
}

/// Consecutive synthetic days as one series, `round(24 / delta_t)` pairs per day.
///
/// Day `d` draws its level shifts and point noise from its own stream, so a
/// prefix of a longer series equals the shorter series.
pub fn synth_series(seed: u64, days: usize, delta_t: f64, shape: &ProfileShape) -> Vec<Exo> {
    let per_day = libm::round(24.0 / delta_t) as usize;
    let mut out = Vec::with_capacity(days * per_day);
    for d in 0..days {
        let mut rng = rng::stream(seed, 1000 + d as u64);
        let (ls, ps) = if shape.day_spread > 0.0 {
            (
                1.0 + rng.random_range(-shape.day_spread..=shape.day_spread),
                1.0 + rng.random_range(-shape.day_spread..=shape.day_spread),
            )
        } else {
            (1.0, 1.0)
        };
        for k in 0..per_day {
            let h = k as f64 * delta_t;
            let load = noisy(&mut rng, ls * shape.load_at(h), shape.noise);
            let pv = noisy(&mut rng, ps * shape.pv_at(h), shape.noise).max(0.0);
            out.push(Exo { load: load.max(0.0), pv });
        }
    }
    out
}

/// One synthetic episode day whose first step falls at midnight, with warm-up
/// pairs drawn from the tail of a synthetic preceding day.
pub fn synth_profile(seed: u64, horizon: &HorizonConfig, shape: &ProfileShape) -> DayProfile {
    let warmup = horizon.tau;
    let mut rng = rng::stream(seed, 999);
    let mut pairs = Vec::with_capacity(warmup + horizon.t_steps);
    for k in 0..warmup + horizon.t_steps {
        let h = (k as f64 - warmup as f64) * horizon.delta_t;
        let load = noisy(&mut rng, shape.load_at(h), shape.noise);
        let pv = noisy(&mut rng, shape.pv_at(h), shape.noise).max(0.0);
        pairs.push(Exo { load: load.max(0.0), pv });
    }
    DayProfile { warmup, pairs, padded: false }
}

/// How the battery charge of an episode's first step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum InitialSoc {
    Fixed(f64),
    /// Uniform over the battery's rated range.
    Uniform,
    /// Uniform over `[lo, hi]`, which must lie in the rated range.
    Between(f64, f64),
}

impl InitialSoc {
    pub fn validate(&self, bat: &BatteryParams) -> Result<()> {
        let inside = |v: f64| v >= bat.e_min && v <= bat.e_max;
        match *self {
            InitialSoc::Fixed(v) if !inside(v) => {
                Err(config(alloc::format!("initial soc {v} outside [{}, {}]", bat.e_min, bat.e_max)))
            }
            InitialSoc::Between(lo, hi) if !(inside(lo) && inside(hi) && lo <= hi) => {
                Err(config(alloc::format!("initial soc range [{lo}, {hi}] invalid")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, bat: &BatteryParams, rng: &mut Rng) -> Result<f64> {
        self.validate(bat)?;
        let (lo, hi) = match *self {
            InitialSoc::Fixed(v) => return Ok(v),
            InitialSoc::Uniform => (bat.e_min, bat.e_max),
            InitialSoc::Between(lo, hi) => (lo, hi),
        };
        if lo == hi {
            return Ok(lo);
        }
        Ok(clamp(rng.random_range(lo..=hi), lo, hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceMode {
    SameDay,
    HistoryDays,
}

/// Where training and evaluation episodes come from.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSource {
    mode: SourceMode,
    train: Vec<DayProfile>,
    test: DayProfile,
    pub initial_soc: InitialSoc,
}

impl EpisodeSource {
    /// Train and evaluate on the same day.
    pub fn same_day(day: DayProfile, initial_soc: InitialSoc) -> Self {
        Self { mode: SourceMode::SameDay, train: alloc::vec![day.clone()], test: day, initial_soc }
    }

    /// Train on past days, evaluate on a held-out day.
    pub fn history_days(train: Vec<DayProfile>, test: DayProfile, initial_soc: InitialSoc) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Insufficient("history mode needs at least one training day".into()));
        }
        if train.iter().any(|d| d.day() == test.day()) {
            return Err(config("training days must differ from the test day"));
        }
        if train.iter().any(|d| d.steps() != test.steps() || d.warmup() != test.warmup()) {
            return Err(config("training and test days must share steps and warm-up"));
        }
        Ok(Self { mode: SourceMode::HistoryDays, train, test, initial_soc })
    }

    pub fn mode(&self) -> SourceMode {
        self.mode
    }

    pub fn train_days(&self) -> &[DayProfile] {
        &self.train
    }

    pub fn test_day(&self) -> &DayProfile {
        &self.test
    }

    pub fn sample_train_day(&self, rng: &mut Rng) -> &DayProfile {
        &self.train[self.sample_train_index(rng)]
    }

    /// Index into [`train_days`](Self::train_days) drawn uniformly. A single
    /// training day consumes no randomness.
    pub fn sample_train_index(&self, rng: &mut Rng) -> usize {
        if self.train.len() == 1 {
            return 0;
        }
        rng.random_range(0..self.train.len())
    }

    pub fn all_pairs(&self) -> impl Iterator<Item = &Exo> {
        self.train.iter().chain(core::iter::once(&self.test)).flat_map(|d| d.pairs().iter())
    }
}
