//! Recurrent next-day load/PV forecaster.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{config, Error, Result};
use crate::grid::ExoBounds;
use crate::math::clamp;
use crate::nn::{opt_step, Activation, Adam, NetSpec, OptimizerConfig, ParamSet, RecurrentSpec, Tape};
use crate::profile::Exo;
use crate::rng::{stream, TAG_FORECAST};

/// Anything that can extend a realised load/PV series.
pub trait Forecast {
    /// Predicts the `len` pairs that follow `known` (all pairs realised so far).
    fn predict(&mut self, known: &[Exo], len: usize) -> Result<Vec<Exo>>;
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields, default))]
pub struct ForecastConfig {
    /// Past steps fed to the network.
    pub window: usize,
    pub lstm: usize,
    pub dense: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self { window: 24, lstm: 16, dense: alloc::vec![32], lr: 3e-3, epochs: 150, batch: 16 }
    }
}

impl ForecastConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.lstm == 0 || self.batch == 0 || self.epochs == 0 {
            return Err(config("forecaster sizes and epochs must be at least 1"));
        }
        if !(self.lr > 0.0) {
            return Err(config("forecaster learning rate must be positive"));
        }
        Ok(())
    }
}

/// Normalised mean squared error per feature on the training windows.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForecastReport {
    pub mse_load: f64,
    pub mse_pv: f64,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct Forecaster {
    spec: NetSpec,
    params: ParamSet,
    bounds: ExoBounds,
    window: usize,
    horizon: usize,
    tape: Tape,
}

fn scale(b: &ExoBounds, e: Exo) -> [f64; 2] {
    [(e.load - b.load_min) / (b.load_max - b.load_min), (e.pv - b.pv_min) / (b.pv_max - b.pv_min)]
}

fn unscale(b: &ExoBounds, load: f64, pv: f64) -> Exo {
    Exo {
        load: (b.load_min + load * (b.load_max - b.load_min)).max(0.0),
        pv: (b.pv_min + pv * (b.pv_max - b.pv_min)).max(0.0),
    }
}

fn window_input(b: &ExoBounds, known: &[Exo], window: usize) -> Vec<f64> {
    let start = known.len().saturating_sub(window);
    let pad = window - (known.len() - start);
    let mut x = Vec::with_capacity(2 * window);
    for _ in 0..pad {
        x.extend_from_slice(&scale(b, known[start]));
    }
    for &e in &known[start..] {
        x.extend_from_slice(&scale(b, e));
    }
    x
}

/// Fits a forecaster of the next `horizon` pairs on every window of the
/// consecutive `series`.
pub fn forecaster_train(
    series: &[Exo],
    horizon: usize,
    bounds: ExoBounds,
    cfg: &ForecastConfig,
    seed: u64,
) -> Result<(Forecaster, ForecastReport)> {
    cfg.validate()?;
    if horizon == 0 || series.len() < 2 * horizon || series.len() < cfg.window + horizon + 1 {
        return Err(Error::Insufficient(alloc::format!(
            "forecaster needs at least two days and one full window, got {} pairs",
            series.len()
        )));
    }
    let spec = NetSpec::Recurrent(RecurrentSpec::new(2, &[cfg.lstm], &cfg.dense, 2 * horizon, Activation::Identity));
    spec.validate()?;
    let mut rng = stream(seed, TAG_FORECAST);
    let mut params = spec.init_params(&mut rng);
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (cfg.window..=series.len() - horizon)
        .map(|i| {
            let x = window_input(&bounds, &series[i - cfg.window..i], cfg.window);
            let y = series[i..i + horizon].iter().flat_map(|&e| scale(&bounds, e)).collect();
            (x, y)
        })
        .collect();
    let mut adam = Adam::new(params.len());
    let opt = OptimizerConfig::with_lr(cfg.lr);
    let mut tape = Tape::new();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut grad = alloc::vec![0.0; 2 * horizon];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch) {
            params.zero_grad();
            let n = (chunk.len() * 2 * horizon) as f64;
            for &i in chunk {
                let (x, y) = &samples[i];
                let out = spec.forward(&params, x, &[], &mut tape)?;
                for (g, (o, t)) in grad.iter_mut().zip(out.iter().zip(y)) {
                    *g = 2.0 * (o - t) / n;
                }
                spec.backward(&mut params, &mut tape, &grad, true)?;
            }
            opt_step(&mut params, &mut adam, &opt);
        }
        if !params.is_finite() {
            return Err(Error::Diverged { step: 0, detail: "forecaster parameters became non-finite".into() });
        }
    }
    let (mut sl, mut sp) = (0.0, 0.0);
    for (x, y) in &samples {
        let out = spec.forward(&params, x, &[], &mut tape)?;
        for k in 0..horizon {
            sl += (out[2 * k] - y[2 * k]) * (out[2 * k] - y[2 * k]);
            sp += (out[2 * k + 1] - y[2 * k + 1]) * (out[2 * k + 1] - y[2 * k + 1]);
        }
    }
    let n = (samples.len() * horizon) as f64;
    let report = ForecastReport { mse_load: sl / n, mse_pv: sp / n, samples: samples.len() };
    Ok((Forecaster { spec, params, bounds, window: cfg.window, horizon, tape }, report))
}

impl Forecaster {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// A full horizon of pairs following `known`.
    pub fn predict_day(&mut self, known: &[Exo]) -> Result<Vec<Exo>> {
        if known.is_empty() {
            return Err(Error::Insufficient("forecaster needs at least one realised pair".into()));
        }
        let x = window_input(&self.bounds, known, self.window);
        let out = self.spec.forward(&self.params, &x, &[], &mut self.tape)?;
        Ok(out.chunks(2).map(|c| unscale(&self.bounds, c[0], c[1])).collect())
    }
}

impl Forecast for Forecaster {
    fn predict(&mut self, known: &[Exo], len: usize) -> Result<Vec<Exo>> {
        if len > self.horizon {
            return Err(Error::Contract(alloc::format!("forecast of {len} steps exceeds horizon {}", self.horizon)));
        }
        let mut day = self.predict_day(known)?;
        day.truncate(len);
        Ok(day)
    }
}

/// Perfect foresight over a fixed series, for ablations and tests. The
/// series must start where the realised pairs handed to `predict` start.
#[derive(Debug, Clone)]
pub struct OracleForecast {
    pub series: Vec<Exo>,
}

impl Forecast for OracleForecast {
    fn predict(&mut self, known: &[Exo], len: usize) -> Result<Vec<Exo>> {
        let last = *self.series.last().ok_or_else(|| Error::Insufficient("empty oracle series".into()))?;
        Ok((known.len()..known.len() + len).map(|i| self.series.get(i).copied().unwrap_or(last)).collect())
    }
}

/// Wraps another forecaster and scales the predicted load, for sensitivity studies.
#[derive(Debug, Clone)]
pub struct BiasedForecast<F> {
    pub inner: F,
    pub load_factor: f64,
}

impl<F: Forecast> Forecast for BiasedForecast<F> {
    fn predict(&mut self, known: &[Exo], len: usize) -> Result<Vec<Exo>> {
        let mut p = self.inner.predict(known, len)?;
        for e in &mut p {
            e.load = clamp(e.load * self.load_factor, 0.0, f64::MAX);
        }
        Ok(p)
    }
}
