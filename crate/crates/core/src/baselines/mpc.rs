//! Receding-horizon planning on forecasts.

use alloc::vec::Vec;

use super::forecast::Forecast;
use super::ilqg::{ilqg_plan_from, SmoothingConfig};
use crate::drl::{Controller, Observability, PolicyInput};
use crate::error::{Error, Result};
use crate::grid::MicrogridConfig;
use crate::profile::Exo;

/// Re-plans the rest of the day at every step and applies the first action.
///
/// With full observability the current step's realised pair replaces the
/// forecast for that step; otherwise every remaining step is forecast from
/// the lagged pairs seen so far.
pub struct MpcController<F> {
    forecaster: F,
    past: Vec<Exo>,
    known: Vec<Exo>,
    cfg: MicrogridConfig,
    sm: SmoothingConfig,
    observability: Observability,
    prev: Vec<f64>,
}

impl<F: Forecast> MpcController<F> {
    /// `past` holds the realised pairs up to the step before the episode's first.
    pub fn new(forecaster: F, past: Vec<Exo>, cfg: MicrogridConfig, sm: SmoothingConfig, observability: Observability) -> Self {
        Self { forecaster, known: past.clone(), past, cfg, sm, observability, prev: Vec::new() }
    }

    /// One receding-horizon decision from `soc` at step `t` given the exogenous
    /// trajectory believed for steps `t..T`.
    fn decide(&mut self, soc: f64, exo: &[Exo]) -> Result<f64> {
        let warm = (self.prev.len() == exo.len() + 1).then(|| self.prev[1..].to_vec());
        let plan = ilqg_plan_from(soc, exo, &self.cfg, &self.sm, warm.as_deref())?;
        self.prev = plan.actions;
        Ok(self.prev[0])
    }
}

impl<F: Forecast> Controller for MpcController<F> {
    fn observability(&self) -> Observability {
        self.observability
    }

    fn reset(&mut self, _initial_soc: f64) -> Result<()> {
        self.known.clone_from(&self.past);
        self.prev.clear();
        Ok(())
    }

    fn act(&mut self, t: usize, input: PolicyInput<'_>) -> Result<f64> {
        let steps = self.cfg.horizon.t_steps;
        if t >= steps {
            return Err(Error::Contract(alloc::format!("step {} beyond horizon {steps}", t + 1)));
        }
        let remaining = steps - t;
        match input {
            PolicyInput::Full(s) => {
                self.known.push(s.exo());
                let mut exo = alloc::vec![s.exo()];
                if remaining > 1 {
                    exo.extend(self.forecaster.predict(&self.known, remaining - 1)?);
                }
                self.decide(s.soc, &exo)
            }
            PolicyInput::Partial(h) => {
                if t > 0 {
                    self.known.push(h.head().lagged());
                }
                let exo = self.forecaster.predict(&self.known, remaining)?;
                self.decide(h.head().soc, &exo)
            }
        }
    }
}
