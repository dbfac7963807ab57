//! Executing policies on a day and the trained-policy container.

use alloc::string::ToString;
use alloc::vec::Vec;

use super::encode::Normalizer;
use crate::baselines::myopic_action;
use crate::error::{Error, Result};
use crate::grid::{env_step, episode_return, History, MicrogridConfig, State};
use crate::math::clamp;
use crate::nn::{NetSpec, ParamSet, Tape};
use crate::profile::DayProfile;

/// What a controller is allowed to see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Observability {
    /// The current step's load and PV plus the charge.
    Full,
    /// Only lagged load and PV plus the charge.
    Partial,
}

/// The per-step input handed to a controller. Partially observing
/// controllers are only ever given a history, so they cannot read the
/// current step's exogenous values.
#[derive(Debug, Clone, Copy)]
pub enum PolicyInput<'a> {
    Full(&'a State),
    Partial(&'a History),
}

pub trait Controller {
    fn observability(&self) -> Observability;

    /// Called once before the first step of an episode.
    fn reset(&mut self, _initial_soc: f64) -> Result<()> {
        Ok(())
    }

    /// Generator output for zero-based step `t`.
    fn act(&mut self, t: usize, input: PolicyInput<'_>) -> Result<f64>;
}

/// One executed step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRow {
    /// One-based step index.
    pub t: usize,
    pub p_load: f64,
    pub p_pv: f64,
    /// Charge at the start of the step.
    pub soc: f64,
    pub p_dg: f64,
    pub c_dg: f64,
    pub c_us: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub initial_soc: f64,
    pub rows: Vec<TraceRow>,
    pub ret: f64,
}

impl EpisodeTrace {
    pub fn total_c_dg(&self) -> f64 {
        self.rows.iter().map(|r| r.c_dg).sum()
    }

    pub fn total_c_us(&self) -> f64 {
        self.rows.iter().map(|r| r.c_us).sum()
    }

    pub fn actions(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.p_dg).collect()
    }
}

/// Runs `ctrl` noise-free through one day from `initial_soc`.
pub fn run_episode(
    ctrl: &mut dyn Controller,
    day: &DayProfile,
    initial_soc: f64,
    cfg: &MicrogridConfig,
) -> Result<EpisodeTrace> {
    let steps = cfg.horizon.t_steps;
    let tau = cfg.horizon.tau;
    if day.steps() < steps || day.warmup() < tau {
        return Err(Error::Insufficient(alloc::format!(
            "day has {} steps and {} warm-up pairs, need {steps} and {tau}",
            day.steps(),
            day.warmup()
        )));
    }
    ctrl.reset(initial_soc)?;
    let mut state = day.state(0, initial_soc);
    let mut rows = Vec::with_capacity(steps);
    let mut rewards = Vec::with_capacity(steps);
    for t in 0..steps {
        let raw = match ctrl.observability() {
            Observability::Full => ctrl.act(t, PolicyInput::Full(&state))?,
            Observability::Partial => {
                let h = day.history(t, tau, state.soc);
                ctrl.act(t, PolicyInput::Partial(&h))?
            }
        };
        if !raw.is_finite() {
            return Err(Error::Contract(alloc::format!("controller produced {raw} at step {}", t + 1)));
        }
        let p = clamp(raw, cfg.dg.p_min, cfg.dg.p_max);
        let next = if t + 1 < steps { day.current(t + 1) } else { day.current(t) };
        let (s2, out) = env_step(&state, p, next, cfg)?;
        rows.push(TraceRow {
            t: t + 1,
            p_load: state.p_load,
            p_pv: state.p_pv,
            soc: state.soc,
            p_dg: p,
            c_dg: out.c_dg,
            c_us: out.c_us,
            reward: out.reward,
        });
        rewards.push(out.reward);
        state = s2;
    }
    let ret = episode_return(&rewards, cfg.horizon.gamma, steps)?;
    Ok(EpisodeTrace { initial_soc, rows, ret })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum BundleKind {
    /// One feed-forward actor for every step.
    Stationary,
    /// One recurrent actor for every step.
    StationaryRecurrent,
    /// One feed-forward actor per step except the last, which is myopic.
    TimeIndexed,
    /// One recurrent actor per step.
    TimeIndexedRecurrent,
}

impl BundleKind {
    pub fn observability(self) -> Observability {
        match self {
            BundleKind::Stationary | BundleKind::TimeIndexed => Observability::Full,
            BundleKind::StationaryRecurrent | BundleKind::TimeIndexedRecurrent => Observability::Partial,
        }
    }

    /// Number of trained actors for a horizon of `steps`.
    pub fn actor_count(self, steps: usize) -> usize {
        match self {
            BundleKind::Stationary | BundleKind::StationaryRecurrent => 1,
            BundleKind::TimeIndexed => steps - 1,
            BundleKind::TimeIndexedRecurrent => steps,
        }
    }
}

/// Trained actors plus what is needed to run them.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyBundle {
    pub kind: BundleKind,
    pub spec: NetSpec,
    pub actors: Vec<ParamSet>,
    pub norm: Normalizer,
    pub grid: MicrogridConfig,
}

impl PolicyBundle {
    pub fn validate(&self) -> Result<()> {
        let want = self.kind.actor_count(self.grid.horizon.t_steps);
        if self.actors.len() != want {
            return Err(Error::Shape { what: "actor count", expected: want, got: self.actors.len() });
        }
        let recurrent = matches!(self.spec, NetSpec::Recurrent(_));
        if recurrent != (self.kind.observability() == Observability::Partial) {
            return Err(Error::KindMismatch("network type does not match bundle kind".to_string()));
        }
        let n: usize = self.spec.layout().iter().map(|b| b.len()).sum();
        if self.actors.iter().any(|a| a.len() != n) {
            return Err(Error::Shape { what: "actor parameters", expected: n, got: 0 });
        }
        Ok(())
    }

    /// Actor for zero-based step `t`; `None` means the closed-form myopic rule.
    pub fn actor_for(&self, t: usize) -> Option<&ParamSet> {
        match self.kind {
            BundleKind::Stationary | BundleKind::StationaryRecurrent => self.actors.first(),
            BundleKind::TimeIndexed | BundleKind::TimeIndexedRecurrent => self.actors.get(t),
        }
    }

    pub fn controller(&self) -> BundleController<'_> {
        BundleController { bundle: self, tape: Tape::new() }
    }
}

pub struct BundleController<'a> {
    bundle: &'a PolicyBundle,
    tape: Tape,
}

impl Controller for BundleController<'_> {
    fn observability(&self) -> Observability {
        self.bundle.kind.observability()
    }

    fn act(&mut self, t: usize, input: PolicyInput<'_>) -> Result<f64> {
        let b = self.bundle;
        let x = match (b.kind.observability(), input) {
            (Observability::Full, PolicyInput::Full(s)) => match b.actor_for(t) {
                None => return myopic_action(s, &b.grid),
                Some(_) => b.norm.state(s),
            },
            (Observability::Partial, PolicyInput::Partial(h)) => b.norm.history(h),
            _ => return Err(Error::KindMismatch("policy input does not match bundle observability".to_string())),
        };
        let actor = b.actor_for(t).ok_or_else(|| Error::KindMismatch(alloc::format!("no actor for step {}", t + 1)))?;
        let u = b.spec.forward(actor, &x.main, &x.side, &mut self.tape)?[0];
        Ok(b.grid.unit_to_action(u))
    }
}
