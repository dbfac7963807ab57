//! Microgrid model: one diesel generator, aggregated PV, one battery and an
//! aggregated load, stepped at a fixed interval over a finite day horizon.

mod dynamics;
mod observe;

pub use dynamics::{
    battery_step, charge_limits, dg_cost, env_step, episode_return, power_surplus, unbalance_cost, BatteryStep,
    ChargeLimits,
};
pub use observe::{make_observation, History, Observation};

use crate::error::{config, Result};
use crate::profile::Exo;

/// Battery ratings. Powers in kW, energies in kWh.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields, default))]
pub struct BatteryParams {
    pub p_max: f64,
    pub e_max: f64,
    pub e_min: f64,
    pub eta_ch: f64,
    pub eta_dis: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self { p_max: 120.0, e_max: 2000.0, e_min: 24.0, eta_ch: 0.98, eta_dis: 0.98 }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_min < self.e_max) {
            return Err(config("battery e_min must be below e_max"));
        }
        if !(self.p_max > 0.0) {
            return Err(config("battery p_max must be positive"));
        }
        for (name, eta) in [("eta_ch", self.eta_ch), ("eta_dis", self.eta_dis)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(config(alloc::format!("battery {name} must lie in (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Diesel generator limits (kW) and quadratic cost coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields, default))]
pub struct DgParams {
    pub p_min: f64,
    pub p_max: f64,
    /// $/kW²h
    pub a: f64,
    /// $/kWh
    pub b: f64,
    /// $/h
    pub c: f64,
}

impl Default for DgParams {
    fn default() -> Self {
        Self { p_min: 100.0, p_max: 600.0, a: 0.005, b: 6.0, c: 100.0 }
    }
}

impl DgParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_min >= 0.0 && self.p_min < self.p_max) {
            return Err(config("generator limits must satisfy 0 <= p_min < p_max"));
        }
        if !(self.a > 0.0 && self.b > 0.0 && self.c > 0.0) {
            return Err(config("generator cost coefficients must be positive"));
        }
        Ok(())
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.p_min && p <= self.p_max
    }
}

/// Weights of the generation and unbalance terms in the reward.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields, default))]
pub struct RewardWeights {
    pub k1: f64,
    pub k2: f64,
    /// Weight on wasted (surplus beyond charging) power.
    pub k21: f64,
    /// Weight on unserved power.
    pub k22: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { k1: 0.001, k2: 1.0, k21: 1.0, k22: 1.0 }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k2 > 0.0 && self.k21 > 0.0 && self.k22 > 0.0) {
            return Err(config("reward weights must be strictly positive"));
        }
        Ok(())
    }
}

/// Episode length, step duration, history window and discount.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields, default))]
pub struct HorizonConfig {
    pub t_steps: usize,
    /// Hours.
    pub delta_t: f64,
    pub tau: usize,
    pub gamma: f64,
}

impl Default for HorizonConfig {
    fn default() -> Self {
        Self { t_steps: 24, delta_t: 1.0, tau: 4, gamma: 1.0 }
    }
}

impl HorizonConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_steps < 2 {
            return Err(config("horizon needs at least two steps"));
        }
        if !(self.delta_t > 0.0) {
            return Err(config("delta_t must be positive"));
        }
        if self.tau < 1 {
            return Err(config("history window tau must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(config("gamma must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Load and PV ranges used to scale network inputs. Never used to clip data.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields, default))]
pub struct ExoBounds {
    pub load_min: f64,
    pub load_max: f64,
    pub pv_min: f64,
    pub pv_max: f64,
}

impl Default for ExoBounds {
    fn default() -> Self {
        Self { load_min: 0.0, load_max: 800.0, pv_min: 0.0, pv_max: 300.0 }
    }
}

impl ExoBounds {
    /// Tight bounds over the given pairs, widened to a non-degenerate span.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = &'a Exo>) -> Self {
        let mut b = Self {
            load_min: f64::INFINITY,
            load_max: f64::NEG_INFINITY,
            pv_min: f64::INFINITY,
            pv_max: f64::NEG_INFINITY,
        };
        for p in pairs {
            b.load_min = b.load_min.min(p.load);
            b.load_max = b.load_max.max(p.load);
            b.pv_min = b.pv_min.min(p.pv);
            b.pv_max = b.pv_max.max(p.pv);
        }
        if !b.load_min.is_finite() {
            return Self::default();
        }
        if b.load_max - b.load_min < 1.0 {
            b.load_max = b.load_min + 1.0;
        }
        if b.pv_max - b.pv_min < 1.0 {
            b.pv_max = b.pv_min + 1.0;
        }
        b
    }
}

/// Full parameter set of the microgrid problem.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields, default))]
pub struct MicrogridConfig {
    pub battery: BatteryParams,
    pub dg: DgParams,
    pub weights: RewardWeights,
    pub horizon: HorizonConfig,
    pub bounds: ExoBounds,
}

impl MicrogridConfig {
    pub fn validate(&self) -> Result<()> {
        self.battery.validate()?;
        self.dg.validate()?;
        self.weights.validate()?;
        self.horizon.validate()
    }

    /// Maps a generator output to the symmetric unit interval used by actors.
    pub fn action_to_unit(&self, p_dg: f64) -> f64 {
        2.0 * (p_dg - self.dg.p_min) / (self.dg.p_max - self.dg.p_min) - 1.0
    }

    /// Inverse of [`action_to_unit`](Self::action_to_unit), clamped to the generator limits.
    pub fn unit_to_action(&self, u: f64) -> f64 {
        let u = crate::math::clamp(u, -1.0, 1.0);
        self.dg.p_min + (u + 1.0) * 0.5 * (self.dg.p_max - self.dg.p_min)
    }
}

/// Fully observed system state at the start of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct State {
    pub p_load: f64,
    pub p_pv: f64,
    pub soc: f64,
}

impl State {
    pub fn new(exo: Exo, soc: f64) -> Self {
        Self { p_load: exo.load, p_pv: exo.pv, soc }
    }

    pub fn exo(&self) -> Exo {
        Exo { load: self.p_load, pv: self.p_pv }
    }
}

/// Generator set-point for one step (kW).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Action {
    pub p_dg: f64,
}

/// Everything one step of the dynamics produces besides the next state.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepOutcome {
    pub next_soc: f64,
    pub reward: f64,
    pub c_dg: f64,
    pub c_us: f64,
    pub delta: f64,
    pub p_batt: f64,
    pub charging: bool,
}
