use alloc::format;

use super::{BatteryParams, DgParams, MicrogridConfig, RewardWeights, State, StepOutcome};
use crate::error::{contract, Result};
use crate::math::{clamp, powi};
use crate::profile::Exo;

/// Quadratic fuel cost of running the generator at `p_dg` for `delta_t` hours.
pub fn dg_cost(p_dg: f64, dg: &DgParams, delta_t: f64) -> Result<f64> {
    if !dg.contains(p_dg) {
        return Err(contract(format!(
            "generator output {p_dg} kW outside [{}, {}]",
            dg.p_min, dg.p_max
        )));
    }
    Ok((dg.a * p_dg * p_dg + dg.b * p_dg + dg.c) * delta_t)
}

/// Generation minus demand.
#[inline]
pub fn power_surplus(p_dg: f64, p_pv: f64, p_load: f64) -> f64 {
    p_dg + p_pv - p_load
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeLimits {
    pub charge: f64,
    pub discharge: f64,
}

/// Largest charging and discharging powers the battery accepts at `soc`.
pub fn charge_limits(soc: f64, bat: &BatteryParams, delta_t: f64) -> Result<ChargeLimits> {
    if !(soc >= bat.e_min && soc <= bat.e_max) {
        return Err(contract(format!("soc {soc} kWh outside [{}, {}]", bat.e_min, bat.e_max)));
    }
    let charge = bat.p_max.min((bat.e_max - soc) / (bat.eta_ch * delta_t)).max(0.0);
    let discharge = bat.p_max.min(bat.eta_dis * (soc - bat.e_min) / delta_t).max(0.0);
    Ok(ChargeLimits { charge, discharge })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryStep {
    pub next_soc: f64,
    pub p_batt: f64,
    pub charging: bool,
    pub limits: ChargeLimits,
}

/// Book-keeping battery update for a power surplus `delta`.
///
/// Limits come from the pre-step charge, the battery power is `|delta|` capped
/// by the matching limit, and the charge update is clamped to the rated range
/// to absorb rounding.
pub fn battery_step(soc: f64, delta: f64, bat: &BatteryParams, delta_t: f64) -> Result<BatteryStep> {
    let limits = charge_limits(soc, bat, delta_t)?;
    let charging = delta >= 0.0;
    let (p_batt, raw) = if charging {
        let p = delta.min(limits.charge);
        (p, soc + bat.eta_ch * p * delta_t)
    } else {
        let p = (-delta).min(limits.discharge);
        (p, soc - p * delta_t / bat.eta_dis)
    };
    Ok(BatteryStep { next_soc: clamp(raw, bat.e_min, bat.e_max), p_batt, charging, limits })
}

/// Weighted unserved or wasted energy for a surplus `delta`.
pub fn unbalance_cost(delta: f64, limits: ChargeLimits, w: &RewardWeights, delta_t: f64) -> f64 {
    if delta > limits.charge {
        w.k21 * (delta - limits.charge) * delta_t
    } else if delta < -limits.discharge {
        -w.k22 * (delta + limits.discharge) * delta_t
    } else {
        0.0
    }
}

/// Advances the microgrid by one step.
///
/// `next_exo` is the realised load/PV pair of the following step; it only
/// becomes part of the returned state.
pub fn env_step(state: &State, p_dg: f64, next_exo: Exo, cfg: &MicrogridConfig) -> Result<(State, StepOutcome)> {
    let dt = cfg.horizon.delta_t;
    let c_dg = dg_cost(p_dg, &cfg.dg, dt)?;
    let delta = power_surplus(p_dg, state.p_pv, state.p_load);
    let bat = battery_step(state.soc, delta, &cfg.battery, dt)?;
    let c_us = unbalance_cost(delta, bat.limits, &cfg.weights, dt);
    let reward = -(cfg.weights.k1 * c_dg + cfg.weights.k2 * c_us);
    let outcome =
        StepOutcome { next_soc: bat.next_soc, reward, c_dg, c_us, delta, p_batt: bat.p_batt, charging: bat.charging };
    Ok((State::new(next_exo, bat.next_soc), outcome))
}

/// Discounted sum of one episode's rewards, first step undiscounted.
pub fn episode_return(rewards: &[f64], gamma: f64, t_steps: usize) -> Result<f64> {
    if rewards.len() != t_steps {
        return Err(contract(format!("expected {t_steps} rewards, got {}", rewards.len())));
    }
    Ok(rewards.iter().enumerate().map(|(t, r)| powi(gamma, t as i32) * r).sum())
}
