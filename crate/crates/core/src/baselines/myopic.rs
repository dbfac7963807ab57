//! Per-step reward maximisation, solved exactly.
//!
//! For a fixed state the one-step cost in the generator output `P` is the
//! quadratic generation cost plus a convex piecewise-linear unbalance cost,
//! whose kinks sit where the surplus hits the discharge and charge limits.
//! On each linear piece the objective is a parabola, so the global minimiser
//! is one of: the generator bounds, the two kinks, or a piece's vertex
//! clamped into that piece.

use crate::drl::{Controller, Observability, PolicyInput};
use crate::error::Result;
use crate::grid::{charge_limits, MicrogridConfig, Observation, State};
use crate::math::clamp;

/// One-step cost `k1 * c_dg + k2 * c_us` without the generator-range check.
pub fn step_cost(p: f64, state: &State, cfg: &MicrogridConfig) -> Result<f64> {
    let lim = charge_limits(state.soc, &cfg.battery, cfg.horizon.delta_t)?;
    Ok(cost_with(p, state, cfg, lim.charge, lim.discharge))
}

fn cost_with(p: f64, s: &State, cfg: &MicrogridConfig, ch: f64, dis: f64) -> f64 {
    let dt = cfg.horizon.delta_t;
    let dg = &cfg.dg;
    let w = &cfg.weights;
    let delta = p + s.p_pv - s.p_load;
    let us = if delta > ch {
        w.k21 * (delta - ch)
    } else if delta < -dis {
        w.k22 * (-dis - delta)
    } else {
        0.0
    };
    w.k1 * (dg.a * p * p + dg.b * p + dg.c) * dt + w.k2 * us * dt
}

/// Generator output minimising the immediate cost of `state`.
pub fn myopic_action(state: &State, cfg: &MicrogridConfig) -> Result<f64> {
    let lim = charge_limits(state.soc, &cfg.battery, cfg.horizon.delta_t)?;
    let (lo, hi) = (cfg.dg.p_min, cfg.dg.p_max);
    let net = state.p_load - state.p_pv;
    // Outputs at which the surplus reaches the discharge and charge limits.
    let k_dis = net - lim.discharge;
    let k_ch = net + lim.charge;

    let dg = &cfg.dg;
    let w = &cfg.weights;
    let curv = 2.0 * dg.a * w.k1;
    let mut cands = [lo, hi, clamp(k_dis, lo, hi), clamp(k_ch, lo, hi), lo, lo, lo];
    if curv > 0.0 {
        let vertex = |slope: f64| (slope - w.k1 * dg.b) / curv;
        // Unserved piece, dead band, wasted piece.
        cands[4] = clamp(clamp(vertex(w.k2 * w.k22), lo, hi), lo, clamp(k_dis, lo, hi));
        cands[5] = clamp(vertex(0.0), clamp(k_dis, lo, hi), clamp(k_ch, lo, hi));
        cands[6] = clamp(clamp(vertex(-w.k2 * w.k21), lo, hi), clamp(k_ch, lo, hi), hi);
    }

    let mut best = f64::INFINITY;
    for &p in &cands {
        best = best.min(cost_with(p, state, cfg, lim.charge, lim.discharge));
    }
    let tol = 1e-12 * best.abs().max(1.0);
    let mut arg = hi;
    for &p in &cands {
        if cost_with(p, state, cfg, lim.charge, lim.discharge) <= best + tol && p < arg {
            arg = p;
        }
    }
    Ok(arg)
}

/// The myopic rule applied to what a partially observing agent sees: the
/// previous step's load and PV stand in for the current ones.
pub fn myopic_pomdp_action(obs: &Observation, cfg: &MicrogridConfig) -> Result<f64> {
    myopic_action(&State::new(obs.lagged(), obs.soc), cfg)
}

/// The myopic rule as an executable controller.
#[derive(Debug, Clone, Copy)]
pub struct MyopicController {
    pub cfg: MicrogridConfig,
    pub observability: Observability,
}

impl Controller for MyopicController {
    fn observability(&self) -> Observability {
        self.observability
    }

    fn act(&mut self, _t: usize, input: PolicyInput<'_>) -> Result<f64> {
        match input {
            PolicyInput::Full(s) => myopic_action(s, &self.cfg),
            PolicyInput::Partial(h) => myopic_pomdp_action(h.head(), &self.cfg),
        }
    }
}
