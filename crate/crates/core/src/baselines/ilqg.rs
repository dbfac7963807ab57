//! Iterative linear-quadratic trajectory optimisation with box-constrained
//! controls, and its application to the dispatch problem.
//!
//! The dispatch model has kinks (charge limits, the unbalance penalty), so
//! the planner works on a softened copy whose sharpness grows between
//! stages. Candidate steps are also checked against the exact model and
//! only kept when they do not make it worse.

use alloc::vec::Vec;

use super::jet::Jet;
use super::myopic::myopic_action;
use crate::drl::{Controller, Observability, PolicyInput};
use crate::error::{config, Result};
use crate::grid::{env_step, MicrogridConfig, State};
use crate::math::{clamp, powi};
use crate::profile::{DayProfile, Exo};

/// A finite-horizon problem with scalar state and scalar control.
pub trait PlanModel {
    fn horizon(&self) -> usize;

    /// Control range at step `t`.
    fn bounds(&self, t: usize) -> (f64, f64);

    /// Next state and stage cost, both as jets in `(x, u)`.
    fn step(&self, t: usize, x: Jet, u: Jet) -> (Jet, Jet);
}

/// Planner settings: softening of the dispatch model, Levenberg
/// regularisation schedule and stopping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields, default))]
pub struct SmoothingConfig {
    /// Initial sharpness (1/kW) of the softened kinks.
    pub sharpness: f64,
    /// Sharpness multiplier between stages.
    pub sharpness_growth: f64,
    pub stages: usize,
    /// Smallest non-zero regularisation; smaller values snap to zero.
    pub mu_min: f64,
    pub mu_factor: f64,
    pub mu_max: f64,
    /// Iterations per stage.
    pub max_iters: usize,
    /// Stop a stage when the relative cost improvement falls below this.
    pub tolerance: f64,
    /// Halvings tried by the line search.
    pub line_search: usize,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            sharpness: 0.05,
            sharpness_growth: 2.0,
            stages: 6,
            mu_min: 1e-9,
            mu_factor: 10.0,
            mu_max: 1e8,
            max_iters: 60,
            tolerance: 1e-9,
            line_search: 12,
        }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sharpness > 0.0) {
            return Err(config("sharpness must be positive"));
        }
        if !(self.sharpness_growth >= 1.0 && self.mu_factor > 1.0) {
            return Err(config("growth factors must exceed 1"));
        }
        if !(self.mu_min > 0.0 && self.mu_max > self.mu_min) {
            return Err(config("regularisation bounds must satisfy 0 < mu_min < mu_max"));
        }
        if !(self.tolerance > 0.0) {
            return Err(config("tolerance must be positive"));
        }
        Ok(())
    }
}

/// One planner iteration, for diagnostics export.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterRecord {
    pub stage: usize,
    pub iter: usize,
    /// Model cost after the iteration.
    pub cost: f64,
    /// Regularisation used by the backward pass.
    pub mu: f64,
    /// Accepted line-search step, 0 when nothing was accepted.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlqrOutcome {
    pub controls: Vec<f64>,
    pub states: Vec<f64>,
    pub cost: f64,
    /// Feedforward and feedback terms of the last backward pass.
    pub feedforward: Vec<f64>,
    pub gains: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub records: Vec<IterRecord>,
}

pub fn rollout(model: &dyn PlanModel, x0: f64, us: &[f64]) -> (Vec<f64>, f64) {
    let mut xs = Vec::with_capacity(us.len() + 1);
    xs.push(x0);
    let mut cost = 0.0;
    for (t, &u) in us.iter().enumerate() {
        let (nx, c) = model.step(t, Jet::constant(xs[t]), Jet::constant(u));
        cost += c.v;
        xs.push(nx.v);
    }
    (xs, cost)
}

struct Backward {
    k: Vec<f64>,
    gains: Vec<f64>,
}

fn backward(model: &dyn PlanModel, xs: &[f64], us: &[f64], mu: f64) -> Option<Backward> {
    let n = us.len();
    let mut k = alloc::vec![0.0; n];
    let mut gains = alloc::vec![0.0; n];
    let (mut vx, mut vxx) = (0.0, 0.0);
    for t in (0..n).rev() {
        let (f, l) = model.step(t, Jet::var_x(xs[t]), Jet::var_u(us[t]));
        let qx = l.x + f.x * vx;
        let qu = l.u + f.u * vx;
        let qxx = l.xx + f.x * vxx * f.x;
        let quu = l.uu + f.u * vxx * f.u;
        let qux = l.xu + f.u * vxx * f.x;
        let quu_reg = quu + mu;
        if !(quu_reg > 0.0) || !quu_reg.is_finite() {
            return None;
        }
        let (lo, hi) = model.bounds(t);
        let mut kt = -qu / quu_reg;
        let mut kk = -qux / quu_reg;
        let target = clamp(us[t] + kt, lo, hi);
        if target != us[t] + kt {
            // The step runs into a bound: move to it and drop the feedback.
            kt = target - us[t];
            kk = 0.0;
        }
        vx = qx + kk * quu * kt + kk * qu + qux * kt;
        vxx = qxx + kk * quu * kk + 2.0 * kk * qux;
        k[t] = kt;
        gains[t] = kk;
    }
    Some(Backward { k, gains })
}

fn forward(model: &dyn PlanModel, xs: &[f64], us: &[f64], b: &Backward, alpha: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let n = us.len();
    let mut nx = Vec::with_capacity(n + 1);
    let mut nu = Vec::with_capacity(n);
    nx.push(xs[0]);
    let mut cost = 0.0;
    for t in 0..n {
        let (lo, hi) = model.bounds(t);
        let u = clamp(us[t] + alpha * b.k[t] + b.gains[t] * (nx[t] - xs[t]), lo, hi);
        let (f, c) = model.step(t, Jet::constant(nx[t]), Jet::constant(u));
        cost += c.v;
        nu.push(u);
        nx.push(f.v);
    }
    (nx, nu, cost)
}

/// Minimises `model` from `x0`, starting at the control sequence `init`.
///
/// `guard`, when given, maps a candidate control sequence to a second cost
/// that must not increase for a step to be accepted. `stage` only labels
/// the diagnostics.
pub fn ilqr(
    model: &dyn PlanModel,
    x0: f64,
    init: &[f64],
    opts: &SmoothingConfig,
    mut guard: Option<&mut dyn FnMut(&[f64]) -> f64>,
    stage: usize,
) -> IlqrOutcome {
    let n = model.horizon();
    let mut us: Vec<f64> = (0..n)
        .map(|t| {
            let (lo, hi) = model.bounds(t);
            clamp(init.get(t).copied().unwrap_or(lo), lo, hi)
        })
        .collect();
    let (mut xs, mut cost) = rollout(model, x0, &us);
    let mut guard_cost = guard.as_mut().map(|g| g(&us));
    let mut mu = 0.0;
    let mut records = Vec::new();
    let mut last = Backward { k: alloc::vec![0.0; n], gains: alloc::vec![0.0; n] };
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        let Some(b) = backward(model, &xs, &us, mu) else {
            mu = (mu * opts.mu_factor).max(opts.mu_min);
            records.push(IterRecord { stage, iter: iterations, cost, mu, alpha: 0.0 });
            if mu > opts.mu_max {
                break;
            }
            continue;
        };
        let mut accepted = None;
        let mut alpha = 1.0;
        for _ in 0..=opts.line_search {
            let (nx, nu, nc) = forward(model, &xs, &us, &b, alpha);
            if nc < cost {
                let g = match guard.as_mut() {
                    Some(g) => {
                        let gc = g(&nu);
                        if gc > guard_cost.unwrap_or(f64::INFINITY) {
                            alpha *= 0.5;
                            continue;
                        }
                        Some(gc)
                    }
                    None => None,
                };
                accepted = Some((nx, nu, nc, g));
                break;
            }
            alpha *= 0.5;
        }
        last = b;
        match accepted {
            Some((nx, nu, nc, g)) => {
                let improvement = cost - nc;
                xs = nx;
                us = nu;
                cost = nc;
                if g.is_some() {
                    guard_cost = g;
                }
                records.push(IterRecord { stage, iter: iterations, cost, mu, alpha });
                mu /= opts.mu_factor;
                if mu < opts.mu_min {
                    mu = 0.0;
                }
                if improvement <= opts.tolerance * cost.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            None => {
                records.push(IterRecord { stage, iter: iterations, cost, mu, alpha: 0.0 });
                if mu == 0.0 && last.k.iter().all(|&k| k == 0.0) {
                    converged = true;
                    break;
                }
                mu = (mu * opts.mu_factor).max(opts.mu_min);
                if mu > opts.mu_max {
                    converged = true;
                    break;
                }
            }
        }
    }
    IlqrOutcome {
        controls: us,
        states: xs,
        cost,
        feedforward: last.k,
        gains: last.gains,
        iterations,
        converged,
        records,
    }
}

/// How the planner models the unbalance penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnbalanceModel {
    /// Softened version of the exact piecewise-linear penalty.
    Smooth,
    /// `weight * delta^2 + soc_weight * (soc - soc_ref)^2`, a smooth stand-in
    /// that turns the problem linear-quadratic once the battery limits are
    /// made very large and the efficiencies 1.
    Quadratic { weight: f64, soc_weight: f64, soc_ref: f64 },
}

/// The dispatch problem over a known load/PV trajectory.
pub struct MicrogridPlanModel<'a> {
    pub cfg: &'a MicrogridConfig,
    pub exo: &'a [Exo],
    pub sharpness: f64,
    pub unbalance: UnbalanceModel,
}

impl PlanModel for MicrogridPlanModel<'_> {
    fn horizon(&self) -> usize {
        self.exo.len()
    }

    fn bounds(&self, _t: usize) -> (f64, f64) {
        (self.cfg.dg.p_min, self.cfg.dg.p_max)
    }

    fn step(&self, t: usize, x: Jet, u: Jet) -> (Jet, Jet) {
        let k = self.sharpness;
        let bat = &self.cfg.battery;
        let dg = &self.cfg.dg;
        let w = &self.cfg.weights;
        let dt = self.cfg.horizon.delta_t;
        let e = self.exo[t];
        let pmax = Jet::constant(bat.p_max);
        let ch = pmax.soft_min((-x + bat.e_max).scale(1.0 / (bat.eta_ch * dt)), k);
        let dis = pmax.soft_min((x + (-bat.e_min)).scale(bat.eta_dis / dt), k);
        let delta = u + (e.pv - e.load);
        let charge = delta.soft_relu(k).soft_min(ch, k);
        let discharge = (-delta).soft_relu(k).soft_min(dis, k);
        let next = x + charge.scale(bat.eta_ch * dt) - discharge.scale(dt / bat.eta_dis);
        let gen = (u.square().scale(dg.a) + u.scale(dg.b) + dg.c).scale(dt);
        let us = match self.unbalance {
            UnbalanceModel::Smooth => {
                ((delta - ch).soft_relu(k).scale(w.k21) + (-delta - dis).soft_relu(k).scale(w.k22)).scale(dt)
            }
            UnbalanceModel::Quadratic { weight, soc_weight, soc_ref } => {
                delta.square().scale(weight) + (x + (-soc_ref)).square().scale(soc_weight)
            }
        };
        let disc = powi(self.cfg.horizon.gamma, t as i32);
        (next, (gen.scale(w.k1) + us.scale(w.k2)).scale(disc))
    }
}

/// Exact cost (negated return) of applying `controls` along `exo`.
pub fn true_cost(initial_soc: f64, exo: &[Exo], controls: &[f64], cfg: &MicrogridConfig) -> Result<f64> {
    let mut state = State::new(exo[0], initial_soc);
    let mut cost = 0.0;
    for (t, &p) in controls.iter().enumerate() {
        let next = exo.get(t + 1).copied().unwrap_or(exo[t]);
        let p = clamp(p, cfg.dg.p_min, cfg.dg.p_max);
        let (s2, out) = env_step(&state, p, next, cfg)?;
        cost -= powi(cfg.horizon.gamma, t as i32) * out.reward;
        state = s2;
    }
    Ok(cost)
}

/// Actions of the myopic rule simulated along `exo`.
pub fn myopic_trajectory(initial_soc: f64, exo: &[Exo], cfg: &MicrogridConfig) -> Result<Vec<f64>> {
    let mut state = State::new(exo[0], initial_soc);
    let mut us = Vec::with_capacity(exo.len());
    for t in 0..exo.len() {
        let p = myopic_action(&state, cfg)?;
        let next = exo.get(t + 1).copied().unwrap_or(exo[t]);
        state = env_step(&state, p, next, cfg)?.0;
        us.push(p);
    }
    Ok(us)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlqgPlan {
    pub actions: Vec<f64>,
    /// Exact cost of `actions` along the planning trajectory.
    pub cost: f64,
    /// Exact cost of the starting trajectory.
    pub initial_cost: f64,
    pub converged: bool,
    pub records: Vec<IterRecord>,
}

/// Plans generator outputs for a known load/PV trajectory `exo`.
pub fn ilqg_plan(initial_soc: f64, exo: &[Exo], cfg: &MicrogridConfig, sm: &SmoothingConfig) -> Result<IlqgPlan> {
    ilqg_plan_from(initial_soc, exo, cfg, sm, None)
}

/// As [`ilqg_plan`] with an explicit starting control sequence (the myopic
/// trajectory when `None`).
pub fn ilqg_plan_from(
    initial_soc: f64,
    exo: &[Exo],
    cfg: &MicrogridConfig,
    sm: &SmoothingConfig,
    init: Option<&[f64]>,
) -> Result<IlqgPlan> {
    sm.validate()?;
    if exo.is_empty() {
        return Err(crate::Error::Insufficient("empty planning horizon".into()));
    }
    let mut us = match init {
        Some(u) if u.len() == exo.len() => u.iter().map(|&p| clamp(p, cfg.dg.p_min, cfg.dg.p_max)).collect(),
        _ => myopic_trajectory(initial_soc, exo, cfg)?,
    };
    let initial_cost = true_cost(initial_soc, exo, &us, cfg)?;
    let mut failure = None;
    let mut exact = |c: &[f64]| match true_cost(initial_soc, exo, c, cfg) {
        Ok(v) => v,
        Err(e) => {
            failure = Some(e);
            f64::INFINITY
        }
    };
    let mut records = Vec::new();
    let mut converged = true;
    let mut k = sm.sharpness;
    for stage in 0..sm.stages {
        let model = MicrogridPlanModel { cfg, exo, sharpness: k, unbalance: UnbalanceModel::Smooth };
        let out = ilqr(&model, initial_soc, &us, sm, Some(&mut exact), stage);
        us = out.controls;
        converged = out.converged;
        records.extend(out.records);
        k *= sm.sharpness_growth;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let cost = true_cost(initial_soc, exo, &us, cfg)?;
    Ok(IlqgPlan { actions: us, cost, initial_cost, converged, records })
}

/// Planning on the lagged trajectory: step `t` uses the pair of `t - 1`.
pub fn ilqg_pomdp_plan(
    initial_soc: f64,
    day: &DayProfile,
    cfg: &MicrogridConfig,
    sm: &SmoothingConfig,
) -> Result<IlqgPlan> {
    ilqg_plan(initial_soc, &day.lagged_day(), cfg, sm)
}

/// Open-loop execution of a plan made at the start of the episode.
#[derive(Debug, Clone)]
pub struct IlqgController {
    exo: Vec<Exo>,
    cfg: MicrogridConfig,
    sm: SmoothingConfig,
    observability: Observability,
    plan: Vec<f64>,
}

impl IlqgController {
    /// Plans on the day's realised trajectory.
    pub fn full(day: &DayProfile, cfg: MicrogridConfig, sm: SmoothingConfig) -> Self {
        let exo = day.day()[..cfg.horizon.t_steps.min(day.steps())].to_vec();
        Self { exo, cfg, sm, observability: Observability::Full, plan: Vec::new() }
    }

    /// Plans on the day's lagged trajectory.
    pub fn lagged(day: &DayProfile, cfg: MicrogridConfig, sm: SmoothingConfig) -> Self {
        let mut exo = day.lagged_day();
        exo.truncate(cfg.horizon.t_steps);
        Self { exo, cfg, sm, observability: Observability::Partial, plan: Vec::new() }
    }
}

impl Controller for IlqgController {
    fn observability(&self) -> Observability {
        self.observability
    }

    fn reset(&mut self, initial_soc: f64) -> Result<()> {
        self.plan = ilqg_plan(initial_soc, &self.exo, &self.cfg, &self.sm)?.actions;
        Ok(())
    }

    fn act(&mut self, t: usize, _input: PolicyInput<'_>) -> Result<f64> {
        self.plan.get(t).copied().ok_or(crate::Error::CallOrder)
    }
}
