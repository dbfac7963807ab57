//! The stationary (DDPG, RDPG) and finite-horizon (FH-DDPG, FH-RDPG) learners.

use alloc::vec::Vec;

use super::agent::{Agent, UpdateStats};
use super::buffer::ReplayBuffer;
use super::config::{Learner, TrainConfig};
use super::encode::{Encoded, Normalizer};
use super::noise::OuProcess;
use super::policy::{run_episode, BundleKind, PolicyBundle};
use crate::baselines::myopic_action;
use crate::error::Result;
use crate::grid::{env_step, make_observation, MicrogridConfig, State};
use crate::math::clamp;
use crate::nn::{blend_params, copy_params, NetSpec, ParamSet};
use crate::profile::{DayProfile, EpisodeSource};
use crate::rng::{stream, Rng, TAG_ACTOR_INIT, TAG_CRITIC_INIT, TAG_CURVE, TAG_EPISODES, TAG_MINIBATCH, TAG_NOISE};

/// One point of a training curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    /// One-based time step being trained (finite-horizon learners), 0 for
    /// stationary learners.
    pub step: usize,
    /// Episodes completed so far (within the step for finite-horizon learners).
    pub episode: usize,
    /// Mean critic loss over the updates since the previous point.
    pub critic_loss: f64,
    /// Mean critic value of the actor's actions on the sampled minibatches.
    pub mean_q: f64,
    /// Noise-free return of the current policy (stationary learners).
    pub eval_return: Option<f64>,
}

/// Trained critics, one per actor, kept for value calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticSet {
    pub spec: NetSpec,
    pub critics: Vec<ParamSet>,
    /// Critics predict returns multiplied by this factor.
    pub reward_scale: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub bundle: PolicyBundle,
    pub critics: CriticSet,
    pub curve: Vec<CurvePoint>,
}

/// Trains `algo` on episodes from `source`.
pub fn train(
    algo: Learner,
    source: &EpisodeSource,
    grid: &MicrogridConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutput> {
    grid.validate()?;
    cfg.validate()?;
    source.initial_soc.validate(&grid.battery)?;
    cfg.train_soc.validate(&grid.battery)?;
    let mut cfg = cfg.clone();
    let shape_ok = |s: &super::config::NetShape| s.lstm.is_empty() != algo.recurrent();
    if !shape_ok(&cfg.actor) || !shape_ok(&cfg.critic) {
        return Err(crate::error::config(alloc::format!("network shapes do not fit {algo:?}")));
    }
    cfg.warmup = cfg.warmup.min(cfg.buffer);
    let mut ctx = Ctx::new(source, grid, &cfg, seed)?;
    match algo {
        Learner::Ddpg | Learner::Rdpg => ctx.stationary(algo.recurrent()),
        Learner::FhDdpg => ctx.finite_horizon(false),
        Learner::FhRdpg => ctx.finite_horizon(true),
    }
}

struct Ctx<'a> {
    source: &'a EpisodeSource,
    grid: &'a MicrogridConfig,
    cfg: &'a TrainConfig,
    norm: Normalizer,
    agent: Agent,
    episodes: Rng,
    minibatch: Rng,
    noise: OuProcess,
    curve_socs: Vec<f64>,
}

/// Stationary transition.
struct Transition {
    x: Encoded,
    u: f64,
    r: f64,
    x2: Encoded,
    done: bool,
}

/// Finite-horizon transition with its regression target already formed;
/// the targets are frozen while a step trains so this is exact.
struct Labelled {
    x: Encoded,
    u: f64,
    y: f64,
}

#[derive(Default)]
struct Running {
    loss: f64,
    q: f64,
    n: usize,
}

impl Running {
    fn add(&mut self, s: UpdateStats) {
        self.loss += s.critic_loss;
        self.q += s.mean_q;
        self.n += 1;
    }

    fn take(&mut self) -> (f64, f64) {
        let out = if self.n == 0 { (f64::NAN, f64::NAN) } else { (self.loss / self.n as f64, self.q / self.n as f64) };
        *self = Self::default();
        out
    }
}

impl<'a> Ctx<'a> {
    fn new(source: &'a EpisodeSource, grid: &'a MicrogridConfig, cfg: &'a TrainConfig, seed: u64) -> Result<Self> {
        let agent = Agent::new(cfg, &mut stream(seed, TAG_ACTOR_INIT), &mut stream(seed, TAG_CRITIC_INIT))?;
        let mut curve_rng = stream(seed, TAG_CURVE);
        let curve_socs = (0..cfg.curve_episodes)
            .map(|_| source.initial_soc.sample(&grid.battery, &mut curve_rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            source,
            grid,
            cfg,
            norm: Normalizer::new(grid.bounds, &grid.battery),
            agent,
            episodes: stream(seed, TAG_EPISODES),
            minibatch: stream(seed, TAG_MINIBATCH),
            noise: OuProcess::new(cfg.ou_theta, cfg.ou_sigma, stream(seed, TAG_NOISE)),
            curve_socs,
        })
    }

    fn steps(&self) -> usize {
        self.grid.horizon.t_steps
    }

    fn encode(&self, recurrent: bool, day: &DayProfile, t: usize, s: &State) -> Encoded {
        if recurrent {
            self.norm.history(&day.history(t, self.grid.horizon.tau, s.soc))
        } else {
            self.norm.state(s)
        }
    }

    /// Exploratory action in the unit interval.
    fn explore(&mut self, x: &Encoded) -> Result<f64> {
        let u = self.agent.policy(x)?;
        Ok(clamp(u + self.noise.sample(1.0), -1.0, 1.0))
    }

    fn sample_start(&mut self) -> Result<(usize, f64)> {
        let day = self.source.sample_train_index(&mut self.episodes);
        let soc = self.cfg.train_soc.sample(&self.grid.battery, &mut self.episodes)?;
        Ok((day, soc))
    }

    fn bundle(&self, kind: BundleKind, actors: Vec<ParamSet>) -> PolicyBundle {
        PolicyBundle { kind, spec: self.agent.actor_spec.clone(), actors, norm: self.norm, grid: *self.grid }
    }

    fn stationary(&mut self, recurrent: bool) -> Result<TrainOutput> {
        let steps = self.steps();
        let gamma = self.grid.horizon.gamma;
        let source = self.source;
        let kind = if recurrent { BundleKind::StationaryRecurrent } else { BundleKind::Stationary };
        let mut buf: ReplayBuffer<Transition> = ReplayBuffer::new(self.cfg.buffer);
        let mut curve = Vec::new();
        let mut running = Running::default();
        let total_updates = (self.cfg.episodes * steps + 1).saturating_sub(self.cfg.warmup);
        let mut updates = 0;

        for ep in 0..self.cfg.episodes {
            let (di, soc) = self.sample_start()?;
            let day = &source.train_days()[di];
            self.noise.reset();
            let mut state = day.state(0, soc);
            let mut x = self.encode(recurrent, day, 0, &state);
            for t in 0..steps {
                let u = self.explore(&x)?;
                let p = self.grid.unit_to_action(u);
                let next = if t + 1 < steps { day.current(t + 1) } else { day.current(t) };
                let (s2, out) = env_step(&state, p, next, self.grid)?;
                let done = t + 1 == steps;
                let x2 = if done { x.clone() } else { self.encode(recurrent, day, t + 1, &s2) };
                buf.push(Transition { x: x.clone(), u, r: out.reward, x2: x2.clone(), done });
                if buf.len() >= self.cfg.warmup {
                    let batch = buf.sample(self.cfg.batch, &mut self.minibatch)?;
                    let mut labelled = Vec::with_capacity(batch.len());
                    for tr in batch {
                        let mut y = self.cfg.reward_scale * tr.r;
                        if !tr.done {
                            y += gamma * self.agent.target_value(&tr.x2)?;
                        }
                        labelled.push((&tr.x, tr.u, y));
                    }
                    let lr = self.cfg.lr_multiplier(updates, total_updates);
                    updates += 1;
                    running.add(self.agent.update(&labelled, ep + 1, lr)?);
                    blend_params(&mut self.agent.actor_target, &self.agent.actor, self.cfg.soft_update)?;
                    blend_params(&mut self.agent.critic_target, &self.agent.critic, self.cfg.soft_update)?;
                }
                state = s2;
                x = x2;
            }
            if (ep + 1) % self.cfg.eval_period == 0 || ep + 1 == self.cfg.episodes {
                let snapshot = self.bundle(kind, alloc::vec![self.agent.actor.clone()]);
                let eval = self.evaluate(&snapshot)?;
                let (loss, q) = running.take();
                curve.push(CurvePoint { step: 0, episode: ep + 1, critic_loss: loss, mean_q: q, eval_return: Some(eval) });
            }
        }
        let bundle = self.bundle(kind, alloc::vec![self.agent.actor.clone()]);
        let critics = CriticSet {
            spec: self.agent.critic_spec.clone(),
            critics: alloc::vec![self.agent.critic.clone()],
            reward_scale: self.cfg.reward_scale,
        };
        Ok(TrainOutput { bundle, critics, curve })
    }

    fn evaluate(&self, bundle: &PolicyBundle) -> Result<f64> {
        if self.curve_socs.is_empty() {
            return Ok(f64::NAN);
        }
        let mut total = 0.0;
        for &soc in &self.curve_socs {
            total += run_episode(&mut bundle.controller(), self.source.test_day(), soc, self.grid)?.ret;
        }
        Ok(total / self.curve_socs.len() as f64)
    }

    /// Backward induction over the horizon: one short training problem per
    /// step, from the last trained step to the first.
    fn finite_horizon(&mut self, recurrent: bool) -> Result<TrainOutput> {
        let steps = self.steps();
        let gamma = self.grid.horizon.gamma;
        let scale = self.cfg.reward_scale;
        let source = self.source;
        let trained = if recurrent { steps } else { steps - 1 };
        let init_actor = self.agent.actor.clone();
        let init_critic = self.agent.critic.clone();
        let mut actors: Vec<Option<ParamSet>> = alloc::vec![None; trained];
        let mut critics: Vec<Option<ParamSet>> = alloc::vec![None; trained];
        let mut curve = Vec::new();

        for t in (0..trained).rev() {
            self.agent.reset_working(&init_actor, &init_critic)?;
            let mut buf: ReplayBuffer<Labelled> = ReplayBuffer::new(self.cfg.buffer);
            let mut running = Running::default();
            let total_updates = (self.cfg.episodes + 1).saturating_sub(self.cfg.warmup);
            let mut updates = 0;
            for e in 0..self.cfg.episodes {
                let (di, soc) = self.sample_start()?;
                let day = &source.train_days()[di];
                let state = day.state(t, soc);
                let x = self.encode(recurrent, day, t, &state);
                self.noise.reset();
                let u = self.explore(&x)?;
                let p = self.grid.unit_to_action(u);
                let next = day.next_exo(t);
                let (s2, out) = env_step(&state, p, next, self.grid)?;
                let y = if t + 1 == steps {
                    scale * out.reward
                } else if !recurrent && t + 2 == steps {
                    // The last step is closed-form myopic, so the two-step
                    // return is known exactly.
                    let pt = myopic_action(&s2, self.grid)?;
                    let (_, last) = env_step(&s2, pt, day.next_exo(t + 1), self.grid)?;
                    scale * (out.reward + gamma * last.reward)
                } else {
                    let x2 = if recurrent {
                        let h = day.history(t, self.grid.horizon.tau, soc);
                        self.norm.history(&h.advance(make_observation(day.current(t), s2.soc)))
                    } else {
                        self.norm.state(&s2)
                    };
                    scale * out.reward + gamma * self.agent.target_value(&x2)?
                };
                buf.push(Labelled { x, u, y });
                if buf.len() >= self.cfg.warmup {
                    let batch = buf.sample(self.cfg.batch, &mut self.minibatch)?;
                    let labelled: Vec<(&Encoded, f64, f64)> = batch.iter().map(|l| (&l.x, l.u, l.y)).collect();
                    let lr = self.cfg.lr_multiplier(updates, total_updates);
                    updates += 1;
                    running.add(self.agent.update(&labelled, t + 1, lr)?);
                }
                if (e + 1) % self.cfg.eval_period == 0 && running.n > 0 {
                    let (loss, q) = running.take();
                    curve.push(CurvePoint { step: t + 1, episode: e + 1, critic_loss: loss, mean_q: q, eval_return: None });
                }
            }
            actors[t] = Some(self.agent.actor.clone());
            critics[t] = Some(self.agent.critic.clone());
            copy_params(&mut self.agent.actor_target, &self.agent.actor)?;
            copy_params(&mut self.agent.critic_target, &self.agent.critic)?;
        }

        let kind = if recurrent { BundleKind::TimeIndexedRecurrent } else { BundleKind::TimeIndexed };
        let bundle = self.bundle(kind, actors.into_iter().map(|a| a.expect("every step trained")).collect());
        let critics = CriticSet {
            spec: self.agent.critic_spec.clone(),
            critics: critics.into_iter().map(|c| c.expect("every step trained")).collect(),
            reward_scale: scale,
        };
        Ok(TrainOutput { bundle, critics, curve })
    }
}
