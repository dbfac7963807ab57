//! Actor and critic pair with their targets and optimisers.

use alloc::vec::Vec;

use super::config::{NetShape, TrainConfig};
use super::encode::Encoded;
use crate::error::{Error, Result};
use crate::nn::{copy_params, opt_step, Activation, Adam, MlpSpec, NetSpec, OptimizerConfig, ParamSet, RecurrentSpec, Tape};
use crate::rng::Rng;

/// Width of one exogenous frame and of a full-state input.
const FRAME: usize = 2;
const STATE: usize = 3;

pub(crate) fn actor_spec(shape: &NetShape) -> NetSpec {
    if shape.lstm.is_empty() {
        NetSpec::Mlp(MlpSpec::new(STATE, &shape.dense, 1, Activation::Tanh))
    } else {
        NetSpec::Recurrent(RecurrentSpec::new(FRAME, &shape.lstm, &shape.dense, 1, Activation::Tanh).with_aux(1, 0))
    }
}

/// The critic sees the action at the second hidden layer of a feed-forward
/// net (the first when there is only one, so the value stays non-linear in
/// the action), or together with the charge at the first dense layer after the
/// recurrent layers.
pub(crate) fn critic_spec(shape: &NetShape) -> NetSpec {
    if shape.lstm.is_empty() {
        let layer = usize::from(shape.dense.len() >= 2);
        NetSpec::Mlp(MlpSpec::new(STATE, &shape.dense, 1, Activation::Identity).with_aux(1, layer))
    } else {
        NetSpec::Recurrent(RecurrentSpec::new(FRAME, &shape.lstm, &shape.dense, 1, Activation::Identity).with_aux(2, 0))
    }
}

pub(crate) struct Agent {
    pub actor_spec: NetSpec,
    pub critic_spec: NetSpec,
    pub actor: ParamSet,
    pub critic: ParamSet,
    pub actor_target: ParamSet,
    pub critic_target: ParamSet,
    actor_opt: Adam,
    critic_opt: Adam,
    actor_cfg: OptimizerConfig,
    critic_cfg: OptimizerConfig,
    ta: Tape,
    tc: Tape,
    aux: Vec<f64>,
}

/// Per-update diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct UpdateStats {
    pub critic_loss: f64,
    pub mean_q: f64,
}

impl Agent {
    pub fn new(cfg: &TrainConfig, actor_rng: &mut Rng, critic_rng: &mut Rng) -> Result<Self> {
        let actor_spec = actor_spec(&cfg.actor);
        let critic_spec = critic_spec(&cfg.critic);
        actor_spec.validate()?;
        critic_spec.validate()?;
        let actor = actor_spec.init_params(actor_rng);
        let critic = critic_spec.init_params(critic_rng);
        let actor_cfg = OptimizerConfig::with_lr(cfg.actor_lr);
        let critic_cfg = OptimizerConfig::with_lr(cfg.critic_lr);
        actor_cfg.validate()?;
        critic_cfg.validate()?;
        Ok(Self {
            actor_opt: Adam::new(actor.len()),
            critic_opt: Adam::new(critic.len()),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            actor_spec,
            critic_spec,
            actor_cfg,
            critic_cfg,
            ta: Tape::new(),
            tc: Tape::new(),
            aux: Vec::new(),
        })
    }

    /// Restores the working networks to `actor`/`critic` with fresh optimiser state.
    pub fn reset_working(&mut self, actor: &ParamSet, critic: &ParamSet) -> Result<()> {
        copy_params(&mut self.actor, actor)?;
        copy_params(&mut self.critic, critic)?;
        self.actor_opt.reset();
        self.critic_opt.reset();
        Ok(())
    }

    pub fn policy(&mut self, x: &Encoded) -> Result<f64> {
        Ok(self.actor_spec.forward(&self.actor, &x.main, &x.side, &mut self.ta)?[0])
    }

    fn critic_aux(&mut self, x: &Encoded, u: f64) {
        self.aux.clear();
        self.aux.extend_from_slice(&x.side);
        self.aux.push(u);
    }

    /// `Q'(x, mu'(x))` from the target pair.
    pub fn target_value(&mut self, x: &Encoded) -> Result<f64> {
        let u = self.actor_spec.forward(&self.actor_target, &x.main, &x.side, &mut self.ta)?[0];
        self.critic_aux(x, u);
        Ok(self.critic_spec.forward(&self.critic_target, &x.main, &self.aux, &mut self.tc)?[0])
    }

    /// One critic regression step towards `y` followed by one deterministic
    /// policy-gradient step of the actor through the updated critic. Both
    /// learning rates are multiplied by `lr_scale`.
    pub fn update(&mut self, batch: &[(&Encoded, f64, f64)], step: usize, lr_scale: f64) -> Result<UpdateStats> {
        let n = batch.len() as f64;
        let mut loss = 0.0;
        self.critic.zero_grad();
        for &(x, u, y) in batch {
            self.critic_aux(x, u);
            let q = self.critic_spec.forward(&self.critic, &x.main, &self.aux, &mut self.tc)?[0];
            let err = q - y;
            loss += 0.5 * err * err;
            self.critic_spec.backward(&mut self.critic, &mut self.tc, &[err / n], true)?;
        }
        loss /= n;
        if !loss.is_finite() {
            return Err(Error::Diverged { step, detail: alloc::format!("critic loss {loss}") });
        }
        opt_step(&mut self.critic, &mut self.critic_opt, &OptimizerConfig { lr: self.critic_cfg.lr * lr_scale, ..self.critic_cfg });

        let mut mean_q = 0.0;
        self.actor.zero_grad();
        for &(x, _, _) in batch {
            let u = self.actor_spec.forward(&self.actor, &x.main, &x.side, &mut self.ta)?[0];
            self.critic_aux(x, u);
            mean_q += self.critic_spec.forward(&self.critic, &x.main, &self.aux, &mut self.tc)?[0];
            self.critic_spec.backward_aux(&self.critic, &mut self.tc, &[1.0])?;
            let dq_du = *self.tc.aux_grad().last().unwrap_or(&0.0);
            // Ascend Q: minimise -Q.
            self.actor_spec.backward(&mut self.actor, &mut self.ta, &[-dq_du / n], true)?;
        }
        opt_step(&mut self.actor, &mut self.actor_opt, &OptimizerConfig { lr: self.actor_cfg.lr * lr_scale, ..self.actor_cfg });
        if !self.actor.is_finite() || !self.critic.is_finite() {
            return Err(Error::Diverged { step, detail: "non-finite network parameters".into() });
        }
        Ok(UpdateStats { critic_loss: loss, mean_q: mean_q / n })
    }
}
