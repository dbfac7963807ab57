use alloc::vec::Vec;

use crate::error::{config, Result};
use crate::profile::InitialSoc;

/// The four learning algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Learner {
    #[cfg_attr(feature = "serde", serde(rename = "ddpg"))]
    Ddpg,
    #[cfg_attr(feature = "serde", serde(rename = "rdpg"))]
    Rdpg,
    #[cfg_attr(feature = "serde", serde(rename = "fh-ddpg"))]
    FhDdpg,
    #[cfg_attr(feature = "serde", serde(rename = "fh-rdpg"))]
    FhRdpg,
}

impl Learner {
    pub fn recurrent(self) -> bool {
        matches!(self, Learner::Rdpg | Learner::FhRdpg)
    }

    pub fn finite_horizon(self) -> bool {
        matches!(self, Learner::FhDdpg | Learner::FhRdpg)
    }
}

/// Layer widths of one network. A non-empty `lstm` makes it recurrent, in
/// which case `dense` is the head after the recurrent layers.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct NetShape {
    #[cfg_attr(feature = "serde", serde(default))]
    pub lstm: Vec<usize>,
    pub dense: Vec<usize>,
}

impl NetShape {
    pub fn mlp(dense: &[usize]) -> Self {
        Self { lstm: Vec::new(), dense: dense.to_vec() }
    }

    pub fn recurrent(lstm: &[usize], dense: &[usize]) -> Self {
        Self { lstm: lstm.to_vec(), dense: dense.to_vec() }
    }
}

/// Hyper-parameters of one training run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct TrainConfig {
    pub actor: NetShape,
    pub critic: NetShape,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub batch: usize,
    pub buffer: usize,
    /// Transitions collected before the first minibatch update.
    pub warmup: usize,
    /// Episodes per time step for the finite-horizon learners, total
    /// episodes for the stationary ones.
    pub episodes: usize,
    pub reward_scale: f64,
    /// Target mixing fraction per update (stationary learners only).
    pub soft_update: f64,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    /// Episodes between noise-free evaluation snapshots.
    pub eval_period: usize,
    /// Episodes averaged in each snapshot.
    pub curve_episodes: usize,
    /// Distribution of the battery charge for exploration episodes.
    pub train_soc: InitialSoc,
    /// Learning-rate multiplier reached at the last update of each training
    /// run, decaying linearly from 1. A value of 1 keeps the rates fixed.
    pub lr_floor: f64,
}

impl TrainConfig {
    /// Sizes and rates of the published experiments.
    pub fn published(algo: Learner) -> Self {
        let (actor, critic, actor_lr, critic_lr) = match algo {
            Learner::FhDdpg => (NetShape::mlp(&[400, 300, 100]), NetShape::mlp(&[400, 300, 100]), 5e-6, 5e-5),
            Learner::FhRdpg => (
                NetShape::recurrent(&[128], &[128, 64]),
                NetShape::recurrent(&[128], &[128, 64]),
                5e-6,
                5e-5,
            ),
            Learner::Ddpg => (NetShape::mlp(&[256, 128]), NetShape::mlp(&[256, 128]), 1e-6, 1e-5),
            Learner::Rdpg => (
                NetShape::recurrent(&[128], &[128]),
                NetShape::recurrent(&[128], &[128, 256]),
                1e-6,
                1e-5,
            ),
        };
        Self {
            actor,
            critic,
            actor_lr,
            critic_lr,
            batch: 128,
            buffer: 20_000,
            warmup: 1280,
            episodes: 5000,
            reward_scale: 2e-3,
            soft_update: 1e-3,
            ou_theta: 0.15,
            ou_sigma: 0.5,
            eval_period: 50,
            curve_episodes: 5,
            train_soc: InitialSoc::Uniform,
            lr_floor: 1.0,
        }
    }

    /// Smaller networks and fewer episodes that train in a few minutes each on
    /// one core. Learning rates keep the published ratio between the
    /// finite-horizon and stationary learners; the small networks tolerate
    /// larger steps, and lower exploration noise keeps the per-step
    /// datasets close to the policy being learned.
    pub fn desk(algo: Learner) -> Self {
        let mut c = Self::published(algo);
        match algo {
            Learner::FhDdpg => {
                c.actor = NetShape::mlp(&[64, 48]);
                c.critic = NetShape::mlp(&[64, 48]);
            }
            Learner::Ddpg => {
                c.actor = NetShape::mlp(&[64, 48]);
                c.critic = NetShape::mlp(&[64, 48]);
            }
            Learner::FhRdpg | Learner::Rdpg => {
                c.actor = NetShape::recurrent(&[16], &[48]);
                c.critic = NetShape::recurrent(&[16], &[48, 32]);
            }
        }
        let (a, q) = if algo.finite_horizon() { (3e-4, 3e-3) } else { (6e-5, 6e-4) };
        c.actor_lr = a;
        c.critic_lr = q;
        c.ou_sigma = 0.15;
        c.batch = 64;
        c.warmup = 640;
        c.episodes = match algo {
            Learner::FhDdpg | Learner::FhRdpg => 3000,
            Learner::Ddpg | Learner::Rdpg => 1000,
        };
        c.curve_episodes = 3;
        c
    }

    /// Learning-rate multiplier for update `k` out of `total`.
    pub fn lr_multiplier(&self, k: usize, total: usize) -> f64 {
        if total <= 1 {
            return 1.0;
        }
        1.0 - (1.0 - self.lr_floor) * k.min(total - 1) as f64 / (total - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 || self.buffer < self.batch {
            return Err(config("buffer must hold at least one minibatch"));
        }
        if self.warmup < self.batch {
            return Err(config("warm-up must cover at least one minibatch"));
        }
        if self.episodes == 0 {
            return Err(config("episodes must be at least 1"));
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return Err(config("learning rates must be positive"));
        }
        if !(self.reward_scale > 0.0) {
            return Err(config("reward scale must be positive"));
        }
        if !(0.0..=1.0).contains(&self.soft_update) {
            return Err(config("soft update must lie in [0, 1]"));
        }
        if !(self.ou_theta >= 0.0 && self.ou_sigma >= 0.0) {
            return Err(config("noise parameters must be non-negative"));
        }
        if !(self.lr_floor > 0.0 && self.lr_floor <= 1.0) {
            return Err(config("learning-rate floor must lie in (0, 1]"));
        }
        if self.eval_period == 0 {
            return Err(config("evaluation period must be at least 1"));
        }
        if self.actor.dense.iter().chain(&self.critic.dense).chain(&self.actor.lstm).chain(&self.critic.lstm).any(|&w| w == 0) {
            return Err(config("layer widths must be at least 1"));
        }
        Ok(())
    }
}
