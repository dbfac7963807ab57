use alloc::vec::Vec;

use super::ParamSet;
use crate::error::{config, Result};
use crate::math::{powi, sqrt};

/// Step size and moment decay rates of the adaptive-moment update.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct OptimizerConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimizerConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(config("optimizer step size must be positive"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(config("moment decay rates must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Per-parameter first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self { m: alloc::vec![0.0; n], v: alloc::vec![0.0; n], t: 0 }
    }

    pub fn reset(&mut self) {
        self.m.iter_mut().for_each(|x| *x = 0.0);
        self.v.iter_mut().for_each(|x| *x = 0.0);
        self.t = 0;
    }

    pub fn steps(&self) -> i32 {
        self.t
    }
}

/// Applies one bias-corrected adaptive-moment step that descends the gradient
/// stored in `params`.
pub fn opt_step(params: &mut ParamSet, adam: &mut Adam, cfg: &OptimizerConfig) {
    debug_assert_eq!(adam.m.len(), params.len());
    adam.t = adam.t.saturating_add(1);
    let c1 = 1.0 - powi(cfg.beta1, adam.t);
    let c2 = 1.0 - powi(cfg.beta2, adam.t);
    let (values, grads) = params.values_and_grads_mut();
    for i in 0..values.len() {
        let g = grads[i];
        adam.m[i] = cfg.beta1 * adam.m[i] + (1.0 - cfg.beta1) * g;
        adam.v[i] = cfg.beta2 * adam.v[i] + (1.0 - cfg.beta2) * g * g;
        values[i] -= cfg.lr * (adam.m[i] / c1) / (sqrt(adam.v[i] / c2) + cfg.eps);
    }
}
