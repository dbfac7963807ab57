//! Small dense and recurrent function approximators with exact reverse-mode
//! gradients, plus the adaptive-moment optimizer used to train them.
//!
//! Parameters live in a flat [`ParamSet`]; a [`NetSpec`] knows how to read
//! that storage. A [`Tape`] records one forward pass so that `backward` can
//! accumulate parameter gradients and return gradients w.r.t. the inputs
//! (the critic's action gradient is taken this way).

mod adam;
mod dense;
mod lstm;
mod params;

pub use adam::{opt_step, Adam, OptimizerConfig};
pub use dense::MlpSpec;
pub use lstm::{LstmCarry, RecurrentSpec};
pub use params::{blend_params, copy_params, Block, ParamSet};

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub(crate) fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Tanh => crate::math::tanh(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `y`.
    #[inline]
    pub(crate) fn grad(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Architecture of one approximator.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum NetSpec {
    Mlp(MlpSpec),
    Recurrent(RecurrentSpec),
}

impl NetSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            NetSpec::Mlp(s) => s.validate(),
            NetSpec::Recurrent(s) => s.validate(),
        }
    }

    pub fn layout(&self) -> Vec<Block> {
        match self {
            NetSpec::Mlp(s) => s.layout(),
            NetSpec::Recurrent(s) => s.layout(),
        }
    }

    pub fn output_len(&self) -> usize {
        match self {
            NetSpec::Mlp(s) => s.output,
            NetSpec::Recurrent(s) => s.output,
        }
    }

    pub fn aux_len(&self) -> usize {
        match self {
            NetSpec::Mlp(s) => s.aux,
            NetSpec::Recurrent(s) => s.aux,
        }
    }

    /// Fresh parameters: fan-in scaled uniform for hidden layers, uniform in
    /// `±3e-3` for the output layer.
    pub fn init_params(&self, rng: &mut Rng) -> ParamSet {
        match self {
            NetSpec::Mlp(s) => s.init(rng),
            NetSpec::Recurrent(s) => s.init(rng),
        }
    }

    /// Runs the network on `input` (flat features, or a flattened sequence for
    /// recurrent specs) with `aux` injected at the configured layer.
    pub fn forward<'t>(&self, params: &ParamSet, input: &[f64], aux: &[f64], tape: &'t mut Tape) -> Result<&'t [f64]> {
        self.check_layout(params)?;
        tape.ready = false;
        match self {
            NetSpec::Mlp(s) => {
                tape.rec.steps = 0;
                s.forward(params.values(), input, aux, &mut tape.dense)?
            }
            NetSpec::Recurrent(s) => s.forward(params.values(), input, aux, &mut tape.rec, &mut tape.dense)?,
        }
        tape.ready = true;
        tape.spec_len = params.len();
        Ok(tape.dense.output())
    }

    /// Reverse pass for the forward pass recorded in `tape`.
    ///
    /// With `accumulate` set, parameter gradients are added into the
    /// gradient buffer of `params`; input and aux gradients are always
    /// available afterwards through [`Tape::input_grad`] and [`Tape::aux_grad`].
    pub fn backward(&self, params: &mut ParamSet, tape: &mut Tape, upstream: &[f64], accumulate: bool) -> Result<()> {
        if !tape.ready || tape.spec_len != params.len() {
            return Err(Error::CallOrder);
        }
        if upstream.len() != self.output_len() {
            return Err(Error::Shape { what: "upstream gradient", expected: self.output_len(), got: upstream.len() });
        }
        let (values, grads) = params.split_mut();
        let grads = if accumulate { Some(grads) } else { None };
        self.reverse(values, grads, upstream, tape, true);
        Ok(())
    }

    /// Reverse pass that only produces [`Tape::aux_grad`]; layers below the
    /// aux injection point are skipped and parameter gradients untouched.
    pub fn backward_aux(&self, params: &ParamSet, tape: &mut Tape, upstream: &[f64]) -> Result<()> {
        if !tape.ready || tape.spec_len != params.len() {
            return Err(Error::CallOrder);
        }
        if upstream.len() != self.output_len() {
            return Err(Error::Shape { what: "upstream gradient", expected: self.output_len(), got: upstream.len() });
        }
        self.reverse(params.values(), None, upstream, tape, false);
        Ok(())
    }

    fn reverse(&self, values: &[f64], grads: Option<&mut [f64]>, upstream: &[f64], tape: &mut Tape, to_input: bool) {
        match self {
            NetSpec::Mlp(s) => s.backward(values, grads, upstream, &mut tape.dense, to_input),
            NetSpec::Recurrent(s) => s.backward(values, grads, upstream, &mut tape.rec, &mut tape.dense, to_input),
        }
    }

    fn check_layout(&self, params: &ParamSet) -> Result<()> {
        let want: usize = self.layout().iter().map(Block::len).sum();
        if params.len() != want {
            return Err(Error::Shape { what: "parameter count", expected: want, got: params.len() });
        }
        Ok(())
    }
}

/// Scratch space recording one forward pass.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    dense: dense::DenseTape,
    rec: lstm::LstmTape,
    ready: bool,
    spec_len: usize,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Gradient w.r.t. the main input of the last backward pass.
    pub fn input_grad(&self) -> &[f64] {
        if self.rec.steps > 0 {
            &self.rec.d_input
        } else {
            &self.dense.d_input
        }
    }

    /// Gradient w.r.t. the auxiliary input of the last backward pass.
    pub fn aux_grad(&self) -> &[f64] {
        &self.dense.d_aux
    }
}

pub(crate) fn uniform(rng: &mut Rng, bound: f64) -> f64 {
    use rand::Rng as _;
    if bound == 0.0 {
        return 0.0;
    }
    rng.random_range(-bound..=bound)
}

/// Bound of the uniform output-layer initialisation.
pub const FINAL_LAYER_INIT: f64 = 3e-3;
