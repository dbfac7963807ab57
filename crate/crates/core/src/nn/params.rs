use alloc::vec::Vec;

use crate::error::{contract, Error, Result};

/// One contiguous parameter tensor inside a [`ParamSet`] (row-major).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Block {
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Flat parameter storage with a same-shaped gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    layout: Vec<Block>,
    values: Vec<f64>,
    grads: Vec<f64>,
}

impl ParamSet {
    pub fn zeros(layout: Vec<Block>) -> Self {
        let n = layout.iter().map(Block::len).sum();
        Self { layout, values: alloc::vec![0.0; n], grads: alloc::vec![0.0; n] }
    }

    pub fn from_values(layout: Vec<Block>, values: Vec<f64>) -> Result<Self> {
        let n: usize = layout.iter().map(Block::len).sum();
        if n != values.len() {
            return Err(Error::Shape { what: "parameter values", expected: n, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(contract("parameters must be finite"));
        }
        Ok(Self { layout, grads: alloc::vec![0.0; n], values })
    }

    pub fn layout(&self) -> &[Block] {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn grads(&self) -> &[f64] {
        &self.grads
    }

    pub fn grads_mut(&mut self) -> &mut [f64] {
        &mut self.grads
    }

    pub(crate) fn split_mut(&mut self) -> (&[f64], &mut [f64]) {
        (&self.values, &mut self.grads)
    }

    pub(crate) fn values_and_grads_mut(&mut self) -> (&mut [f64], &[f64]) {
        (&mut self.values, &self.grads)
    }

    pub fn zero_grad(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn scale_grad(&mut self, k: f64) {
        self.grads.iter_mut().for_each(|g| *g *= k);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().chain(&self.grads).all(|v| v.is_finite())
    }
}

/// `dst <- (1 - mix) * dst + mix * src`; `mix = 1` is an exact copy.
pub fn blend_params(dst: &mut ParamSet, src: &ParamSet, mix: f64) -> Result<()> {
    if dst.layout != src.layout {
        return Err(contract("cannot blend parameter sets with different layouts"));
    }
    if !(0.0..=1.0).contains(&mix) {
        return Err(contract("blend fraction must lie in [0, 1]"));
    }
    if mix == 1.0 {
        dst.values.copy_from_slice(&src.values);
    } else if mix > 0.0 {
        for (d, s) in dst.values.iter_mut().zip(&src.values) {
            *d = (1.0 - mix) * *d + mix * s;
        }
    }
    Ok(())
}

pub fn copy_params(dst: &mut ParamSet, src: &ParamSet) -> Result<()> {
    blend_params(dst, src, 1.0)
}
