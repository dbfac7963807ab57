use alloc::vec::Vec;

use super::{uniform, Activation, Block, ParamSet, FINAL_LAYER_INIT};
use crate::error::{config, Error, Result};
use crate::math::sqrt;
use crate::rng::Rng;

/// Feed-forward network with rectifier hidden layers. An optional auxiliary
/// vector is concatenated to the input of layer `aux_layer` (0 is the first
/// hidden layer, `hidden.len()` the output layer).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct MlpSpec {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    pub output_activation: Activation,
    pub aux: usize,
    pub aux_layer: usize,
}

impl MlpSpec {
    pub fn new(input: usize, hidden: &[usize], output: usize, output_activation: Activation) -> Self {
        Self { input, hidden: hidden.to_vec(), output, output_activation, aux: 0, aux_layer: 0 }
    }

    pub fn with_aux(mut self, aux: usize, layer: usize) -> Self {
        self.aux = aux;
        self.aux_layer = layer;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.output == 0 || self.hidden.iter().any(|&w| w == 0) {
            return Err(config("network widths must be at least 1"));
        }
        if self.aux > 0 && self.aux_layer > self.hidden.len() {
            return Err(config("auxiliary input layer index out of range"));
        }
        Ok(())
    }

    pub(crate) fn layers(&self, offset: usize) -> Vec<DenseLayer> {
        stack(self.input, &self.hidden, self.output, self.output_activation, self.aux, self.aux_layer, offset)
    }

    pub fn layout(&self) -> Vec<Block> {
        layout_of(&self.layers(0))
    }

    pub fn init(&self, rng: &mut Rng) -> ParamSet {
        let layers = self.layers(0);
        let mut p = ParamSet::zeros(layout_of(&layers));
        init_stack(&layers, p.values_mut(), rng);
        p
    }

    pub(crate) fn forward(&self, values: &[f64], input: &[f64], aux: &[f64], tape: &mut DenseTape) -> Result<()> {
        if input.len() != self.input {
            return Err(Error::Shape { what: "network input", expected: self.input, got: input.len() });
        }
        if aux.len() != self.aux {
            return Err(Error::Shape { what: "auxiliary input", expected: self.aux, got: aux.len() });
        }
        forward_stack(&self.layers(0), values, input, aux, tape);
        Ok(())
    }

    pub(crate) fn backward(
        &self,
        values: &[f64],
        grads: Option<&mut [f64]>,
        upstream: &[f64],
        tape: &mut DenseTape,
        to_input: bool,
    ) {
        backward_stack(&self.layers(0), values, grads, upstream, tape, to_input);
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DenseLayer {
    /// Main input width (excluding aux).
    main: usize,
    aux: usize,
    out: usize,
    act: Activation,
    w: usize,
    b: usize,
    last: bool,
}

impl DenseLayer {
    fn inp(&self) -> usize {
        self.main + self.aux
    }
}

pub(crate) fn stack(
    input: usize,
    hidden: &[usize],
    output: usize,
    out_act: Activation,
    aux: usize,
    aux_layer: usize,
    mut offset: usize,
) -> Vec<DenseLayer> {
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    let mut main = input;
    for (l, &out) in hidden.iter().chain(core::iter::once(&output)).enumerate() {
        let last = l == hidden.len();
        let a = if aux > 0 && l == aux_layer { aux } else { 0 };
        let w = offset;
        let b = w + out * (main + a);
        offset = b + out;
        let act = if last { out_act } else { Activation::Relu };
        layers.push(DenseLayer { main, aux: a, out, act, w, b, last });
        main = out;
    }
    layers
}

pub(crate) fn layout_of(layers: &[DenseLayer]) -> Vec<Block> {
    layers.iter().flat_map(|l| [Block { rows: l.out, cols: l.inp() }, Block { rows: l.out, cols: 1 }]).collect()
}

pub(crate) fn init_stack(layers: &[DenseLayer], values: &mut [f64], rng: &mut Rng) {
    for l in layers {
        let bound = if l.last { FINAL_LAYER_INIT } else { 1.0 / sqrt(l.inp() as f64) };
        for v in &mut values[l.w..l.b + l.out] {
            *v = uniform(rng, bound);
        }
    }
}

/// Activations of one pass through a dense stack.
#[derive(Debug, Clone, Default)]
pub(crate) struct DenseTape {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    pub(crate) d_input: Vec<f64>,
    pub(crate) d_aux: Vec<f64>,
}

impl DenseTape {
    pub(crate) fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub(crate) fn forward_stack(layers: &[DenseLayer], values: &[f64], input: &[f64], aux: &[f64], tape: &mut DenseTape) {
    let n = layers.len();
    tape.inputs.resize_with(n, Vec::new);
    tape.pre.resize_with(n, Vec::new);
    tape.post.resize_with(n, Vec::new);
    for (i, l) in layers.iter().enumerate() {
        let mut x = core::mem::take(&mut tape.inputs[i]);
        x.clear();
        if i == 0 {
            x.extend_from_slice(input);
        } else {
            x.extend_from_slice(&tape.post[i - 1]);
        }
        if l.aux > 0 {
            x.extend_from_slice(aux);
        }
        let pre = &mut tape.pre[i];
        let post = &mut tape.post[i];
        pre.clear();
        post.clear();
        let inp = l.inp();
        for o in 0..l.out {
            let row = &values[l.w + o * inp..l.w + (o + 1) * inp];
            let mut z = values[l.b + o];
            for (w, xv) in row.iter().zip(&x) {
                z += w * xv;
            }
            pre.push(z);
            post.push(l.act.apply(z));
        }
        tape.inputs[i] = x;
    }
}

pub(crate) fn backward_stack(
    layers: &[DenseLayer],
    values: &[f64],
    mut grads: Option<&mut [f64]>,
    upstream: &[f64],
    tape: &mut DenseTape,
    to_input: bool,
) {
    let mut d_out: Vec<f64> = upstream.to_vec();
    tape.d_aux.clear();
    tape.d_input.clear();
    for (i, l) in layers.iter().enumerate().rev() {
        let inp = l.inp();
        let x = &tape.inputs[i];
        let mut dz = d_out;
        for o in 0..l.out {
            dz[o] *= l.act.grad(tape.pre[i][o], tape.post[i][o]);
        }
        if let Some(g) = grads.as_deref_mut() {
            for o in 0..l.out {
                let d = dz[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut g[l.w + o * inp..l.w + (o + 1) * inp];
                for (gw, xv) in row.iter_mut().zip(x) {
                    *gw += d * xv;
                }
                g[l.b + o] += d;
            }
        }
        // Without parameter gradients or an input gradient to deliver, the
        // pass can stop once no aux input remains below.
        let below = if i == 0 { to_input } else { to_input || grads.is_some() || layers[..i].iter().any(|b| b.aux > 0) };
        if !below && l.aux == 0 {
            return;
        }
        let mut dx = alloc::vec![0.0; inp];
        for o in 0..l.out {
            let d = dz[o];
            if d == 0.0 {
                continue;
            }
            let row = &values[l.w + o * inp..l.w + (o + 1) * inp];
            for (dxv, w) in dx.iter_mut().zip(row) {
                *dxv += d * w;
            }
        }
        if l.aux > 0 {
            tape.d_aux.extend_from_slice(&dx[l.main..]);
            dx.truncate(l.main);
        }
        d_out = dx;
    }
    tape.d_input = d_out;
}
