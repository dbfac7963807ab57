use alloc::vec::Vec;

use super::dense::{self, DenseLayer, DenseTape};
use super::{uniform, Activation, Block, ParamSet};
use crate::error::{config, Error, Result};
use crate::math::{sigmoid, sqrt, tanh};
use crate::rng::Rng;

/// Stacked LSTM layers followed by a dense head.
///
/// The main input is a flattened sequence of `step_input`-wide frames. The
/// top recurrent layer's final hidden state feeds the dense head; `aux` is
/// concatenated at dense layer `aux_layer` (0 is the first dense layer).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct RecurrentSpec {
    pub step_input: usize,
    pub lstm: Vec<usize>,
    pub dense: Vec<usize>,
    pub output: usize,
    pub output_activation: Activation,
    pub aux: usize,
    pub aux_layer: usize,
}

#[derive(Debug, Clone, Copy)]
struct LstmLayer {
    inp: usize,
    hid: usize,
    w: usize,
    u: usize,
    b: usize,
}

impl RecurrentSpec {
    pub fn new(step_input: usize, lstm: &[usize], dense: &[usize], output: usize, output_activation: Activation) -> Self {
        Self {
            step_input,
            lstm: lstm.to_vec(),
            dense: dense.to_vec(),
            output,
            output_activation,
            aux: 0,
            aux_layer: 0,
        }
    }

    pub fn with_aux(mut self, aux: usize, layer: usize) -> Self {
        self.aux = aux;
        self.aux_layer = layer;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.step_input == 0 || self.output == 0 {
            return Err(config("network widths must be at least 1"));
        }
        if self.lstm.is_empty() {
            return Err(config("a recurrent network needs at least one LSTM layer"));
        }
        if self.lstm.iter().chain(&self.dense).any(|&w| w == 0) {
            return Err(config("network widths must be at least 1"));
        }
        if self.aux > 0 && self.aux_layer > self.dense.len() {
            return Err(config("auxiliary input layer index out of range"));
        }
        Ok(())
    }

    fn lstm_layers(&self) -> (Vec<LstmLayer>, usize) {
        let mut out = Vec::with_capacity(self.lstm.len());
        let mut inp = self.step_input;
        let mut off = 0;
        for &hid in &self.lstm {
            let w = off;
            let u = w + 4 * hid * inp;
            let b = u + 4 * hid * hid;
            off = b + 4 * hid;
            out.push(LstmLayer { inp, hid, w, u, b });
            inp = hid;
        }
        (out, off)
    }

    fn head(&self, offset: usize) -> Vec<DenseLayer> {
        let top = *self.lstm.last().unwrap_or(&0);
        dense::stack(top, &self.dense, self.output, self.output_activation, self.aux, self.aux_layer, offset)
    }

    pub fn layout(&self) -> Vec<Block> {
        let (layers, off) = self.lstm_layers();
        let mut blocks: Vec<Block> = layers
            .iter()
            .flat_map(|l| {
                [
                    Block { rows: 4 * l.hid, cols: l.inp },
                    Block { rows: 4 * l.hid, cols: l.hid },
                    Block { rows: 4 * l.hid, cols: 1 },
                ]
            })
            .collect();
        blocks.extend(dense::layout_of(&self.head(off)));
        blocks
    }

    pub fn init(&self, rng: &mut Rng) -> ParamSet {
        let (layers, off) = self.lstm_layers();
        let mut p = ParamSet::zeros(self.layout());
        let v = p.values_mut();
        for l in &layers {
            let bw = 1.0 / sqrt(l.inp as f64);
            let bu = 1.0 / sqrt(l.hid as f64);
            for x in &mut v[l.w..l.u] {
                *x = uniform(rng, bw);
            }
            for x in &mut v[l.u..l.b] {
                *x = uniform(rng, bu);
            }
            // Forget-gate bias starts at one so early gradients flow through time.
            for (k, x) in v[l.b..l.b + 4 * l.hid].iter_mut().enumerate() {
                *x = if (l.hid..2 * l.hid).contains(&k) { 1.0 } else { 0.0 };
            }
        }
        dense::init_stack(&self.head(off), v, rng);
        p
    }

    /// Fresh zero recurrent state.
    pub fn carry(&self) -> LstmCarry {
        LstmCarry {
            h: self.lstm.iter().map(|&n| alloc::vec![0.0; n]).collect(),
            c: self.lstm.iter().map(|&n| alloc::vec![0.0; n]).collect(),
        }
    }

    /// Advances the recurrent layers by one frame.
    pub fn step(&self, params: &ParamSet, carry: &mut LstmCarry, frame: &[f64]) -> Result<()> {
        if frame.len() != self.step_input {
            return Err(Error::Shape { what: "sequence frame", expected: self.step_input, got: frame.len() });
        }
        let (layers, _) = self.lstm_layers();
        let v = params.values();
        let mut x = frame.to_vec();
        let mut gates = Vec::new();
        for (k, l) in layers.iter().enumerate() {
            cell(v, l, &x, &carry.h[k], &mut gates);
            let (h, c) = (&mut carry.h[k], &mut carry.c[k]);
            for j in 0..l.hid {
                let (i, f, g, o) = (gates[j], gates[l.hid + j], gates[2 * l.hid + j], gates[3 * l.hid + j]);
                c[j] = f * c[j] + i * g;
                h[j] = o * tanh(c[j]);
            }
            x.clone_from(h);
        }
        Ok(())
    }

    /// Applies the dense head to the top hidden state of `carry`.
    pub fn readout(&self, params: &ParamSet, carry: &LstmCarry, aux: &[f64]) -> Result<Vec<f64>> {
        if aux.len() != self.aux {
            return Err(Error::Shape { what: "auxiliary input", expected: self.aux, got: aux.len() });
        }
        let (_, off) = self.lstm_layers();
        let mut tape = DenseTape::default();
        let top = carry.h.last().map(Vec::as_slice).unwrap_or(&[]);
        dense::forward_stack(&self.head(off), params.values(), top, aux, &mut tape);
        Ok(tape.output().to_vec())
    }

    pub(crate) fn forward(
        &self,
        values: &[f64],
        input: &[f64],
        aux: &[f64],
        tape: &mut LstmTape,
        head: &mut DenseTape,
    ) -> Result<()> {
        if input.is_empty() || input.len() % self.step_input != 0 {
            return Err(Error::Shape { what: "sequence input", expected: self.step_input, got: input.len() });
        }
        if aux.len() != self.aux {
            return Err(Error::Shape { what: "auxiliary input", expected: self.aux, got: aux.len() });
        }
        let steps = input.len() / self.step_input;
        let (layers, off) = self.lstm_layers();
        tape.steps = steps;
        tape.layers.resize_with(layers.len(), LayerTape::default);
        for (k, l) in layers.iter().enumerate() {
            let (below, rest) = tape.layers.split_at_mut(k);
            let lt = &mut rest[0];
            let xs: &[f64] = if k == 0 { input } else { &below[k - 1].h[l.inp..] };
            lt.x.clear();
            lt.x.extend_from_slice(xs);
            lt.gates.clear();
            lt.c.clear();
            lt.h.clear();
            lt.c.resize(l.hid, 0.0);
            lt.h.resize(l.hid, 0.0);
            let mut g = Vec::with_capacity(4 * l.hid);
            for t in 0..steps {
                let x = &lt.x[t * l.inp..(t + 1) * l.inp];
                let hp = &lt.h[t * l.hid..(t + 1) * l.hid];
                cell(values, l, x, hp, &mut g);
                for j in 0..l.hid {
                    let cp = lt.c[t * l.hid + j];
                    let c = g[l.hid + j] * cp + g[j] * g[2 * l.hid + j];
                    lt.c.push(c);
                }
                for j in 0..l.hid {
                    let c = lt.c[(t + 1) * l.hid + j];
                    lt.h.push(g[3 * l.hid + j] * tanh(c));
                }
                lt.gates.extend_from_slice(&g);
            }
        }
        let top = &tape.layers[layers.len() - 1];
        let last = &top.h[steps * top_hid(&layers)..];
        dense::forward_stack(&self.head(off), values, last, aux, head);
        Ok(())
    }

    pub(crate) fn backward(
        &self,
        values: &[f64],
        mut grads: Option<&mut [f64]>,
        upstream: &[f64],
        tape: &mut LstmTape,
        head: &mut DenseTape,
        to_input: bool,
    ) {
        let (layers, off) = self.lstm_layers();
        let through = to_input || grads.is_some();
        dense::backward_stack(&self.head(off), values, grads.as_deref_mut(), upstream, head, through);
        tape.d_input.clear();
        if !through {
            return;
        }
        let steps = tape.steps;
        // Gradient arriving at each step's hidden output from above.
        let top = top_hid(&layers);
        let mut dh_out = alloc::vec![0.0; steps * top];
        dh_out[(steps - 1) * top..].copy_from_slice(&head.d_input);
        for (k, l) in layers.iter().enumerate().rev() {
            let lt = &tape.layers[k];
            let hn = l.hid;
            let mut dx = alloc::vec![0.0; steps * l.inp];
            let mut dh_next = alloc::vec![0.0; hn];
            let mut dc_next = alloc::vec![0.0; hn];
            let mut dz = alloc::vec![0.0; 4 * hn];
            for t in (0..steps).rev() {
                let g = &lt.gates[t * 4 * hn..(t + 1) * 4 * hn];
                for j in 0..hn {
                    let (i, f, gg, o) = (g[j], g[hn + j], g[2 * hn + j], g[3 * hn + j]);
                    let c = lt.c[(t + 1) * hn + j];
                    let cp = lt.c[t * hn + j];
                    let tc = tanh(c);
                    let dh = dh_out[t * hn + j] + dh_next[j];
                    let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
                    dz[j] = dc * gg * i * (1.0 - i);
                    dz[hn + j] = dc * cp * f * (1.0 - f);
                    dz[2 * hn + j] = dc * i * (1.0 - gg * gg);
                    dz[3 * hn + j] = dh * tc * o * (1.0 - o);
                    dc_next[j] = dc * f;
                }
                let x = &lt.x[t * l.inp..(t + 1) * l.inp];
                let hp = &lt.h[t * hn..(t + 1) * hn];
                // The state before the first frame is zero, so the recurrent
                // weights see no gradient there and nothing flows further back.
                let first = t == 0;
                if let Some(gr) = grads.as_deref_mut() {
                    for (r, &d) in dz.iter().enumerate() {
                        for (gw, xv) in gr[l.w + r * l.inp..l.w + (r + 1) * l.inp].iter_mut().zip(x) {
                            *gw += d * xv;
                        }
                        if !first {
                            for (gu, hv) in gr[l.u + r * hn..l.u + (r + 1) * hn].iter_mut().zip(hp) {
                                *gu += d * hv;
                            }
                        }
                        gr[l.b + r] += d;
                    }
                }
                dh_next.iter_mut().for_each(|v| *v = 0.0);
                let dxt = &mut dx[t * l.inp..(t + 1) * l.inp];
                for (r, &d) in dz.iter().enumerate() {
                    for (dv, w) in dxt.iter_mut().zip(&values[l.w + r * l.inp..l.w + (r + 1) * l.inp]) {
                        *dv += d * w;
                    }
                    if !first {
                        for (dv, u) in dh_next.iter_mut().zip(&values[l.u + r * hn..l.u + (r + 1) * hn]) {
                            *dv += d * u;
                        }
                    }
                }
            }
            dh_out = dx;
        }
        tape.d_input = dh_out;
    }
}

fn top_hid(layers: &[LstmLayer]) -> usize {
    layers.last().map_or(0, |l| l.hid)
}

/// Gate activations `[i, f, g, o]` for one frame.
fn cell(v: &[f64], l: &LstmLayer, x: &[f64], h: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let zero_state = h.iter().all(|&hv| hv == 0.0);
    for r in 0..4 * l.hid {
        let mut z = v[l.b + r];
        for (w, xv) in v[l.w + r * l.inp..l.w + (r + 1) * l.inp].iter().zip(x) {
            z += w * xv;
        }
        if !zero_state {
            for (u, hv) in v[l.u + r * l.hid..l.u + (r + 1) * l.hid].iter().zip(h) {
                z += u * hv;
            }
        }
        out.push(if (2 * l.hid..3 * l.hid).contains(&r) { tanh(z) } else { sigmoid(z) });
    }
}

/// Hidden and cell state of every recurrent layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCarry {
    pub h: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
struct LayerTape {
    x: Vec<f64>,
    gates: Vec<f64>,
    /// `steps + 1` frames, the first one being the zero initial state.
    c: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct LstmTape {
    pub(crate) steps: usize,
    layers: Vec<LayerTape>,
    pub(crate) d_input: Vec<f64>,
}
