//! Small fully-connected ReLU network with hand-written backpropagation.
//!
//! Layout: `hidden_layers` affine+ReLU blocks of `hidden_units` each, then a
//! final affine map to `output_dim` action values. Everything is `f64`.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::Transition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSpec {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub output_dim: usize,
}

impl NetSpec {
    pub fn new(input_dim: usize, hidden_layers: usize, hidden_units: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_layers,
            hidden_units,
            output_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_units == 0 || self.output_dim == 0 {
            return Err(Error::config("network dimensions must be positive"));
        }
        if self.hidden_layers == 0 {
            return Err(Error::config("network needs at least one hidden layer"));
        }
        Ok(())
    }

    /// Number of learnable scalars, weights and biases.
    pub fn parameter_count(&self) -> usize {
        let h = self.hidden_units;
        self.input_dim * h
            + h
            + (self.hidden_layers - 1) * (h * h + h)
            + h * self.output_dim
            + self.output_dim
    }

    /// `(fan_in, fan_out)` of every affine layer.
    fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.hidden_layers + 1);
        let mut fan_in = self.input_dim;
        for _ in 0..self.hidden_layers {
            shapes.push((fan_in, self.hidden_units));
            fan_in = self.hidden_units;
        }
        shapes.push((fan_in, self.output_dim));
        shapes
    }

    /// Short label `LxH`, e.g. `2x16`.
    pub fn label(&self) -> String {
        format!("{}x{}", self.hidden_layers, self.hidden_units)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// `W x + b`, skipping zero inputs.
    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.weights[j * self.inputs + i] * xi;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetParams {
    spec: NetSpec,
    layers: Vec<Layer>,
}

/// Per-layer inputs and pre-activations kept for the backward pass.
struct Trace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl NetParams {
    pub fn zeros(spec: NetSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_shapes()
            .into_iter()
            .map(|(i, o)| Layer::zeros(i, o))
            .collect();
        Ok(Self { spec, layers })
    }

    /// Uniform Glorot weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot(spec: NetSpec, rng: &mut impl Rng) -> Result<Self> {
        let mut p = Self::zeros(spec)?;
        for layer in &mut p.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(p)
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(Layer::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameters in save order: per layer, weights row-major then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        for l in &self.layers {
            v.extend_from_slice(&l.weights);
            v.extend_from_slice(&l.bias);
        }
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::contract(format!(
                "flat parameter vector has {} entries, network has {}",
                flat.len(),
                self.len()
            )));
        }
        let mut k = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[k..k + nw]);
            k += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[k..k + nb]);
            k += nb;
        }
        Ok(())
    }

    /// Mutable access to the `k`-th scalar in flat order.
    pub fn param_mut(&mut self, mut k: usize) -> &mut f64 {
        for l in &mut self.layers {
            if k < l.weights.len() {
                return &mut l.weights[k];
            }
            k -= l.weights.len();
            if k < l.bias.len() {
                return &mut l.bias[k];
            }
            k -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.input_dim {
            return Err(Error::contract(format!(
                "network expects {} inputs, got {}",
                self.spec.input_dim,
                x.len()
            )));
        }
        Ok(())
    }

    /// Action values for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if k < last {
                relu(&mut next);
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    fn forward_trace(&self, x: &[f64]) -> (Vec<f64>, Trace) {
        let mut trace = Trace {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.affine(&cur, &mut z);
            trace.inputs.push(cur);
            trace.pre.push(z.clone());
            if k < last {
                relu(&mut z);
            }
            cur = z;
        }
        (cur, trace)
    }

    /// Accumulate `d out[action] / d params`, scaled by `scale`, into `grad`.
    fn backward(&self, trace: &Trace, action: usize, scale: f64, grad: &mut NetParams) {
        let last = self.layers.len() - 1;
        let mut delta = vec![0.0; self.layers[last].outputs];
        delta[action] = scale;
        for k in (0..=last).rev() {
            let layer = &self.layers[k];
            let g = &mut grad.layers[k];
            let input = &trace.inputs[k];
            for (j, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[j] += d;
                let row = &mut g.weights[j * layer.inputs..(j + 1) * layer.inputs];
                for (gw, &xi) in row.iter_mut().zip(input) {
                    if xi != 0.0 {
                        *gw += d * xi;
                    }
                }
            }
            if k == 0 {
                break;
            }
            let below = &trace.pre[k - 1];
            let mut prev = vec![0.0; layer.inputs];
            for (j, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[j * layer.inputs..(j + 1) * layer.inputs];
                for (p, &w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            for (p, &z) in prev.iter_mut().zip(below) {
                if z <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }

    /// `params <- params - step_size * gradient`.
    pub fn sgd_apply(&mut self, gradient: &NetParams, step_size: f64) -> Result<()> {
        if gradient.spec != self.spec {
            return Err(Error::contract("gradient shape differs from parameters"));
        }
        for (l, g) in self.layers.iter_mut().zip(&gradient.layers) {
            for (w, gw) in l.weights.iter_mut().zip(&g.weights) {
                *w -= step_size * gw;
            }
            for (b, gb) in l.bias.iter_mut().zip(&g.bias) {
                *b -= step_size * gb;
            }
        }
        Ok(())
    }

    /// Binary dump: four little-endian `u32` (input, layers, units, outputs)
    /// followed by the flat parameters as little-endian `f64`.
    pub fn save(&self, w: &mut impl Write) -> std::io::Result<()> {
        for d in [
            self.spec.input_dim,
            self.spec.hidden_layers,
            self.spec.hidden_units,
            self.spec.output_dim,
        ] {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for v in self.to_flat() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(r: &mut impl Read) -> Result<Self> {
        let bad = |e: std::io::Error| Error::Parse {
            line: None,
            message: format!("truncated network dump: {e}"),
        };
        let mut header = [0usize; 4];
        for h in &mut header {
            let mut b = [0u8; 4];
            r.read_exact(&mut b).map_err(bad)?;
            *h = u32::from_le_bytes(b) as usize;
        }
        let mut p = Self::zeros(NetSpec::new(header[0], header[1], header[2], header[3]))?;
        let mut flat = vec![0.0; p.len()];
        for v in &mut flat {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(bad)?;
            *v = f64::from_le_bytes(b);
        }
        p.set_flat(&flat)?;
        Ok(p)
    }
}

fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Squared TD loss of a batch and its semi-gradient.
///
/// `loss = 1/2 * sum (r + gamma * max_a' q(o', a'; target) * (1 - done) - q(o, a; params))^2`.
/// The bootstrap target is treated as a constant.
pub fn td_loss_and_grad(
    params: &NetParams,
    target: &NetParams,
    batch: &[&Transition],
    gamma: f64,
) -> Result<(f64, NetParams)> {
    if batch.is_empty() {
        return Err(Error::contract("empty batch"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::contract("discount must lie in [0, 1)"));
    }
    if target.spec != params.spec {
        return Err(Error::contract("target network shape differs from online network"));
    }
    let mut grad = NetParams::zeros(params.spec)?;
    let mut loss = 0.0;
    for t in batch {
        params.check_input(t.obs.flat())?;
        let bootstrap = if t.done {
            0.0
        } else {
            let q_next = target.forward(t.next_obs.flat())?;
            gamma * q_next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        let y = t.reward + bootstrap;
        let a = t.action.index();
        let (q, trace) = params.forward_trace(t.obs.flat());
        let err = y - q[a];
        loss += 0.5 * err * err;
        params.backward(&trace, a, -err, &mut grad);
    }
    Ok((loss, grad))
}
