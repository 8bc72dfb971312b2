//! A tiny fully-connected action-value network.
//!
//! Hidden layers use a rectifier, the output layer is linear with one unit
//! per transmission pattern. Parameters live in one flat vector so that
//! clipping and the optimizer work on plain slices.

mod complexity;
pub mod gradcheck;
mod optim;

pub use complexity::{complexity_bounds, forward_cost, ComplexityBounds};
pub use optim::{clip_gradient, l2_norm, RmspropState};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyNet {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Samples for one training step: encoded contexts, the chosen pattern per
/// sample and the reward it earned.
#[derive(Debug, Clone, Default)]
pub struct TrainBatch {
    pub inputs: Vec<Vec<f64>>,
    pub action_indices: Vec<usize>,
    pub rewards: Vec<f64>,
}

impl TrainBatch {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, input: Vec<f64>, action: usize, reward: f64) {
        self.inputs.push(input);
        self.action_indices.push(action);
        self.rewards.push(reward);
    }
}

/// Weight matrix (row-major, `out x in`) followed by `out` biases.
#[derive(Debug, Clone, Copy)]
struct LayerSpan {
    n_in: usize,
    n_out: usize,
    offset: usize,
}

impl LayerSpan {
    fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.n_in * self.n_out
    }

    fn biases(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.n_in * self.n_out;
        start..start + self.n_out
    }

    fn end(&self) -> usize {
        self.offset + self.n_out * (self.n_in + 1)
    }
}

pub fn param_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

fn validate_shape(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(SimError::invalid("a network needs an input and an output layer"));
    }
    if layer_sizes.contains(&0) {
        return Err(SimError::invalid(format!("zero-width layer in {layer_sizes:?}")));
    }
    Ok(())
}

impl TinyNet {
    /// Fan-based uniform initialization: weights in `±sqrt(6 / (fan_in + fan_out))`,
    /// biases zero.
    pub fn init<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Result<Self> {
        validate_shape(layer_sizes)?;
        let mut params = Vec::with_capacity(param_count(layer_sizes));
        for w in layer_sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            params.extend((0..n_in * n_out).map(|_| rng.random_range(-limit..=limit)));
            params.extend(std::iter::repeat_n(0.0, n_out));
        }
        Ok(TinyNet {
            layer_sizes: layer_sizes.to_vec(),
            params,
        })
    }

    pub fn from_params(layer_sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        validate_shape(layer_sizes)?;
        if params.len() != param_count(layer_sizes) {
            return Err(SimError::invalid(format!(
                "{} parameters given, shape {layer_sizes:?} needs {}",
                params.len(),
                param_count(layer_sizes)
            )));
        }
        Ok(TinyNet {
            layer_sizes: layer_sizes.to_vec(),
            params,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    fn spans(&self) -> Vec<LayerSpan> {
        let mut offset = 0;
        self.layer_sizes
            .windows(2)
            .map(|w| {
                let span = LayerSpan {
                    n_in: w[0],
                    n_out: w[1],
                    offset,
                };
                offset = span.end();
                span
            })
            .collect()
    }

    /// Index of the layer (0 = first weight layer) owning parameter `param`.
    pub fn layer_of_param(&self, param: usize) -> usize {
        self.spans()
            .iter()
            .position(|s| param < s.end())
            .unwrap_or(self.layer_sizes.len() - 2)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(SimError::invalid(format!(
                "input has {} entries, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Action values for input `x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let spans = self.spans();
        let mut trace = Trace::new(&self.layer_sizes);
        self.forward_into(&spans, x, &mut trace);
        Ok(trace.activations.pop().unwrap())
    }

    fn forward_into(&self, spans: &[LayerSpan], x: &[f64], trace: &mut Trace) {
        trace.activations[0].copy_from_slice(x);
        let last = spans.len() - 1;
        for (l, span) in spans.iter().enumerate() {
            let w = &self.params[span.weights()];
            let b = &self.params[span.biases()];
            let (done, rest) = trace.activations.split_at_mut(l + 1);
            let input = &done[l];
            let pre = &mut trace.pre_activations[l];
            let out = &mut rest[0];
            for o in 0..span.n_out {
                let row = &w[o * span.n_in..(o + 1) * span.n_in];
                let z = row.iter().zip(input.iter()).map(|(a, b)| a * b).sum::<f64>() + b[o];
                pre[o] = z;
                out[o] = if l == last { z } else { z.max(0.0) };
            }
        }
    }

    fn check_batch(&self, batch: &TrainBatch) -> Result<()> {
        if batch.is_empty() {
            return Err(SimError::invalid("empty training batch"));
        }
        if batch.action_indices.len() != batch.len() || batch.rewards.len() != batch.len() {
            return Err(SimError::invalid("batch lists differ in length"));
        }
        if let Some(&a) = batch.action_indices.iter().find(|&&a| a >= self.output_dim()) {
            return Err(SimError::invalid(format!("action index {a} out of range")));
        }
        batch.inputs.iter().try_for_each(|x| self.check_input(x))
    }

    /// Mean squared error between reward and the chosen action's value, over
    /// the batch. Outputs of non-chosen actions do not contribute.
    pub fn masked_loss(&self, batch: &TrainBatch) -> Result<f64> {
        self.check_batch(batch)?;
        let spans = self.spans();
        let mut trace = Trace::new(&self.layer_sizes);
        let mut total = 0.0;
        for ((x, &a), &r) in batch.inputs.iter().zip(&batch.action_indices).zip(&batch.rewards) {
            self.forward_into(&spans, x, &mut trace);
            let q = trace.activations.last().unwrap()[a];
            total += (r - q) * (r - q);
        }
        Ok(total / batch.len() as f64)
    }

    /// Masked loss and its exact gradient with respect to every parameter.
    pub fn backprop(&self, batch: &TrainBatch) -> Result<(f64, Vec<f64>)> {
        self.check_batch(batch)?;
        let spans = self.spans();
        let mut trace = Trace::new(&self.layer_sizes);
        let mut grad = vec![0.0; self.params.len()];
        let mut deltas: Vec<Vec<f64>> = self.layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        let scale = 2.0 / batch.len() as f64;
        let mut total = 0.0;

        for ((x, &a), &r) in batch.inputs.iter().zip(&batch.action_indices).zip(&batch.rewards) {
            self.forward_into(&spans, x, &mut trace);
            let q = trace.activations.last().unwrap()[a];
            let residual = r - q;
            total += residual * residual;

            let out = deltas.last_mut().unwrap();
            out.fill(0.0);
            out[a] = -scale * residual;

            for l in (0..spans.len()).rev() {
                let span = spans[l];
                let input = &trace.activations[l];
                let (lower, upper) = deltas.split_at_mut(l);
                let delta = &upper[0];
                let g = &mut grad[span.offset..span.end()];
                let (gw, gb) = g.split_at_mut(span.n_in * span.n_out);
                for o in 0..span.n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    for (gwi, &xi) in gw[o * span.n_in..(o + 1) * span.n_in].iter_mut().zip(input) {
                        *gwi += d * xi;
                    }
                }
                if l > 0 {
                    let w = &self.params[span.weights()];
                    let prev = &mut lower[l - 1];
                    let pre = &trace.pre_activations[l - 1];
                    for i in 0..span.n_in {
                        prev[i] = if pre[i] > 0.0 {
                            (0..span.n_out).map(|o| w[o * span.n_in + i] * delta[o]).sum()
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
        Ok((total / batch.len() as f64, grad))
    }

    /// Smallest absolute hidden pre-activation over a batch; finite
    /// differences are unreliable near a rectifier kink.
    pub fn min_hidden_margin(&self, batch: &TrainBatch) -> Result<f64> {
        self.check_batch(batch)?;
        let spans = self.spans();
        let mut trace = Trace::new(&self.layer_sizes);
        let mut margin = f64::INFINITY;
        for x in &batch.inputs {
            self.forward_into(&spans, x, &mut trace);
            let hidden = &trace.pre_activations[..spans.len() - 1];
            for z in hidden.iter().flatten() {
                margin = margin.min(z.abs());
            }
        }
        Ok(margin)
    }
}

struct Trace {
    activations: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

impl Trace {
    fn new(layer_sizes: &[usize]) -> Self {
        Trace {
            activations: layer_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            pre_activations: layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}
