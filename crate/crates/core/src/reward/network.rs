//! Fully connected network with rectified-linear hidden layers and a linear
//! output layer. All parameters live in one flat vector: for each layer, the
//! row-major `outputs x inputs` weight matrix followed by its bias.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputInit {
    /// Output weights and biases start at zero, so the untrained network
    /// predicts 0 everywhere.
    Zero,
    /// Output layer drawn like the hidden layers. Used for gradient checks.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainScope {
    All,
    /// Only the output layer receives updates. Diagnostic mode.
    OutputOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct LayerSlot {
    inputs: usize,
    outputs: usize,
    weights: usize,
    bias: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    layers: Vec<LayerSlot>,
    params: Vec<f64>,
}

/// One regression target on a single output coordinate.
#[derive(Debug, Clone, Copy)]
pub struct Target<'a> {
    pub input: &'a [f64],
    pub output: usize,
    pub value: f64,
    pub weight: f64,
}

impl Mlp {
    /// `sizes` lists the layer widths from input to output.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], init: OutputInit, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "network needs at least an input and an output layer");
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        let mut offset = 0;
        for pair in sizes.windows(2) {
            let (inputs, outputs) = (pair[0], pair[1]);
            layers.push(LayerSlot { inputs, outputs, weights: offset, bias: offset + inputs * outputs });
            offset += inputs * outputs + outputs;
        }
        let mut net = Self { sizes: sizes.to_vec(), layers, params: vec![0.0; offset] };
        net.reinitialize(init, rng);
        net
    }

    /// Redraws weights: uniform in `±sqrt(6 / fan_in)` for rectified layers,
    /// biases at zero.
    pub fn reinitialize<R: Rng + ?Sized>(&mut self, init: OutputInit, rng: &mut R) {
        self.params.iter_mut().for_each(|p| *p = 0.0);
        let last = self.layers.len() - 1;
        for (l, slot) in self.layers.iter().enumerate() {
            if l == last && init == OutputInit::Zero {
                continue;
            }
            let limit = (6.0 / slot.inputs as f64).sqrt();
            let range = slot.weights..slot.weights + slot.inputs * slot.outputs;
            for p in &mut self.params[range] {
                *p = rng.gen_range(-limit..limit);
            }
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Range of the flat parameter vector that belongs to the output layer.
    pub fn output_layer_range(&self) -> std::ops::Range<usize> {
        let slot = self.layers.last().unwrap();
        slot.weights..slot.bias + slot.outputs
    }

    fn layer_forward(&self, slot: &LayerSlot, input: &[f64], out: &mut Vec<f64>, relu: bool) {
        out.clear();
        let w = &self.params[slot.weights..slot.weights + slot.inputs * slot.outputs];
        let b = &self.params[slot.bias..slot.bias + slot.outputs];
        for (row, &bias) in w.chunks_exact(slot.inputs).zip(b) {
            let z = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + bias;
            out.push(if relu && z < 0.0 { 0.0 } else { z });
        }
    }

    /// Activations of every layer, input first.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(input.len(), self.input_len(), "input width");
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (l, slot) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(slot.outputs);
            self.layer_forward(slot, &acts[l], &mut out, l != last);
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.activations(input).pop().unwrap()
    }

    /// Mean weighted squared error over `targets`.
    pub fn loss(&self, targets: &[Target<'_>]) -> f64 {
        let total: f64 = targets
            .iter()
            .map(|t| {
                let err = t.value - self.forward(t.input)[t.output];
                t.weight * err * err
            })
            .sum();
        total / targets.len() as f64
    }

    /// Loss and its gradient with respect to the flat parameter vector.
    pub fn loss_and_gradient(&self, targets: &[Target<'_>]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let scale = 1.0 / targets.len() as f64;
        let mut loss = 0.0;
        for t in targets {
            let acts = self.activations(t.input);
            let err = t.value - acts.last().unwrap()[t.output];
            loss += t.weight * err * err;

            // Only the targeted output coordinate carries error.
            let mut delta = vec![0.0; self.output_len()];
            delta[t.output] = -2.0 * t.weight * err * scale;

            for l in (0..self.layers.len()).rev() {
                let slot = self.layers[l];
                let input = &acts[l];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = slot.weights + o * slot.inputs;
                    for (g, &x) in grad[row..row + slot.inputs].iter_mut().zip(input) {
                        *g += d * x;
                    }
                    grad[slot.bias + o] += d;
                }
                if l == 0 {
                    break;
                }
                let mut prev = vec![0.0; slot.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &self.params[slot.weights + o * slot.inputs..slot.weights + (o + 1) * slot.inputs];
                    for (p, &w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                // Rectifier derivative: zero where the unit was inactive.
                for (p, &a) in prev.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        (loss * scale, grad)
    }

    /// One plain gradient-descent step. Returns the loss before the step.
    pub fn sgd_step(&mut self, targets: &[Target<'_>], learning_rate: f64, scope: TrainScope) -> f64 {
        let (loss, grad) = self.loss_and_gradient(targets);
        if !loss.is_finite() {
            return loss;
        }
        let range = match scope {
            TrainScope::All => 0..self.params.len(),
            TrainScope::OutputOnly => self.output_layer_range(),
        };
        for (p, g) in self.params[range.clone()].iter_mut().zip(&grad[range]) {
            *p -= learning_rate * g;
        }
        loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_output_layer_predicts_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(&[3, 8, 8, 6], OutputInit::Zero, &mut rng);
        assert_eq!(net.forward(&[0.1, 0.7, 0.3]), vec![0.0; 6]);
        assert_eq!(net.params().len(), 3 * 8 + 8 + 8 * 8 + 8 + 8 * 6 + 6);
    }

    #[test]
    fn forward_matches_hand_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = Mlp::new(&[2, 2, 1], OutputInit::Zero, &mut rng);
        // hidden: w = [[1, -1], [0.5, 0.5]], b = [0, -1]; output: w = [2, 3], b = 0.25
        net.params_mut().copy_from_slice(&[1.0, -1.0, 0.5, 0.5, 0.0, -1.0, 2.0, 3.0, 0.25]);
        // h = relu([0.3 - 0.1, 0.2 - 1]) = [0.2, 0]
        let y = net.forward(&[0.3, 0.1]);
        assert!((y[0] - (2.0 * 0.2 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn output_only_scope_leaves_hidden_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Mlp::new(&[2, 5, 5, 4], OutputInit::Random, &mut rng);
        let before = net.params().to_vec();
        let x = [0.2, 0.9];
        net.sgd_step(&[Target { input: &x, output: 1, value: 1.0, weight: 1.0 }], 0.01, TrainScope::OutputOnly);
        let out = net.output_layer_range();
        assert_eq!(&net.params()[..out.start], &before[..out.start]);
        assert_ne!(&net.params()[out.clone()], &before[out]);
    }
}
