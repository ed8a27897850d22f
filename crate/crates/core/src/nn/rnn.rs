use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{glorot, Dense, Network, Objective};
use super::recurrent::RecurrentNet;
use crate::features::Window;
use crate::matrix::Matrix;
use crate::{Error, Result};

/// `h_t = tanh(W_h h_{t-1} + W_x x_t + b)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnLayer {
    pub w_h: Matrix,
    pub w_x: Matrix,
    pub b: Vec<f64>,
}

/// Stacked vanilla RNN with a linear read-out of the top hidden state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnNet {
    pub layers: Vec<RnnLayer>,
    pub output: Dense,
}

/// Hidden states per layer per step (`[layer][t]`).
#[derive(Debug, Clone)]
pub struct RnnCache {
    pub hidden: Vec<Vec<Vec<f64>>>,
    pub outputs: Vec<f64>,
}

impl RnnNet {
    pub fn new(input_dim: usize, hidden: usize, layers: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = (0..layers)
            .map(|l| {
                let inp = if l == 0 { input_dim } else { hidden };
                RnnLayer {
                    w_h: glorot(hidden, hidden, &mut rng),
                    w_x: glorot(hidden, inp, &mut rng),
                    b: vec![0.0; hidden],
                }
            })
            .collect();
        RnnNet {
            layers,
            output: Dense::glorot(1, hidden, &mut rng),
        }
    }

    pub fn forward_cache(&self, inputs: &[Vec<f64>]) -> RnnCache {
        let mut hidden: Vec<Vec<Vec<f64>>> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let size = layer.b.len();
            let mut seq: Vec<Vec<f64>> = Vec::with_capacity(inputs.len());
            for t in 0..inputs.len() {
                let x = if l == 0 {
                    &inputs[t]
                } else {
                    &hidden[l - 1][t]
                };
                let mut a = layer.b.clone();
                layer.w_x.matvec_add(x, &mut a);
                if t > 0 {
                    layer.w_h.matvec_add(&seq[t - 1], &mut a);
                }
                debug_assert_eq!(a.len(), size);
                a.iter_mut().for_each(|v| *v = v.tanh());
                seq.push(a);
            }
            hidden.push(seq);
        }
        let top = hidden.last().expect("at least one layer");
        let outputs = top.iter().map(|h| self.output.forward(h)[0]).collect();
        RnnCache { hidden, outputs }
    }
}

impl RecurrentNet for RnnNet {
    fn new_random(input_dim: usize, hidden: usize, layers: usize, seed: u64) -> Self {
        RnnNet::new(input_dim, hidden, layers, seed)
    }

    fn forward(&self, inputs: &[Vec<f64>]) -> Vec<f64> {
        self.forward_cache(inputs).outputs
    }

    fn input_dim(&self) -> usize {
        self.layers[0].w_x.cols
    }

    fn hidden_size(&self) -> usize {
        self.layers[0].b.len()
    }

    fn layer_count(&self) -> usize {
        self.layers.len()
    }

    fn check_dims(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::DimensionInconsistency(
                "recurrent network has no layers".into(),
            ));
        }
        let h = self.hidden_size();
        for (l, layer) in self.layers.iter().enumerate() {
            let inp = if l == 0 { self.input_dim() } else { h };
            let ok = layer.b.len() == h
                && (layer.w_h.rows, layer.w_h.cols) == (h, h)
                && (layer.w_x.rows, layer.w_x.cols) == (h, inp)
                && layer.w_h.data.len() == h * h
                && layer.w_x.data.len() == h * inp;
            if !ok {
                return Err(Error::DimensionInconsistency(format!(
                    "rnn layer {l} is not consistent with hidden size {h} and input size {inp}"
                )));
            }
        }
        if !self.output.is_consistent() || self.output.in_dim() != h || self.output.out_dim() != 1 {
            return Err(Error::DimensionInconsistency(format!(
                "output layer must map {h} units to 1"
            )));
        }
        Ok(())
    }
}

impl Network for RnnNet {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        for l in &self.layers {
            f(&l.w_h.data);
            f(&l.w_x.data);
            f(&l.b);
        }
        self.output.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        for l in &mut self.layers {
            f(&mut l.w_h.data);
            f(&mut l.w_x.data);
            f(&mut l.b);
        }
        self.output.visit_mut(f);
    }
}

impl Objective<Window> for RnnNet {
    fn loss(&self, w: &Window) -> (f64, usize) {
        let sse = self
            .forward(&w.inputs)
            .iter()
            .zip(&w.targets)
            .map(|(y, t)| (y - t).powi(2))
            .sum();
        (sse, w.len())
    }

    /// Full backpropagation through time over the window.
    fn loss_grad(&self, w: &Window, grad: &mut Self) -> (f64, usize) {
        let steps = w.len();
        let cache = self.forward_cache(&w.inputs);
        let top = cache.hidden.len() - 1;
        let mut sse = 0.0;
        // gradient flowing into each step's hidden state from the layer above
        let mut from_above: Vec<Vec<f64>> = Vec::with_capacity(steps);
        for t in 0..steps {
            let err = cache.outputs[t] - w.targets[t];
            sse += err * err;
            let dy = [2.0 * err];
            grad.output.weights.outer_add(&dy, &cache.hidden[top][t]);
            grad.output.bias[0] += dy[0];
            let mut dh = vec![0.0; self.hidden_size()];
            self.output.weights.matvec_t_add(&dy, &mut dh);
            from_above.push(dh);
        }
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = &mut grad.layers[l];
            let hs = &cache.hidden[l];
            let in_dim = layer.w_x.cols;
            let mut below = vec![vec![0.0; in_dim]; if l > 0 { steps } else { 0 }];
            let mut dh_next = vec![0.0; layer.b.len()];
            for t in (0..steps).rev() {
                let da: Vec<f64> = from_above[t]
                    .iter()
                    .zip(&dh_next)
                    .zip(&hs[t])
                    .map(|((a, n), h)| (a + n) * (1.0 - h * h))
                    .collect();
                let x = if l == 0 {
                    &w.inputs[t]
                } else {
                    &cache.hidden[l - 1][t]
                };
                g.w_x.outer_add(&da, x);
                for (b, d) in g.b.iter_mut().zip(&da) {
                    *b += d;
                }
                dh_next.fill(0.0);
                if t > 0 {
                    g.w_h.outer_add(&da, &hs[t - 1]);
                    layer.w_h.matvec_t_add(&da, &mut dh_next);
                }
                if l > 0 {
                    layer.w_x.matvec_t_add(&da, &mut below[t]);
                }
            }
            from_above = below;
        }
        (sse, steps)
    }
}
