use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{glorot, sigmoid, Dense, Network, Objective};
use super::recurrent::RecurrentNet;
use crate::features::Window;
use crate::matrix::Matrix;
use crate::{Error, Result};

/// Parameters of one gate: `act(W_h h_{t-1} + W_x x_t + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub w_h: Matrix,
    pub w_x: Matrix,
    pub b: Vec<f64>,
}

impl Gate {
    fn new<R: rand::Rng>(hidden: usize, input: usize, bias: f64, rng: &mut R) -> Self {
        Gate {
            w_h: glorot(hidden, hidden, rng),
            w_x: glorot(hidden, input, rng),
            b: vec![bias; hidden],
        }
    }

    #[inline]
    fn pre(&self, h_prev: Option<&[f64]>, x: &[f64]) -> Vec<f64> {
        let mut a = self.b.clone();
        self.w_x.matvec_add(x, &mut a);
        if let Some(h) = h_prev {
            self.w_h.matvec_add(h, &mut a);
        }
        a
    }

    /// Accumulates the gate's parameter gradient for pre-activation gradient
    /// `da`, and propagates it to `dh_prev` and `dx`.
    #[inline]
    fn backward(
        &self,
        grad: &mut Gate,
        da: &[f64],
        h_prev: Option<&[f64]>,
        x: &[f64],
        dh_prev: &mut [f64],
        dx: Option<&mut [f64]>,
    ) {
        grad.w_x.outer_add(da, x);
        for (b, d) in grad.b.iter_mut().zip(da) {
            *b += d;
        }
        if let Some(h) = h_prev {
            grad.w_h.outer_add(da, h);
            self.w_h.matvec_t_add(da, dh_prev);
        }
        if let Some(dx) = dx {
            self.w_x.matvec_t_add(da, dx);
        }
    }

    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        f(&self.w_h.data);
        f(&self.w_x.data);
        f(&self.b);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        f(&mut self.w_h.data);
        f(&mut self.w_x.data);
        f(&mut self.b);
    }

    fn is_consistent(&self, hidden: usize, input: usize) -> bool {
        self.b.len() == hidden
            && (self.w_h.rows, self.w_h.cols) == (hidden, hidden)
            && (self.w_x.rows, self.w_x.cols) == (hidden, input)
            && self.w_h.data.len() == hidden * hidden
            && self.w_x.data.len() == hidden * input
    }
}

/// LSTM layer: forget, input and output gates plus the candidate cell update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub forget: Gate,
    pub input: Gate,
    pub output: Gate,
    pub candidate: Gate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmNet {
    pub layers: Vec<LstmLayer>,
    pub output: Dense,
}

/// Per-step activations of one layer.
#[derive(Debug, Clone, Default)]
pub struct LstmStep {
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub o: Vec<f64>,
    pub g: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// Activations per layer per step (`[layer][t]`).
#[derive(Debug, Clone)]
pub struct LstmCache {
    pub steps: Vec<Vec<LstmStep>>,
    pub outputs: Vec<f64>,
}

impl LstmNet {
    /// Glorot weights, zero biases except the forget gate at +1.
    pub fn new(input_dim: usize, hidden: usize, layers: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = (0..layers)
            .map(|l| {
                let inp = if l == 0 { input_dim } else { hidden };
                LstmLayer {
                    forget: Gate::new(hidden, inp, 1.0, &mut rng),
                    input: Gate::new(hidden, inp, 0.0, &mut rng),
                    output: Gate::new(hidden, inp, 0.0, &mut rng),
                    candidate: Gate::new(hidden, inp, 0.0, &mut rng),
                }
            })
            .collect();
        LstmNet {
            layers,
            output: Dense::glorot(1, hidden, &mut rng),
        }
    }

    pub fn forward_cache(&self, inputs: &[Vec<f64>]) -> LstmCache {
        let mut steps: Vec<Vec<LstmStep>> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut seq: Vec<LstmStep> = Vec::with_capacity(inputs.len());
            for t in 0..inputs.len() {
                let x = if l == 0 {
                    &inputs[t]
                } else {
                    &steps[l - 1][t].h
                };
                let prev = if t > 0 { Some(&seq[t - 1]) } else { None };
                let h_prev = prev.map(|p| p.h.as_slice());
                let f: Vec<f64> = layer
                    .forget
                    .pre(h_prev, x)
                    .into_iter()
                    .map(sigmoid)
                    .collect();
                let i: Vec<f64> = layer
                    .input
                    .pre(h_prev, x)
                    .into_iter()
                    .map(sigmoid)
                    .collect();
                let o: Vec<f64> = layer
                    .output
                    .pre(h_prev, x)
                    .into_iter()
                    .map(sigmoid)
                    .collect();
                let g: Vec<f64> = layer
                    .candidate
                    .pre(h_prev, x)
                    .into_iter()
                    .map(f64::tanh)
                    .collect();
                let c: Vec<f64> = (0..g.len())
                    .map(|k| f[k] * prev.map_or(0.0, |p| p.c[k]) + i[k] * g[k])
                    .collect();
                let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
                let h = o.iter().zip(&tanh_c).map(|(a, b)| a * b).collect();
                seq.push(LstmStep {
                    f,
                    i,
                    o,
                    g,
                    c,
                    tanh_c,
                    h,
                });
            }
            steps.push(seq);
        }
        let outputs = steps
            .last()
            .expect("at least one layer")
            .iter()
            .map(|s| self.output.forward(&s.h)[0])
            .collect();
        LstmCache { steps, outputs }
    }
}

impl RecurrentNet for LstmNet {
    fn new_random(input_dim: usize, hidden: usize, layers: usize, seed: u64) -> Self {
        LstmNet::new(input_dim, hidden, layers, seed)
    }

    fn forward(&self, inputs: &[Vec<f64>]) -> Vec<f64> {
        self.forward_cache(inputs).outputs
    }

    fn input_dim(&self) -> usize {
        self.layers[0].forget.w_x.cols
    }

    fn hidden_size(&self) -> usize {
        self.layers[0].forget.b.len()
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
            let gates = [&layer.forget, &layer.input, &layer.output, &layer.candidate];
            if !gates.iter().all(|g| g.is_consistent(h, inp)) {
                return Err(Error::DimensionInconsistency(format!(
                    "lstm layer {l} gates are not consistent with hidden size {h} and input size {inp}"
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

impl Network for LstmNet {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        for l in &self.layers {
            l.forget.visit(f);
            l.input.visit(f);
            l.output.visit(f);
            l.candidate.visit(f);
        }
        self.output.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        for l in &mut self.layers {
            l.forget.visit_mut(f);
            l.input.visit_mut(f);
            l.output.visit_mut(f);
            l.candidate.visit_mut(f);
        }
        self.output.visit_mut(f);
    }
}

impl Objective<Window> for LstmNet {
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
        let hsize = self.hidden_size();
        let cache = self.forward_cache(&w.inputs);
        let top = cache.steps.len() - 1;
        let mut sse = 0.0;
        let mut from_above: Vec<Vec<f64>> = Vec::with_capacity(steps);
        for t in 0..steps {
            let err = cache.outputs[t] - w.targets[t];
            sse += err * err;
            let dy = [2.0 * err];
            grad.output.weights.outer_add(&dy, &cache.steps[top][t].h);
            grad.output.bias[0] += dy[0];
            let mut dh = vec![0.0; hsize];
            self.output.weights.matvec_t_add(&dy, &mut dh);
            from_above.push(dh);
        }
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = &mut grad.layers[l];
            let seq = &cache.steps[l];
            let in_dim = layer.forget.w_x.cols;
            let mut below = vec![vec![0.0; in_dim]; if l > 0 { steps } else { 0 }];
            let mut dh_next = vec![0.0; hsize];
            let mut dc_next = vec![0.0; hsize];
            for t in (0..steps).rev() {
                let s = &seq[t];
                let prev = if t > 0 { Some(&seq[t - 1]) } else { None };
                let mut d_f = vec![0.0; hsize];
                let mut d_i = vec![0.0; hsize];
                let mut d_o = vec![0.0; hsize];
                let mut d_g = vec![0.0; hsize];
                let mut dc_prev = vec![0.0; hsize];
                for k in 0..hsize {
                    let dh = from_above[t][k] + dh_next[k];
                    let dc = dh * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]) + dc_next[k];
                    let c_prev = prev.map_or(0.0, |p| p.c[k]);
                    d_o[k] = dh * s.tanh_c[k] * s.o[k] * (1.0 - s.o[k]);
                    d_f[k] = dc * c_prev * s.f[k] * (1.0 - s.f[k]);
                    d_i[k] = dc * s.g[k] * s.i[k] * (1.0 - s.i[k]);
                    d_g[k] = dc * s.i[k] * (1.0 - s.g[k] * s.g[k]);
                    dc_prev[k] = dc * s.f[k];
                }
                let x = if l == 0 {
                    &w.inputs[t]
                } else {
                    &cache.steps[l - 1][t].h
                };
                let h_prev = prev.map(|p| p.h.as_slice());
                dh_next.fill(0.0);
                let mut dx: Option<&mut [f64]> = if l > 0 {
                    Some(below[t].as_mut_slice())
                } else {
                    None
                };
                layer.forget.backward(
                    &mut g.forget,
                    &d_f,
                    h_prev,
                    x,
                    &mut dh_next,
                    dx.as_deref_mut(),
                );
                layer.input.backward(
                    &mut g.input,
                    &d_i,
                    h_prev,
                    x,
                    &mut dh_next,
                    dx.as_deref_mut(),
                );
                layer.output.backward(
                    &mut g.output,
                    &d_o,
                    h_prev,
                    x,
                    &mut dh_next,
                    dx.as_deref_mut(),
                );
                layer
                    .candidate
                    .backward(&mut g.candidate, &d_g, h_prev, x, &mut dh_next, dx);
                dc_next = dc_prev;
            }
            from_above = below;
        }
        (sse, steps)
    }
}
