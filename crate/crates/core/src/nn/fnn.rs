use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::frame::InputFrame;
use super::network::{relu, relu_grad, Dense, Network, Objective};
use super::train::{minimize, TrainConfig, TrainReport};
use crate::features::{Standardize, SupervisedSet};
use crate::{Error, Result};

/// Feedforward network: ReLU hidden layers and a linear scalar output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnNet {
    pub hidden: Vec<Dense>,
    pub output: Dense,
}

/// One standardized training example.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub x: &'a [f64],
    pub y: f64,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct FnnCache {
    /// Pre-activations per hidden layer.
    pub pre: Vec<Vec<f64>>,
    /// Post-ReLU activations per hidden layer.
    pub act: Vec<Vec<f64>>,
    pub output: f64,
}

impl FnnNet {
    pub fn new(input_dim: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(hidden.len());
        let mut inp = input_dim;
        for &h in hidden {
            layers.push(Dense::glorot(h, inp, &mut rng));
            inp = h;
        }
        FnnNet {
            hidden: layers,
            output: Dense::glorot(1, inp, &mut rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.first().unwrap_or(&self.output).in_dim()
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.hidden.iter().map(Dense::out_dim).collect()
    }

    pub fn forward_cache(&self, x: &[f64]) -> FnnCache {
        let mut pre = Vec::with_capacity(self.hidden.len());
        let mut act: Vec<Vec<f64>> = Vec::with_capacity(self.hidden.len());
        for layer in &self.hidden {
            let z = layer.forward(act.last().map_or(x, Vec::as_slice));
            act.push(z.iter().map(|v| relu(*v)).collect());
            pre.push(z);
        }
        let output = self.output.forward(act.last().map_or(x, Vec::as_slice))[0];
        FnnCache { pre, act, output }
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        self.forward_cache(x).output
    }

    pub(crate) fn check_dims(&self) -> Result<()> {
        let mut inp = self.input_dim();
        for (l, layer) in self.hidden.iter().enumerate() {
            if !layer.is_consistent() || layer.in_dim() != inp {
                return Err(Error::DimensionInconsistency(format!(
                    "hidden layer {l} expects input {} but receives {inp}",
                    layer.in_dim()
                )));
            }
            inp = layer.out_dim();
        }
        if !self.output.is_consistent() || self.output.in_dim() != inp || self.output.out_dim() != 1
        {
            return Err(Error::DimensionInconsistency(format!(
                "output layer must map {inp} units to 1, has shape {}x{}",
                self.output.out_dim(),
                self.output.in_dim()
            )));
        }
        Ok(())
    }
}

impl Network for FnnNet {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        for l in &self.hidden {
            l.visit(f);
        }
        self.output.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        for l in &mut self.hidden {
            l.visit_mut(f);
        }
        self.output.visit_mut(f);
    }
}

impl<'a> Objective<Sample<'a>> for FnnNet {
    fn loss(&self, s: &Sample<'a>) -> (f64, usize) {
        let e = self.forward(s.x) - s.y;
        (e * e, 1)
    }

    fn loss_grad(&self, s: &Sample<'a>, grad: &mut Self) -> (f64, usize) {
        let cache = self.forward_cache(s.x);
        let err = cache.output - s.y;
        let dy = [2.0 * err];
        let top = cache.act.last().map_or(s.x, Vec::as_slice);
        grad.output.weights.outer_add(&dy, top);
        grad.output.bias[0] += dy[0];
        let mut delta = vec![0.0; top.len()];
        self.output.weights.matvec_t_add(&dy, &mut delta);
        for l in (0..self.hidden.len()).rev() {
            for (d, z) in delta.iter_mut().zip(&cache.pre[l]) {
                *d *= relu_grad(*z);
            }
            let input = if l == 0 { s.x } else { &cache.act[l - 1] };
            grad.hidden[l].weights.outer_add(&delta, input);
            for (b, d) in grad.hidden[l].bias.iter_mut().zip(&delta) {
                *b += d;
            }
            if l > 0 {
                let mut below = vec![0.0; input.len()];
                self.hidden[l].weights.matvec_t_add(&delta, &mut below);
                delta = below;
            }
        }
        (err * err, 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnModel {
    pub net: FnnNet,
    pub frame: InputFrame,
}

impl FnnModel {
    /// Raw features in, MWh out.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let z = self.frame.standardize(x)?;
        Ok(self.frame.scaler.unscale_target(self.net.forward(&z)))
    }
}

pub fn fnn_forward(model: &FnnModel, input: &[f64]) -> Result<f64> {
    model.predict(input)
}

/// Fits the scaler on `set`, then trains a fresh network with Adam on the
/// minibatch mean squared error.
pub fn train_fnn(
    set: &SupervisedSet,
    hidden: &[usize],
    cfg: &TrainConfig,
) -> Result<(FnnModel, TrainReport)> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    if hidden.contains(&0) {
        return Err(Error::InvalidArgument(
            "hidden layer sizes must be positive".into(),
        ));
    }
    let scaler = set.fit_scaler()?;
    let z = set.standardized(&scaler);
    let samples: Vec<Sample> = (0..z.len())
        .map(|i| Sample {
            x: z.inputs.row(i),
            y: z.targets[i],
        })
        .collect();
    let mut net = FnnNet::new(set.feature_count(), hidden, cfg.rng_seed);
    let report = minimize(&mut net, &samples, cfg, None)?;
    Ok((
        FnnModel {
            net,
            frame: InputFrame::new(set.state, scaler),
        },
        report,
    ))
}
