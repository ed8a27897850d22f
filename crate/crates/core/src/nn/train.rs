use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::network::Objective;
use crate::par::{self, Execution};
use crate::{Error, Result};

/// Items per reduction chunk. Fixed so the gradient sum order does not
/// depend on the thread count.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    /// Samples (feedforward) or windows (recurrent) per minibatch.
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub rng_seed: u64,
    /// Global-norm clipping threshold, applied to recurrent training only.
    pub gradient_clip_norm: f64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            steps: 10_000,
            batch_size: 32,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            rng_seed: 0,
            gradient_clip_norm: 5.0,
            exec: Execution::Parallel,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("epsilon", self.epsilon),
            ("gradient_clip_norm", self.gradient_clip_norm),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1), got {v}"
                )));
            }
        }
        if self.steps == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "steps and batch_size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Loss history in standardized target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean squared error over the whole training set before the first update.
    pub initial_loss: f64,
    /// Same, after the last update.
    pub final_loss: f64,
    /// Minibatch loss at every step.
    pub loss_curve: Vec<f64>,
}

/// Mean loss of `net` over `items`.
pub(crate) fn mean_loss<N, I>(net: &N, items: &[I], exec: Execution) -> f64
where
    N: Objective<I>,
    I: Sync,
{
    let (sse, n) = par::chunked_reduce(
        exec,
        items,
        GRAD_CHUNK,
        |chunk| {
            chunk.iter().fold((0.0, 0usize), |(s, n), it| {
                let (ls, ln) = net.loss(it);
                (s + ls, n + ln)
            })
        },
        |a, b| {
            a.0 += b.0;
            a.1 += b.1
        },
    )
    .unwrap_or((0.0, 0));
    sse / n.max(1) as f64
}

/// Mean loss and its gradient over a batch.
pub(crate) fn batch_gradient<N, I>(net: &N, batch: &[&I], exec: Execution) -> (f64, Vec<f64>)
where
    N: Objective<I>,
    I: Sync,
{
    let (sse, n, grad) = par::chunked_reduce(
        exec,
        batch,
        GRAD_CHUNK,
        |chunk| {
            let mut g = net.zeros_like();
            let mut s = 0.0;
            let mut n = 0;
            for it in chunk {
                let (ls, ln) = net.loss_grad(it, &mut g);
                s += ls;
                n += ln;
            }
            (s, n, g)
        },
        |a, b| {
            a.0 += b.0;
            a.1 += b.1;
            a.2.add_scaled(1.0, &b.2);
        },
    )
    .expect("non-empty batch");
    let m = n.max(1) as f64;
    let grad = grad.flatten().into_iter().map(|g| g / m).collect();
    (sse / m, grad)
}

/// Runs `cfg.steps` Adam updates on minibatches drawn without replacement
/// from a per-epoch shuffle of `items`.
pub(crate) fn minimize<N, I>(
    net: &mut N,
    items: &[I],
    cfg: &TrainConfig,
    clip_norm: Option<f64>,
) -> Result<TrainReport>
where
    N: Objective<I>,
    I: Sync,
{
    cfg.validate()?;
    if items.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(1);
    let batch_size = cfg.batch_size.min(items.len());
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut cursor = items.len();

    let initial_loss = mean_loss(net, items, cfg.exec);
    let mut params = net.flatten();
    let mut adam = Adam::new(
        params.len(),
        cfg.learning_rate,
        cfg.beta1,
        cfg.beta2,
        cfg.epsilon,
    );
    let mut loss_curve = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        if cursor + batch_size > items.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let batch: Vec<&I> = order[cursor..cursor + batch_size]
            .iter()
            .map(|&i| &items[i])
            .collect();
        cursor += batch_size;

        let (loss, mut grad) = batch_gradient(net, &batch, cfg.exec);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { step });
        }
        if let Some(max_norm) = clip_norm {
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > max_norm {
                let s = max_norm / norm;
                grad.iter_mut().for_each(|g| *g *= s);
            }
        }
        adam.step(&mut params, &grad);
        net.assign(&params);
        loss_curve.push(loss);
    }

    let final_loss = mean_loss(net, items, cfg.exec);
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss { step: cfg.steps });
    }
    Ok(TrainReport {
        initial_loss,
        final_loss,
        loss_curve,
    })
}
