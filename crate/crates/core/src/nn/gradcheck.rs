use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fnn::{FnnNet, Sample};
use super::lstm::LstmNet;
use super::network::Objective;
use super::recurrent::RecurrentNet;
use super::rnn::RnnNet;
use super::train::{batch_gradient, mean_loss};
use super::ModelKind;
use crate::features::Window;
use crate::par::Execution;
use crate::{Error, Result};

const FD_STEP: f64 = 1e-5;
/// Differences below this are treated as agreement regardless of magnitude.
const ABS_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Flat index of the parameter with the largest error.
    pub worst_param: usize,
    /// Largest raw |analytic - numeric| before the floor is applied.
    pub max_abs_diff: f64,
    pub params_checked: usize,
}

/// Compares the analytic gradient of the mean squared error over `items`
/// with central finite differences, parameter by parameter.
pub fn check_gradients<N, I>(net: &N, items: &[I]) -> GradCheck
where
    N: Objective<I>,
    I: Sync,
{
    let batch: Vec<&I> = items.iter().collect();
    let (_, analytic) = batch_gradient(net, &batch, Execution::Sequential);
    let base = net.flatten();
    let mut probe = net.clone();
    let mut params = base.clone();
    let mut worst = (0.0, 0);
    let mut max_abs_diff: f64 = 0.0;
    for k in 0..base.len() {
        params[k] = base[k] + FD_STEP;
        probe.assign(&params);
        let up = mean_loss(&probe, items, Execution::Sequential);
        params[k] = base[k] - FD_STEP;
        probe.assign(&params);
        let down = mean_loss(&probe, items, Execution::Sequential);
        params[k] = base[k];
        let numeric = (up - down) / (2.0 * FD_STEP);
        let diff = (analytic[k] - numeric).abs();
        max_abs_diff = max_abs_diff.max(diff);
        let err = if diff <= ABS_FLOOR {
            0.0
        } else {
            diff / analytic[k].abs().max(numeric.abs())
        };
        if err > worst.0 {
            worst = (err, k);
        }
    }
    GradCheck {
        max_rel_error: worst.0,
        worst_param: worst.1,
        max_abs_diff,
        params_checked: base.len(),
    }
}

/// Input width used by [`gradient_check`].
const CHECK_INPUTS: usize = 4;

/// Gradient check on a randomly drawn toy network of the given kind.
///
/// `hidden` lists hidden layer widths; recurrent kinds use `hidden[0]` units
/// in `hidden.len()` layers. Feedforward checks use a batch of 16 samples,
/// recurrent checks 3 windows of 10 steps.
pub fn gradient_check(kind: ModelKind, hidden: &[usize], seed: u64) -> Result<GradCheck> {
    if hidden.is_empty() || hidden.iter().any(|h| *h == 0 || *h > 8) {
        return Err(Error::InvalidArgument(
            "gradient checks use 1 to 8 units per layer".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = move || rng.random_range(-1.0..1.0);
    match kind {
        ModelKind::Fnn => {
            let mut net = FnnNet::new(CHECK_INPUTS, hidden, seed);
            perturb(&mut net, &mut unit);
            let xs: Vec<Vec<f64>> = (0..16)
                .map(|_| (0..CHECK_INPUTS).map(|_| unit()).collect())
                .collect();
            let samples: Vec<Sample> = xs.iter().map(|x| Sample { x, y: unit() }).collect();
            Ok(check_gradients(&net, &samples))
        }
        ModelKind::Rnn => Ok(check_recurrent::<RnnNet>(hidden, seed, &mut unit)),
        ModelKind::Lstm => Ok(check_recurrent::<LstmNet>(hidden, seed, &mut unit)),
        ModelKind::Linear => Err(Error::InvalidArgument(
            "linear models are solved in closed form and have no gradient path".into(),
        )),
    }
}

fn check_recurrent<N: RecurrentNet>(
    hidden: &[usize],
    seed: u64,
    unit: &mut impl FnMut() -> f64,
) -> GradCheck {
    let mut net = N::new_random(CHECK_INPUTS, hidden[0], hidden.len(), seed);
    perturb(&mut net, unit);
    let windows: Vec<Window> = (0..3)
        .map(|w| Window {
            start: w * 10,
            inputs: (0..10)
                .map(|_| (0..CHECK_INPUTS).map(|_| unit()).collect())
                .collect(),
            targets: (0..10).map(|_| unit()).collect(),
        })
        .collect();
    check_gradients(&net, &windows)
}

/// Adds uniform noise to every parameter so biases are non-zero too.
fn perturb<N: super::network::Network>(net: &mut N, unit: &mut impl FnMut() -> f64) {
    net.visit_mut(&mut |s| s.iter_mut().for_each(|v| *v += 0.5 * unit()));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_networks_pass() {
        for kind in [ModelKind::Fnn, ModelKind::Rnn, ModelKind::Lstm] {
            let r = gradient_check(kind, &[5, 3], 11).unwrap();
            assert!(r.max_rel_error < 1e-4, "{kind:?}: {r:?}");
        }
    }

    #[test]
    fn detects_a_wrong_gradient() {
        #[derive(Clone)]
        struct Broken(Vec<f64>);
        impl super::super::network::Network for Broken {
            fn visit(&self, f: &mut dyn FnMut(&[f64])) {
                f(&self.0)
            }
            fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
                f(&mut self.0)
            }
        }
        impl Objective<f64> for Broken {
            fn loss(&self, x: &f64) -> (f64, usize) {
                ((self.0[0] * x - 1.0).powi(2), 1)
            }
            fn loss_grad(&self, x: &f64, g: &mut Self) -> (f64, usize) {
                // missing the factor 2
                g.0[0] += (self.0[0] * x - 1.0) * x;
                self.loss(x)
            }
        }
        let r = check_gradients(&Broken(vec![3.0]), &[0.5, 2.0]);
        assert!(r.max_rel_error > 0.4);
    }

    #[test]
    fn rejects_oversized_networks() {
        assert!(gradient_check(ModelKind::Fnn, &[32], 0).is_err());
        assert!(gradient_check(ModelKind::Linear, &[4], 0).is_err());
    }
}
