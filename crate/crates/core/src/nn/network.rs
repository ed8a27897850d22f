use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// A parameterized model whose parameters can be walked as flat slices.
///
/// Gradients use the same type as the network: a zeroed clone accumulates
/// them, so flattening a gradient lines up with flattening the parameters.
pub trait Network: Clone + Send + Sync {
    fn visit(&self, f: &mut dyn FnMut(&[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64]));

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |s| n += s.len());
        n
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.visit(&mut |s| out.extend_from_slice(s));
        out
    }

    fn assign(&mut self, flat: &[f64]) {
        let mut k = 0;
        self.visit_mut(&mut |s| {
            s.copy_from_slice(&flat[k..k + s.len()]);
            k += s.len();
        });
        assert_eq!(k, flat.len(), "parameter vector length");
    }

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.visit_mut(&mut |s| s.fill(0.0));
        z
    }

    /// `self += a * other`
    fn add_scaled(&mut self, a: f64, other: &Self) {
        let o = other.flatten();
        let mut k = 0;
        self.visit_mut(&mut |s| {
            for v in s.iter_mut() {
                *v += a * o[k];
                k += 1;
            }
        });
    }
}

/// Squared-error objective over items of type `I` (a sample or a window).
pub trait Objective<I: ?Sized>: Network {
    /// Sum of squared errors over the item and the number of scored outputs.
    fn loss(&self, item: &I) -> (f64, usize);

    /// Like [`Objective::loss`], also adding d(sum of squared errors)/d(params) into `grad`.
    fn loss_grad(&self, item: &I, grad: &mut Self) -> (f64, usize);
}

/// Affine layer `y = W x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(out: usize, inp: usize) -> Self {
        Dense {
            weights: Matrix::zeros(out, inp),
            bias: vec![0.0; out],
        }
    }

    pub fn glorot<R: Rng>(out: usize, inp: usize, rng: &mut R) -> Self {
        Dense {
            weights: glorot(out, inp, rng),
            bias: vec![0.0; out],
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols
    }

    #[inline]
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.bias.clone();
        self.weights.matvec_add(x, &mut y);
        y
    }

    pub(crate) fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        f(&self.weights.data);
        f(&self.bias);
    }

    pub(crate) fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        f(&mut self.weights.data);
        f(&mut self.bias);
    }

    pub(crate) fn is_consistent(&self) -> bool {
        self.weights.data.len() == self.weights.rows * self.weights.cols
            && self.bias.len() == self.weights.rows
    }
}

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-limit..=limit))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Subgradient used in backprop; 0 at the kink, matching `relu(0) = 0`.
#[inline]
pub fn relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}
