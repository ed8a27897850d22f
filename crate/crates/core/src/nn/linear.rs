use serde::{Deserialize, Serialize};

use super::frame::InputFrame;
use crate::features::{Standardize, SupervisedSet};
use crate::matrix::{dot, Matrix};
use crate::{Error, Result};

/// `e = w . z + b` on standardized features `z`, un-standardized on output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub frame: InputFrame,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let z = self.frame.standardize(x)?;
        Ok(self
            .frame
            .scaler
            .unscale_target(dot(&self.weights, &z) + self.bias))
    }

    /// Weights and bias expressed on raw feature and target units.
    pub fn raw_coefficients(&self) -> (Vec<f64>, f64) {
        let s = &self.frame.scaler;
        let w: Vec<f64> = self
            .weights
            .iter()
            .zip(&s.stds)
            .map(|(w, sd)| w * s.target_std / sd)
            .collect();
        let shift: f64 = self
            .weights
            .iter()
            .zip(s.means.iter().zip(&s.stds))
            .map(|(w, (m, sd))| w * m / sd)
            .sum();
        (w, s.target_mean + s.target_std * (self.bias - shift))
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + 1
    }
}

/// Householder QR of a tall matrix, kept in compact form.
struct Qr {
    /// R on and above the diagonal, Householder vectors below.
    a: Matrix,
    /// Leading entries of the Householder vectors.
    v0: Vec<f64>,
    beta: Vec<f64>,
    col_norms: Vec<f64>,
}

impl Qr {
    fn new(mut a: Matrix) -> Qr {
        let (m, n) = (a.rows, a.cols);
        let col_norms = (0..n)
            .map(|j| (0..m).map(|i| a.get(i, j).powi(2)).sum::<f64>().sqrt())
            .collect();
        let mut v0 = vec![0.0; n];
        let mut beta = vec![0.0; n];
        for k in 0..n {
            let norm = (k..m).map(|i| a.get(i, k).powi(2)).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let x0 = a.get(k, k);
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            // v = x - alpha e1, beta = 2 / (v.v)
            let v_head = x0 - alpha;
            let vtv = v_head * v_head + (k + 1..m).map(|i| a.get(i, k).powi(2)).sum::<f64>();
            if vtv == 0.0 {
                continue;
            }
            let b = 2.0 / vtv;
            for j in k + 1..n {
                let s = v_head * a.get(k, j)
                    + (k + 1..m).map(|i| a.get(i, k) * a.get(i, j)).sum::<f64>();
                let f = b * s;
                a.set(k, j, a.get(k, j) - f * v_head);
                for i in k + 1..m {
                    a.set(i, j, a.get(i, j) - f * a.get(i, k));
                }
            }
            a.set(k, k, alpha);
            v0[k] = v_head;
            beta[k] = b;
        }
        Qr {
            a,
            v0,
            beta,
            col_norms,
        }
    }

    /// Columns whose diagonal of R is negligible relative to the column norm.
    fn dependent_columns(&self) -> Vec<usize> {
        let n = self.a.cols;
        let tol = 1e-10 * (self.a.rows.max(n) as f64).sqrt();
        (0..n)
            .filter(|&j| {
                self.col_norms[j] == 0.0 || self.a.get(j, j).abs() <= tol * self.col_norms[j]
            })
            .collect()
    }

    /// Least-squares solution of `A x ~ y`.
    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let (m, n) = (self.a.rows, self.a.cols);
        let mut qty = y.to_vec();
        for k in 0..n {
            if self.beta[k] == 0.0 {
                continue;
            }
            let s =
                self.v0[k] * qty[k] + (k + 1..m).map(|i| self.a.get(i, k) * qty[i]).sum::<f64>();
            let f = self.beta[k] * s;
            qty[k] -= f * self.v0[k];
            for (i, q) in qty.iter_mut().enumerate().skip(k + 1) {
                *q -= f * self.a.get(i, k);
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| self.a.get(k, j) * x[j]).sum();
            x[k] = (qty[k] - s) / self.a.get(k, k);
        }
        x
    }
}

/// Exact least squares of targets on `[1, standardized features]` via a
/// Householder QR factorization.
pub fn linear_fit(set: &SupervisedSet) -> Result<LinearModel> {
    let p = set.feature_count();
    if set.len() < p + 1 {
        return Err(Error::InvalidArgument(format!(
            "least squares with {p} features needs at least {} samples, got {}",
            p + 1,
            set.len()
        )));
    }
    let scaler = set.fit_scaler()?;
    let z = set.standardized(&scaler);
    let mut design = Matrix::zeros(z.len(), p + 1);
    for i in 0..z.len() {
        let row = design.row_mut(i);
        row[0] = 1.0;
        row[1..].copy_from_slice(z.inputs.row(i));
    }
    let qr = Qr::new(design);
    let dependent = qr.dependent_columns();
    if !dependent.is_empty() {
        let names = dependent
            .into_iter()
            .map(|j| {
                if j == 0 {
                    "bias".to_string()
                } else {
                    set.feature_layout[j - 1].clone()
                }
            })
            .collect();
        return Err(Error::RankDeficient { columns: names });
    }
    let beta = qr.solve(&z.targets);
    Ok(LinearModel {
        weights: beta[1..].to_vec(),
        bias: beta[0],
        frame: InputFrame::new(set.state, scaler),
    })
}
