use serde::{Deserialize, Serialize};

use super::frame::InputFrame;
use super::lstm::LstmNet;
use super::network::Objective;
use super::rnn::RnnNet;
use super::train::{minimize, TrainConfig, TrainReport};
use crate::features::{sequence_steps, SequenceSet, Standardize, Window};
use crate::sim::TimeSeriesDataset;
use crate::{Error, Result};

/// Steps run before the first scored prediction in recurrent evaluation, and
/// the context length used for single predictions.
pub const DEFAULT_WARMUP: usize = 24;

/// Common surface of the RNN and LSTM networks.
pub trait RecurrentNet:
    Objective<Window> + Serialize + for<'de> Deserialize<'de> + PartialEq + std::fmt::Debug
{
    fn new_random(input_dim: usize, hidden: usize, layers: usize, seed: u64) -> Self;
    /// Standardized outputs for each step, starting from zero states.
    fn forward(&self, inputs: &[Vec<f64>]) -> Vec<f64>;
    fn input_dim(&self) -> usize;
    fn hidden_size(&self) -> usize;
    fn layer_count(&self) -> usize;
    fn check_dims(&self) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrentArch {
    pub hidden: usize,
    pub layers: usize,
}

impl Default for RecurrentArch {
    fn default() -> Self {
        RecurrentArch {
            hidden: 32,
            layers: 1,
        }
    }
}

/// A trained recurrent network with its input frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrentModel<N> {
    pub net: N,
    pub frame: InputFrame,
    pub window_length: usize,
    pub warmup: usize,
}

pub type RnnModel = RecurrentModel<RnnNet>;
pub type LstmModel = RecurrentModel<LstmNet>;

impl<N: RecurrentNet> RecurrentModel<N> {
    /// Raw step inputs in, MWh predictions out.
    pub fn predict_window(&self, window: &[Vec<f64>]) -> Result<Vec<f64>> {
        if window.is_empty() {
            return Err(Error::InvalidArgument("recurrent window is empty".into()));
        }
        let z = window
            .iter()
            .map(|x| self.frame.standardize(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(self
            .net
            .forward(&z)
            .into_iter()
            .map(|y| self.frame.scaler.unscale_target(y))
            .collect())
    }

    /// Runs the whole series from a zero state. Returns predictions for local
    /// intervals `1 + warmup..len`.
    pub fn predict_series(&self, ts: &TimeSeriesDataset) -> Result<Vec<f64>> {
        self.frame.state.check_dataset(ts)?;
        if ts.len() < self.warmup + 2 {
            return Err(Error::InvalidArgument(format!(
                "series of {} intervals is shorter than the {}-step warm-up plus one scored step",
                ts.len(),
                self.warmup
            )));
        }
        let (inputs, _) = sequence_steps(ts, &self.frame.state, 1..ts.len());
        let mut out = self.predict_window(&inputs)?;
        Ok(out.split_off(self.warmup))
    }

    pub(crate) fn check(&self) -> Result<()> {
        self.frame.check()?;
        self.net.check_dims()?;
        if self.frame.state.order != 1 {
            return Err(Error::LayoutMismatch(format!(
                "recurrent models take order-1 inputs, frame has order {}",
                self.frame.state.order
            )));
        }
        if self.net.input_dim() != self.frame.feature_count() {
            return Err(Error::DimensionInconsistency(format!(
                "network input size {} does not match {} features",
                self.net.input_dim(),
                self.frame.feature_count()
            )));
        }
        Ok(())
    }
}

pub fn rnn_forward(model: &RnnModel, window: &[Vec<f64>]) -> Result<Vec<f64>> {
    model.predict_window(window)
}

pub fn lstm_forward(model: &LstmModel, window: &[Vec<f64>]) -> Result<Vec<f64>> {
    model.predict_window(window)
}

/// Trains a recurrent network with full BPTT inside each window, Adam over
/// minibatches of windows, and global-norm gradient clipping.
pub fn train_recurrent_net<N: RecurrentNet>(
    set: &SequenceSet,
    arch: RecurrentArch,
    cfg: &TrainConfig,
) -> Result<(RecurrentModel<N>, TrainReport)> {
    if set.windows.is_empty() {
        return Err(Error::InvalidArgument("sequence set has no windows".into()));
    }
    if arch.hidden == 0 || arch.layers == 0 {
        return Err(Error::InvalidArgument(
            "recurrent architecture needs at least one unit and layer".into(),
        ));
    }
    let scaler = set.fit_scaler()?;
    let z = set.standardized(&scaler);
    let mut net = N::new_random(
        set.feature_layout.len(),
        arch.hidden,
        arch.layers,
        cfg.rng_seed,
    );
    let report = minimize(&mut net, &z.windows, cfg, Some(cfg.gradient_clip_norm))?;
    Ok((
        RecurrentModel {
            net,
            frame: InputFrame::new(set.state, scaler),
            window_length: set.window_length,
            warmup: DEFAULT_WARMUP,
        },
        report,
    ))
}
