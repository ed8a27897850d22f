//! Demand-response model families: closed-form linear, feedforward (ReLU),
//! vanilla RNN and LSTM, trained on standardized data with Adam.
//!
//! Every model carries an [`InputFrame`] (state layout plus scaler), takes raw
//! feature values and returns MWh.

mod adam;
mod fnn;
mod frame;
mod gradcheck;
mod io;
mod linear;
mod lstm;
mod network;
mod recurrent;
mod rnn;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use fnn::{fnn_forward, train_fnn, FnnCache, FnnModel, FnnNet, Sample};
pub use frame::InputFrame;
pub use gradcheck::{check_gradients, gradient_check, GradCheck};
pub use io::{load_model, model_from_json, model_to_json, save_model, SCHEMA_VERSION};
pub use linear::{linear_fit, LinearModel};
pub use lstm::{Gate, LstmCache, LstmLayer, LstmNet, LstmStep};
pub use network::{glorot, relu, relu_grad, sigmoid, Dense, Network, Objective};
pub use recurrent::{
    lstm_forward, rnn_forward, train_recurrent_net, LstmModel, RecurrentArch, RecurrentModel,
    RecurrentNet, RnnModel, DEFAULT_WARMUP,
};
pub use rnn::{RnnCache, RnnLayer, RnnNet};
pub use train::{TrainConfig, TrainReport};

use crate::features::{build_direct_dataset, SequenceSet, StateConfig};
use crate::sim::TimeSeriesDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Fnn,
    Rnn,
    Lstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Linear,
        ModelKind::Fnn,
        ModelKind::Rnn,
        ModelKind::Lstm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Fnn => "fnn",
            ModelKind::Rnn => "rnn",
            ModelKind::Lstm => "lstm",
        }
    }

    pub fn is_recurrent(self) -> bool {
        matches!(self, ModelKind::Rnn | ModelKind::Lstm)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown model kind '{s}' (expected linear, fnn, rnn or lstm)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearModel),
    Fnn(FnnModel),
    Rnn(RnnModel),
    Lstm(LstmModel),
}

/// One-step predictions over a series, aligned to local intervals
/// `first..first + predictions.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPrediction {
    pub first: usize,
    pub predictions: Vec<f64>,
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Linear(_) => ModelKind::Linear,
            Model::Fnn(_) => ModelKind::Fnn,
            Model::Rnn(_) => ModelKind::Rnn,
            Model::Lstm(_) => ModelKind::Lstm,
        }
    }

    pub fn frame(&self) -> &InputFrame {
        match self {
            Model::Linear(m) => &m.frame,
            Model::Fnn(m) => &m.frame,
            Model::Rnn(m) => &m.frame,
            Model::Lstm(m) => &m.frame,
        }
    }

    pub fn state(&self) -> &StateConfig {
        &self.frame().state
    }

    pub fn order(&self) -> usize {
        self.state().order
    }

    /// Short architecture label, e.g. `fnn[32,32]` or `lstm[1x32]`.
    pub fn architecture(&self) -> String {
        match self {
            Model::Linear(m) => format!("linear[{}]", m.weights.len()),
            Model::Fnn(m) => format!(
                "fnn[{}]",
                m.net
                    .hidden_sizes()
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            Model::Rnn(m) => format!("rnn[{}x{}]", m.net.layer_count(), m.net.hidden_size()),
            Model::Lstm(m) => format!("lstm[{}x{}]", m.net.layer_count(), m.net.hidden_size()),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Model::Linear(m) => m.param_count(),
            Model::Fnn(m) => m.net.param_count(),
            Model::Rnn(m) => m.net.param_count(),
            Model::Lstm(m) => m.net.param_count(),
        }
    }

    /// Intervals of history needed before a prediction can be made.
    pub fn min_history(&self) -> usize {
        match self {
            Model::Linear(_) | Model::Fnn(_) => self.order(),
            Model::Rnn(m) => m.warmup + 1,
            Model::Lstm(m) => m.warmup + 1,
        }
    }

    /// Recurrent steps discarded before scoring.
    pub fn warmup(&self) -> usize {
        match self {
            Model::Rnn(m) => m.warmup,
            Model::Lstm(m) => m.warmup,
            _ => 0,
        }
    }

    /// Prediction from a raw direct-approach feature vector.
    pub fn predict_features(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::Linear(m) => m.predict(x),
            Model::Fnn(m) => m.predict(x),
            _ => Err(Error::InvalidArgument(format!(
                "{} models predict from step sequences, not single feature vectors",
                self.kind()
            ))),
        }
    }

    /// Raw step inputs in, per-step MWh out (recurrent models only).
    pub fn predict_window(&self, window: &[Vec<f64>]) -> Result<Vec<f64>> {
        match self {
            Model::Rnn(m) => m.predict_window(window),
            Model::Lstm(m) => m.predict_window(window),
            _ => Err(Error::InvalidArgument(format!(
                "{} is not a recurrent model",
                self.kind()
            ))),
        }
    }

    /// One-step predictions using the true history throughout `ts`.
    ///
    /// Direct models score every interval from `order` on. Recurrent models
    /// run once from a zero state starting at interval 1 and drop the
    /// warm-up steps.
    pub fn predict_series(&self, ts: &TimeSeriesDataset) -> Result<SeriesPrediction> {
        match self {
            Model::Linear(_) | Model::Fnn(_) => {
                let set = build_direct_dataset(ts, self.state())?;
                let predictions = set
                    .inputs
                    .iter_rows()
                    .map(|x| self.predict_features(x))
                    .collect::<Result<Vec<_>>>()?;
                Ok(SeriesPrediction {
                    first: self.order(),
                    predictions,
                })
            }
            Model::Rnn(m) => Ok(SeriesPrediction {
                first: 1 + m.warmup,
                predictions: m.predict_series(ts)?,
            }),
            Model::Lstm(m) => Ok(SeriesPrediction {
                first: 1 + m.warmup,
                predictions: m.predict_series(ts)?,
            }),
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        match self {
            Model::Linear(m) => {
                m.frame.check()?;
                if m.weights.len() != m.frame.feature_count() {
                    return Err(Error::DimensionInconsistency(format!(
                        "{} linear weights for {} features",
                        m.weights.len(),
                        m.frame.feature_count()
                    )));
                }
                Ok(())
            }
            Model::Fnn(m) => {
                m.frame.check()?;
                m.net.check_dims()?;
                if m.net.input_dim() != m.frame.feature_count() {
                    return Err(Error::DimensionInconsistency(format!(
                        "network input size {} does not match {} features",
                        m.net.input_dim(),
                        m.frame.feature_count()
                    )));
                }
                Ok(())
            }
            Model::Rnn(m) => m.check(),
            Model::Lstm(m) => m.check(),
        }
    }
}

/// Trains a recurrent model of `kind` on `set`.
pub fn train_recurrent(
    set: &SequenceSet,
    kind: ModelKind,
    arch: RecurrentArch,
    cfg: &TrainConfig,
) -> Result<(Model, TrainReport)> {
    match kind {
        ModelKind::Rnn => {
            train_recurrent_net::<RnnNet>(set, arch, cfg).map(|(m, r)| (Model::Rnn(m), r))
        }
        ModelKind::Lstm => {
            train_recurrent_net::<LstmNet>(set, arch, cfg).map(|(m, r)| (Model::Lstm(m), r))
        }
        other => Err(Error::InvalidArgument(format!(
            "{other} is not a recurrent model kind"
        ))),
    }
}

/// Predicted consumption for interval `t`, given the true history up to
/// `t - 1` and the posted price.
///
/// Direct models read the last `order` intervals. Recurrent models restart
/// from a zero state `warmup` intervals before `t`, so anything older is
/// ignored.
pub fn predict_one_step(
    model: &Model,
    history: &TimeSeriesDataset,
    price: f64,
    t: usize,
) -> Result<f64> {
    let state = model.state();
    state.check_dataset(history)?;
    let need = model.min_history();
    if history.len() < need {
        return Err(Error::InvalidArgument(format!(
            "{} model needs {need} intervals of history, got {}",
            model.kind(),
            history.len()
        )));
    }
    let per_day = state.intervals_per_day;
    if let Some(last) = history.hours.last() {
        if (last + 1) % per_day != t % per_day {
            return Err(Error::InvalidArgument(format!(
                "history ends at hour {last} but interval {t} is hour {}",
                t % per_day
            )));
        }
    }
    let hour = t % per_day;
    let len = history.len();
    match model {
        Model::Linear(_) | Model::Fnn(_) => {
            let lagged = &history.prices[len - state.order..];
            let lagged_c = &history.consumptions[len - state.order..];
            let x = state.features_at(lagged, lagged_c, state.order, hour, price);
            model.predict_features(&x)
        }
        Model::Rnn(_) | Model::Lstm(_) => {
            let warmup = model.warmup();
            let mut steps: Vec<Vec<f64>> = (len - warmup..len)
                .map(|j| {
                    state.features_at(
                        &history.prices,
                        &history.consumptions,
                        j,
                        history.hours[j],
                        history.prices[j],
                    )
                })
                .collect();
            steps.push(state.features_at(&history.prices, &history.consumptions, len, hour, price));
            Ok(*model
                .predict_window(&steps)?
                .last()
                .expect("non-empty window"))
        }
    }
}

/// Multi-step forecast: each predicted consumption is fed back as the lagged
/// consumption for the next interval.
pub fn rollout(
    model: &Model,
    history: &TimeSeriesDataset,
    future_prices: &[f64],
) -> Result<Vec<f64>> {
    rollout_inner(model, history, future_prices, None)
}

/// Like [`rollout`] but feeds back the true consumption after each step,
/// which reduces to a sequence of one-step predictions.
pub fn rollout_teacher_forced(
    model: &Model,
    history: &TimeSeriesDataset,
    future: &TimeSeriesDataset,
) -> Result<Vec<f64>> {
    rollout_inner(model, history, &future.prices, Some(&future.consumptions))
}

fn rollout_inner(
    model: &Model,
    history: &TimeSeriesDataset,
    prices: &[f64],
    truth: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let keep = model.min_history().max(1).min(history.len());
    let mut hist = history.slice(history.len() - keep..history.len());
    let mut out = Vec::with_capacity(prices.len());
    for (k, &p) in prices.iter().enumerate() {
        let t = hist.start + hist.len();
        let y = predict_one_step(model, &hist, p, t)?;
        out.push(y);
        hist.push(p, truth.map_or(y, |c| c[k]));
    }
    Ok(out)
}
