//! Supervised structures built from a [`TimeSeriesDataset`].
//!
//! The direct approach feeds a static learner the state vector
//! `(p[t-n], e[t-n], ..., p[t-1], e[t-1], time(t), p[t])`. The indirect approach
//! feeds a recurrent network the order-1 version of that vector one step at a
//! time, in contiguous windows.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::sim::TimeSeriesDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeEncoding {
    /// `(t mod T) / T`
    #[default]
    Scalar,
    /// `T` indicator columns.
    OneHot,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateConfig {
    pub order: usize,
    pub time_encoding: TimeEncoding,
    pub intervals_per_day: usize,
}

impl StateConfig {
    pub fn new(order: usize, time_encoding: TimeEncoding, intervals_per_day: usize) -> Self {
        StateConfig {
            order,
            time_encoding,
            intervals_per_day,
        }
    }

    pub fn time_dim(&self) -> usize {
        match self.time_encoding {
            TimeEncoding::Scalar => 1,
            TimeEncoding::OneHot => self.intervals_per_day,
            TimeEncoding::None => 0,
        }
    }

    /// `2n + time_dim + 1`
    pub fn feature_count(&self) -> usize {
        2 * self.order + self.time_dim() + 1
    }

    /// Column names in feature order.
    pub fn layout(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.feature_count());
        for i in (1..=self.order).rev() {
            names.push(format!("price[t-{i}]"));
            names.push(format!("consumption[t-{i}]"));
        }
        match self.time_encoding {
            TimeEncoding::Scalar => names.push("hour/T".into()),
            TimeEncoding::OneHot => {
                names.extend((0..self.intervals_per_day).map(|h| format!("hour=={h}")))
            }
            TimeEncoding::None => {}
        }
        names.push("price[t]".into());
        names
    }

    fn push_time(&self, hour: usize, out: &mut Vec<f64>) {
        match self.time_encoding {
            TimeEncoding::Scalar => out.push(hour as f64 / self.intervals_per_day as f64),
            TimeEncoding::OneHot => {
                out.extend((0..self.intervals_per_day).map(|h| f64::from(u8::from(h == hour))))
            }
            TimeEncoding::None => {}
        }
    }

    /// Feature vector for interval `t` from lagged `prices`/`consumptions`
    /// (entries `t-n..t`), the hour of `t`, and the posted price.
    pub fn features_at(
        &self,
        prices: &[f64],
        consumptions: &[f64],
        t: usize,
        hour: usize,
        price: f64,
    ) -> Vec<f64> {
        debug_assert!(t >= self.order);
        let mut row = Vec::with_capacity(self.feature_count());
        for i in (1..=self.order).rev() {
            row.push(prices[t - i]);
            row.push(consumptions[t - i]);
        }
        self.push_time(hour, &mut row);
        row.push(price);
        row
    }

    pub(crate) fn check_dataset(&self, ts: &TimeSeriesDataset) -> Result<()> {
        if ts.intervals_per_day != self.intervals_per_day {
            return Err(Error::LayoutMismatch(format!(
                "model expects {} intervals per day, data has {}",
                self.intervals_per_day, ts.intervals_per_day
            )));
        }
        Ok(())
    }
}

/// Direct-approach samples: one row per interval `t >= order`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedSet {
    pub inputs: Matrix,
    pub targets: Vec<f64>,
    pub feature_layout: Vec<String>,
    pub state: StateConfig,
}

impl SupervisedSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.inputs.cols
    }
}

/// A contiguous run of recurrent steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// Absolute interval index of the first step.
    pub start: usize,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Indirect-approach samples: non-overlapping windows of order-1 steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSet {
    pub windows: Vec<Window>,
    pub window_length: usize,
    pub feature_layout: Vec<String>,
    pub state: StateConfig,
}

impl SequenceSet {
    pub fn step_count(&self) -> usize {
        self.windows.iter().map(Window::len).sum()
    }
}

/// Chronological prefix/suffix split.
pub fn split(
    ts: &TimeSeriesDataset,
    train_len: usize,
) -> Result<(TimeSeriesDataset, TimeSeriesDataset)> {
    if train_len == 0 || train_len >= ts.len() {
        return Err(Error::InvalidArgument(format!(
            "train length {train_len} must lie strictly between 0 and the dataset length {}",
            ts.len()
        )));
    }
    Ok((ts.slice(0..train_len), ts.slice(train_len..ts.len())))
}

pub fn build_direct_dataset(ts: &TimeSeriesDataset, cfg: &StateConfig) -> Result<SupervisedSet> {
    cfg.check_dataset(ts)?;
    if ts.len() <= cfg.order {
        return Err(Error::InvalidArgument(format!(
            "dataset of length {} is too short for order {} (needs at least {})",
            ts.len(),
            cfg.order,
            cfg.order + 1
        )));
    }
    let cols = cfg.feature_count();
    let rows = ts.len() - cfg.order;
    let mut data = Vec::with_capacity(rows * cols);
    for t in cfg.order..ts.len() {
        data.extend(cfg.features_at(&ts.prices, &ts.consumptions, t, ts.hours[t], ts.prices[t]));
    }
    Ok(SupervisedSet {
        inputs: Matrix::from_vec(rows, cols, data),
        targets: ts.consumptions[cfg.order..].to_vec(),
        feature_layout: cfg.layout(),
        state: *cfg,
    })
}

/// Order-1 step inputs and targets for local intervals `range` (each `>= 1`).
pub fn sequence_steps(
    ts: &TimeSeriesDataset,
    cfg: &StateConfig,
    range: std::ops::Range<usize>,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    debug_assert!(range.start >= 1 && cfg.order == 1);
    let inputs = range
        .clone()
        .map(|t| cfg.features_at(&ts.prices, &ts.consumptions, t, ts.hours[t], ts.prices[t]))
        .collect();
    (inputs, ts.consumptions[range].to_vec())
}

/// Splits intervals `1..len` into non-overlapping windows of `window_length`
/// steps; a trailing partial window is dropped.
pub fn build_sequence_dataset(
    ts: &TimeSeriesDataset,
    window_length: usize,
    cfg: &StateConfig,
) -> Result<SequenceSet> {
    cfg.check_dataset(ts)?;
    if cfg.order != 1 {
        return Err(Error::InvalidArgument(format!(
            "recurrent inputs use order 1, got order {}",
            cfg.order
        )));
    }
    if window_length < 2 {
        return Err(Error::InvalidArgument(format!(
            "window length must be at least 2, got {window_length}"
        )));
    }
    if ts.len() < window_length + 1 {
        return Err(Error::InvalidArgument(format!(
            "window of {window_length} steps needs at least {} intervals, dataset has {}",
            window_length + 1,
            ts.len()
        )));
    }
    let count = (ts.len() - 1) / window_length;
    let windows = (0..count)
        .map(|w| {
            let first = 1 + w * window_length;
            let (inputs, targets) = sequence_steps(ts, cfg, first..first + window_length);
            Window {
                start: ts.start + first,
                inputs,
                targets,
            }
        })
        .collect();
    Ok(SequenceSet {
        windows,
        window_length,
        feature_layout: cfg.layout(),
        state: *cfg,
    })
}

/// Per-column standardization fit on training data, plus the target's own
/// mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

/// Population mean and std; a (numerically) constant column maps to the
/// identity transform `(0, 1)`.
fn moments(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std <= 1e-12 * mean.abs().max(1.0) {
        (0.0, 1.0)
    } else {
        (mean, std)
    }
}

impl Scaler {
    pub fn fit(rows: &[&[f64]], targets: &[f64]) -> Result<Scaler> {
        if rows.is_empty() || targets.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot fit a scaler on an empty set".into(),
            ));
        }
        let cols = rows[0].len();
        let (means, stds) = (0..cols)
            .map(|j| moments(rows.iter().map(move |r| r[j])))
            .unzip();
        let (target_mean, target_std) = moments(targets.iter().copied());
        Ok(Scaler {
            means,
            stds,
            target_mean,
            target_std,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn inverse_transform(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }

    #[inline]
    pub fn scale_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }

    #[inline]
    pub fn unscale_target(&self, z: f64) -> f64 {
        z * self.target_std + self.target_mean
    }
}

/// Sets a [`Scaler`] can be fit on and applied to.
pub trait Standardize: Sized {
    fn fit_scaler(&self) -> Result<Scaler>;
    fn standardized(&self, scaler: &Scaler) -> Self;
}

impl Standardize for SupervisedSet {
    fn fit_scaler(&self) -> Result<Scaler> {
        let rows: Vec<&[f64]> = self.inputs.iter_rows().collect();
        Scaler::fit(&rows, &self.targets)
    }

    fn standardized(&self, scaler: &Scaler) -> Self {
        let mut out = self.clone();
        for i in 0..out.inputs.rows {
            let z = scaler.transform(self.inputs.row(i));
            out.inputs.row_mut(i).copy_from_slice(&z);
        }
        out.targets
            .iter_mut()
            .for_each(|y| *y = scaler.scale_target(*y));
        out
    }
}

impl Standardize for SequenceSet {
    fn fit_scaler(&self) -> Result<Scaler> {
        let rows: Vec<&[f64]> = self
            .windows
            .iter()
            .flat_map(|w| w.inputs.iter().map(Vec::as_slice))
            .collect();
        let targets: Vec<f64> = self
            .windows
            .iter()
            .flat_map(|w| w.targets.iter().copied())
            .collect();
        Scaler::fit(&rows, &targets)
    }

    fn standardized(&self, scaler: &Scaler) -> Self {
        let mut out = self.clone();
        for w in &mut out.windows {
            for x in &mut w.inputs {
                *x = scaler.transform(x);
            }
            w.targets
                .iter_mut()
                .for_each(|y| *y = scaler.scale_target(*y));
        }
        out
    }
}

pub fn fit_scaler<S: Standardize>(set: &S) -> Result<Scaler> {
    set.fit_scaler()
}

pub fn apply_scaler<S: Standardize>(scaler: &Scaler, set: &S) -> S {
    set.standardized(scaler)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(len: usize) -> TimeSeriesDataset {
        let prices = (0..len).map(|t| 20.0 + t as f64).collect();
        let cons = (0..len).map(|t| 100.0 + 10.0 * t as f64).collect();
        TimeSeriesDataset::new(0, prices, cons, 24).unwrap()
    }

    #[test]
    fn split_examples() {
        let ts = series(8760);
        let (a, b) = split(&ts, 7296).unwrap();
        assert_eq!((a.len(), b.len()), (7296, 1464));
        assert_eq!(b.start, 7296);
        assert_eq!(b.hours[0], 7296 % 24);
        let ts = series(10);
        let (a, b) = split(&ts, 5).unwrap();
        assert_eq!(a.prices, ts.prices[..5]);
        assert_eq!(b.prices, ts.prices[5..]);
        assert!(split(&ts, 10).is_err());
        assert!(split(&ts, 0).is_err());
    }

    #[test]
    fn direct_layout() {
        let cfg = StateConfig::new(2, TimeEncoding::Scalar, 24);
        let set = build_direct_dataset(&series(5), &cfg).unwrap();
        assert_eq!((set.len(), set.feature_count()), (3, 6));
        assert_eq!(set.feature_layout.len(), 6);

        let cfg = StateConfig::new(0, TimeEncoding::None, 24);
        let set = build_direct_dataset(&series(5), &cfg).unwrap();
        assert_eq!(set.feature_count(), 1);
        assert_eq!(set.inputs.row(0), &[20.0]);

        let cfg = StateConfig::new(1, TimeEncoding::Scalar, 24);
        let set = build_direct_dataset(&series(3), &cfg).unwrap();
        assert_eq!(set.inputs.row(0), &[20.0, 100.0, 1.0 / 24.0, 21.0]);
        assert_eq!(set.targets[0], 110.0);

        let cfg = StateConfig::new(1, TimeEncoding::OneHot, 24);
        let set = build_direct_dataset(&series(3), &cfg).unwrap();
        assert_eq!(set.feature_count(), 2 + 24 + 1);
        assert_eq!(set.inputs.row(1)[2 + 2], 1.0);
        assert_eq!(set.inputs.row(1)[2..26].iter().sum::<f64>(), 1.0);

        assert!(
            build_direct_dataset(&series(3), &StateConfig::new(3, TimeEncoding::Scalar, 24))
                .is_err()
        );
    }

    #[test]
    fn shape_law_and_causality() {
        let base = series(40);
        for n in 0..=5 {
            for enc in [
                TimeEncoding::Scalar,
                TimeEncoding::OneHot,
                TimeEncoding::None,
            ] {
                let cfg = StateConfig::new(n, enc, 24);
                let set = build_direct_dataset(&base, &cfg).unwrap();
                assert_eq!(set.len(), 40 - n);
                assert_eq!(set.feature_count(), 2 * n + cfg.time_dim() + 1);
                for t in n..39 {
                    let mut perturbed = base.clone();
                    perturbed.consumptions[t + 1] += 1000.0;
                    perturbed.prices[t + 1] += 7.0;
                    let p = build_direct_dataset(&perturbed, &cfg).unwrap();
                    assert_eq!(p.inputs.row(t - n), set.inputs.row(t - n), "n={n} t={t}");
                }
            }
        }
    }

    #[test]
    fn sequence_windows() {
        let cfg = StateConfig::new(1, TimeEncoding::Scalar, 24);
        let ts = series(97);
        let set = build_sequence_dataset(&ts, 48, &cfg).unwrap();
        assert_eq!(set.windows.len(), 2);
        assert_eq!(set.windows[0].start, 1);
        assert_eq!(set.windows[1].start, 49);
        let joined: Vec<f64> = set.windows.iter().flat_map(|w| w.targets.clone()).collect();
        assert_eq!(joined, ts.consumptions[1..97]);
        let w = &set.windows[0];
        assert_eq!(w.inputs[0], vec![20.0, 100.0, 1.0 / 24.0, 21.0]);
        assert!(build_sequence_dataset(&series(48), 48, &cfg).is_err());
        assert!(build_sequence_dataset(&ts, 1, &cfg).is_err());
        assert!(
            build_sequence_dataset(&ts, 48, &StateConfig::new(2, TimeEncoding::Scalar, 24))
                .is_err()
        );
    }

    #[test]
    fn constant_series_windows_differ_only_in_time() {
        let ts = TimeSeriesDataset::new(0, vec![30.0; 30], vec![50.0; 30], 24).unwrap();
        let cfg = StateConfig::new(1, TimeEncoding::Scalar, 24);
        let set = build_sequence_dataset(&ts, 10, &cfg).unwrap();
        for w in &set.windows {
            for x in &w.inputs {
                assert_eq!([x[0], x[1], x[3]], [30.0, 50.0, 30.0]);
            }
        }
    }

    #[test]
    fn scaler_centers_and_handles_constants() {
        let cfg = StateConfig::new(2, TimeEncoding::Scalar, 24);
        let mut ts = series(50);
        ts.prices.iter_mut().for_each(|p| *p = 42.0);
        let set = build_direct_dataset(&ts, &cfg).unwrap();
        let sc = fit_scaler(&set).unwrap();
        let z = apply_scaler(&sc, &set);
        for j in 0..z.feature_count() {
            let mean: f64 = (0..z.len()).map(|i| z.inputs.get(i, j)).sum::<f64>() / z.len() as f64;
            if j == 0 || j == 2 || j == 5 {
                // constant price columns pass through untouched
                assert!((0..z.len()).all(|i| z.inputs.get(i, j) == 42.0));
            } else {
                assert!(mean.abs() < 1e-9, "column {j} mean {mean}");
            }
        }
        assert!(z.inputs.data.iter().all(|v| v.is_finite()));
        assert!(Scaler::fit(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn scaler_round_trip(rows in proptest::collection::vec(proptest::collection::vec(-1e4f64..1e4, 4), 2..40)) {
            let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            let targets: Vec<f64> = rows.iter().map(|r| r[0] * 2.0 + 1.0).collect();
            let sc = Scaler::fit(&refs, &targets).unwrap();
            for r in &rows {
                let back = sc.inverse_transform(&sc.transform(r));
                for (j, (a, b)) in back.iter().zip(r).enumerate() {
                    let scale = b.abs().max(sc.means[j].abs()).max(sc.stds[j]);
                    prop_assert!((a - b).abs() <= 1e-12 * scale);
                }
            }
            for y in &targets {
                let back = sc.unscale_target(sc.scale_target(*y));
                let scale = y.abs().max(sc.target_mean.abs()).max(sc.target_std);
                prop_assert!((back - y).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn split_is_partition(len in 2usize..200, frac in 0.01f64..0.99) {
            let ts = series(len);
            let k = ((len as f64 * frac) as usize).clamp(1, len - 1);
            let (a, b) = split(&ts, k).unwrap();
            let mut joined = a.clone();
            for i in 0..b.len() {
                joined.push(b.prices[i], b.consumptions[i]);
            }
            prop_assert_eq!(joined, ts);
        }
    }
}
