//! Absolute-percentage-error metrics and benchmark report structures.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::nn::{Model, ModelKind};
use crate::sim::TimeSeriesDataset;
use crate::{Error, Result};

/// Denominator used for SDAPE, recorded in every report document.
pub const SDAPE_DENOMINATOR: &str = "population";

/// Per-sample absolute percentage errors `100 |p - a| / a`.
pub fn ape(actual: &[f64], predicted: &[f64]) -> Result<Vec<f64>> {
    if actual.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            got: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InvalidArgument(
            "percentage errors need at least one sample".into(),
        ));
    }
    actual
        .iter()
        .zip(predicted)
        .enumerate()
        .map(|(i, (a, p))| {
            if !(*a > 0.0) {
                Err(Error::Data(format!(
                    "actual value {a} at index {i} is not positive; percentage error undefined"
                )))
            } else {
                Ok(100.0 * (p - a).abs() / a)
            }
        })
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard deviation with divisor N.
pub fn population_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Mean absolute percentage error, in percent.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    Ok(mean(&ape(actual, predicted)?))
}

/// Population standard deviation of the absolute percentage errors, in percent.
pub fn sdape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    Ok(population_std(&ape(actual, predicted)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Test => "test",
        }
    }
}

impl std::str::FromStr for SplitTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitTag::Train),
            "test" => Ok(SplitTag::Test),
            other => Err(Error::InvalidArgument(format!(
                "split must be 'train' or 'test', got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: String,
    pub kind: ModelKind,
    pub order: usize,
    pub architecture: String,
    pub split: SplitTag,
    pub mape_pct: f64,
    pub sdape_pct: f64,
    /// Leading recurrent steps run but not scored.
    pub warmup_excluded: usize,
    pub ape_samples: Vec<f64>,
}

impl EvalReport {
    pub fn from_samples(
        model: &Model,
        name: String,
        split: SplitTag,
        ape_samples: Vec<f64>,
    ) -> Self {
        EvalReport {
            name,
            kind: model.kind(),
            order: model.order(),
            architecture: model.architecture(),
            split,
            mape_pct: mean(&ape_samples),
            sdape_pct: population_std(&ape_samples),
            warmup_excluded: model.warmup(),
            ape_samples,
        }
    }

    pub fn record(&self) -> ReportRecord {
        ReportRecord {
            name: self.name.clone(),
            kind: self.kind,
            order: self.order,
            split: self.split,
            mape_pct: self.mape_pct,
            sdape_pct: self.sdape_pct,
        }
    }
}

/// Default display name: `linear-n3`, `fnn-n0`, `rnn`, `lstm`.
pub fn model_name(model: &Model) -> String {
    if model.kind().is_recurrent() {
        model.kind().to_string()
    } else {
        format!("{}-n{}", model.kind(), model.order())
    }
}

/// One-step evaluation over a split with true history.
pub fn evaluate(model: &Model, dataset: &TimeSeriesDataset, split: SplitTag) -> Result<EvalReport> {
    let pred = model.predict_series(dataset)?;
    let actual = &dataset.consumptions[pred.first..pred.first + pred.predictions.len()];
    let samples = ape(actual, &pred.predictions)?;
    Ok(EvalReport::from_samples(
        model,
        model_name(model),
        split,
        samples,
    ))
}

/// Scores one split of a full series whose first `train_len` intervals are
/// the training split. Test-split predictions draw their lagged inputs (or
/// recurrent warm-up) from the end of the training split, so every test
/// interval is scored.
pub fn evaluate_split(
    model: &Model,
    full: &TimeSeriesDataset,
    train_len: usize,
    split: SplitTag,
) -> Result<EvalReport> {
    if train_len == 0 || train_len >= full.len() {
        return Err(Error::Data(format!(
            "dataset has {} intervals; a training split of {train_len} leaves no test data",
            full.len()
        )));
    }
    let part = match split {
        SplitTag::Train => full.slice(0..train_len),
        SplitTag::Test => {
            let context = model.min_history();
            if context > train_len {
                return Err(Error::Data(format!(
                    "training split of {train_len} intervals is shorter than the {context} needed as context"
                )));
            }
            full.slice(train_len - context..full.len())
        }
    };
    let mut report = evaluate(model, &part, split)?;
    if split == SplitTag::Test {
        debug_assert_eq!(report.ape_samples.len(), full.len() - train_len);
    }
    report.split = split;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub name: String,
    pub kind: ModelKind,
    pub order: usize,
    pub split: SplitTag,
    pub mape_pct: f64,
    pub sdape_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub sdape_denominator: String,
    pub recurrent_warmup_steps: usize,
    pub records: Vec<ReportRecord>,
}

impl ReportDocument {
    pub fn new(recurrent_warmup_steps: usize, records: Vec<ReportRecord>) -> Self {
        ReportDocument {
            sdape_denominator: SDAPE_DENOMINATOR.into(),
            recurrent_warmup_steps,
            records,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn find(
        &self,
        kind: ModelKind,
        order: Option<usize>,
        split: SplitTag,
    ) -> Option<&ReportRecord> {
        self.records
            .iter()
            .find(|r| r.kind == kind && r.split == split && order.is_none_or(|o| r.order == o))
    }
}

fn table_block(
    out: &mut String,
    columns: &[String],
    cell: impl Fn(usize, SplitTag) -> Option<(f64, f64)>,
) {
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
    for split in [SplitTag::Train, SplitTag::Test] {
        let label = if split == SplitTag::Train {
            "Train"
        } else {
            "Test"
        };
        let mape: Vec<String> = (0..columns.len())
            .map(|c| fmt(cell(c, split).map(|v| v.0)))
            .collect();
        let sdape: Vec<String> = (0..columns.len())
            .map(|c| fmt(cell(c, split).map(|v| v.1)))
            .collect();
        let _ = writeln!(out, "{label:<6}{:<11}{}", "MAPE (%)", row(&mape));
        let _ = writeln!(out, "{:<6}{:<11}{}", "", "SDAPE (%)", row(&sdape));
    }
}

fn row(cells: &[String]) -> String {
    cells.iter().map(|c| format!("{c:>8}")).collect()
}

/// Text table for a direct model family, one column per order.
pub fn direct_table(
    doc: &ReportDocument,
    kind: ModelKind,
    orders: &[usize],
    title: &str,
) -> String {
    let mut out = format!("{title}\n");
    let cols: Vec<String> = orders.iter().map(usize::to_string).collect();
    let _ = writeln!(out, "{:<17}{}", "order n", row(&cols));
    table_block(&mut out, &cols, |c, split| {
        doc.find(kind, Some(orders[c]), split)
            .map(|r| (r.mape_pct, r.sdape_pct))
    });
    out
}

/// Text table with RNN and LSTM columns.
pub fn recurrent_table(doc: &ReportDocument, title: &str) -> String {
    let mut out = format!("{title}\n");
    let kinds = [ModelKind::Rnn, ModelKind::Lstm];
    let cols: Vec<String> = kinds
        .iter()
        .map(|k| k.as_str().to_ascii_uppercase())
        .collect();
    let _ = writeln!(out, "{:<17}{}", "", row(&cols));
    table_block(&mut out, &cols, |c, split| {
        doc.find(kinds[c], None, split)
            .map(|r| (r.mape_pct, r.sdape_pct))
    });
    out
}

/// `model,ape_pct` rows, one per sample.
pub fn violin_csv(reports: &[&EvalReport]) -> String {
    let mut out = String::from("model,ape_pct\n");
    for r in reports {
        for a in &r.ape_samples {
            let _ = writeln!(out, "{},{}", r.name, crate::sim::format_decimal(*a));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        assert!((mape(&[1.0, 2.0], &[1.1, 1.8]).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(mape(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mape(&[2.0, 4.0], &[1.0, 5.0]).unwrap(), 37.5);
        assert_eq!(sdape(&[3.0, 7.0], &[3.0, 7.0]).unwrap(), 0.0);
        assert_eq!(sdape(&[10.0, 20.0], &[11.0, 22.0]).unwrap(), 0.0);
        assert_eq!(sdape(&[2.0, 4.0], &[1.0, 5.0]).unwrap(), 12.5);
    }

    #[test]
    fn undefined_percentages_rejected() {
        let e = mape(&[1.0, 0.0], &[1.0, 1.0]).unwrap_err().to_string();
        assert!(e.contains("index 1"), "{e}");
        assert!(mape(&[1.0, -2.0], &[1.0, 1.0]).is_err());
        assert!(mape(&[], &[]).is_err());
        assert!(mape(&[1.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn scale_invariance(pairs in proptest::collection::vec((0.1f64..100.0, 0.0f64..200.0), 1..50), k in 0.01f64..100.0) {
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let ka: Vec<f64> = a.iter().map(|x| x * k).collect();
            let kp: Vec<f64> = p.iter().map(|x| x * k).collect();
            let (m1, m2) = (mape(&a, &p).unwrap(), mape(&ka, &kp).unwrap());
            prop_assert!((m1 - m2).abs() <= 1e-9 * m1.max(1.0));
            let (s1, s2) = (sdape(&a, &p).unwrap(), sdape(&ka, &kp).unwrap());
            prop_assert!((s1 - s2).abs() <= 1e-9 * s1.max(1.0));
        }

        #[test]
        fn zero_iff_exact(a in proptest::collection::vec(0.1f64..100.0, 1..30), idx in 0usize..30, bump in 1e-6f64..10.0) {
            prop_assert_eq!(mape(&a, &a).unwrap(), 0.0);
            let mut p = a.clone();
            let i = idx % a.len();
            p[i] += bump;
            prop_assert!(mape(&a, &p).unwrap() > 0.0);
        }
    }
}
