use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use crate::{Error, Result};

pub const DATASET_HEADER: [&str; 4] = ["t", "hour", "price_usd_per_mwh", "consumption_mwh"];

/// Aligned hourly price, aggregate consumption and hour-of-day series.
///
/// `start` is the absolute interval index of the first row, so a suffix
/// produced by a split keeps its original time stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    pub start: usize,
    pub prices: Vec<f64>,
    pub consumptions: Vec<f64>,
    pub hours: Vec<usize>,
    pub intervals_per_day: usize,
}

impl TimeSeriesDataset {
    pub fn new(
        start: usize,
        prices: Vec<f64>,
        consumptions: Vec<f64>,
        intervals_per_day: usize,
    ) -> Result<Self> {
        if intervals_per_day == 0 {
            return Err(Error::InvalidArgument(
                "intervals per day must be positive".into(),
            ));
        }
        if prices.len() != consumptions.len() {
            return Err(Error::Data(format!(
                "price series has {} entries but consumption series has {}",
                prices.len(),
                consumptions.len()
            )));
        }
        if let Some(i) = consumptions
            .iter()
            .position(|c| !(*c >= 0.0) || !c.is_finite())
        {
            return Err(Error::Data(format!(
                "consumption at t={} is negative or non-finite",
                start + i
            )));
        }
        if let Some(i) = prices.iter().position(|p| !p.is_finite()) {
            return Err(Error::Data(format!(
                "price at t={} is not finite",
                start + i
            )));
        }
        let hours = (start..start + prices.len())
            .map(|t| t % intervals_per_day)
            .collect();
        Ok(TimeSeriesDataset {
            start,
            prices,
            consumptions,
            hours,
            intervals_per_day,
        })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Rows `range` (local indices) as a new dataset.
    pub fn slice(&self, range: Range<usize>) -> TimeSeriesDataset {
        TimeSeriesDataset {
            start: self.start + range.start,
            prices: self.prices[range.clone()].to_vec(),
            consumptions: self.consumptions[range.clone()].to_vec(),
            hours: self.hours[range].to_vec(),
            intervals_per_day: self.intervals_per_day,
        }
    }

    /// Appends one interval, deriving its hour from the running index.
    pub fn push(&mut self, price: f64, consumption: f64) {
        let t = self.start + self.len();
        self.prices.push(price);
        self.consumptions.push(consumption);
        self.hours.push(t % self.intervals_per_day);
    }

    pub fn mean_price(&self) -> f64 {
        self.prices.iter().sum::<f64>() / self.len().max(1) as f64
    }

    pub fn mean_consumption(&self) -> f64 {
        self.consumptions.iter().sum::<f64>() / self.len().max(1) as f64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let fail = |e: csv::Error| Error::Data(format!("writing dataset csv: {e}"));
        w.write_record(DATASET_HEADER).map_err(fail)?;
        for i in 0..self.len() {
            w.write_record([
                (self.start + i).to_string(),
                self.hours[i].to_string(),
                format_decimal(self.prices[i]),
                format_decimal(self.consumptions[i]),
            ])
            .map_err(fail)?;
        }
        w.flush()
            .map_err(|e| Error::Data(format!("writing dataset csv: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Parses the dataset CSV. Rows must be consecutive in `t` and each `hour`
    /// must equal `t mod intervals_per_day`.
    pub fn read_csv<R: Read>(input: R, intervals_per_day: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(input);
        let header = rdr
            .headers()
            .map_err(|e| Error::Data(format!("reading dataset header: {e}")))?
            .clone();
        if header.iter().map(str::trim).ne(DATASET_HEADER) {
            return Err(Error::Data(format!(
                "dataset header must be '{}', got '{}'",
                DATASET_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut start = None;
        let mut prices = Vec::new();
        let mut consumptions = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 2;
            let rec = rec.map_err(|e| Error::Data(format!("row {row}: {e}")))?;
            if rec.len() != 4 {
                return Err(Error::Data(format!(
                    "row {row}: expected 4 fields, got {}",
                    rec.len()
                )));
            }
            let int = |k: usize| -> Result<usize> {
                rec[k].trim().parse().map_err(|_| {
                    Error::Data(format!(
                        "row {row}: '{}' is not a non-negative integer",
                        &rec[k]
                    ))
                })
            };
            let num = |k: usize| -> Result<f64> {
                rec[k]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Data(format!("row {row}: '{}' is not a number", &rec[k])))
            };
            let t = int(0)?;
            let hour = int(1)?;
            let s = *start.get_or_insert(t);
            if t != s + prices.len() {
                return Err(Error::Data(format!("row {row}: t={t} is not consecutive")));
            }
            if hour != t % intervals_per_day {
                return Err(Error::Data(format!(
                    "row {row}: hour {hour} inconsistent with t={t} and {intervals_per_day} intervals per day"
                )));
            }
            prices.push(num(2)?);
            consumptions.push(num(3)?);
        }
        TimeSeriesDataset::new(start.unwrap_or(0), prices, consumptions, intervals_per_day)
    }

    pub fn load(path: impl AsRef<Path>, intervals_per_day: usize) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f), intervals_per_day)
    }
}

/// Shortest round-trip decimal, zero-padded to at least nine significant digits.
pub fn format_decimal(v: f64) -> String {
    let mut s = format!("{v}");
    let digits: usize = s
        .trim_start_matches('-')
        .trim_start_matches(['0', '.'])
        .chars()
        .filter(char::is_ascii_digit)
        .count();
    if digits < 9 && v != 0.0 {
        if !s.contains('.') {
            s.push('.');
        }
        s.extend(std::iter::repeat_n('0', 9 - digits));
    }
    s
}
