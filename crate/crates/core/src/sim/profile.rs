use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    Synthetic,
    File,
}

/// Normalized demand multipliers, one per interval, with maximum 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    pub values: Vec<f64>,
    pub source: ProfileSource,
}

impl LoadProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Builds a profile from raw positive values, rescaling so the maximum is 1.
    pub fn from_raw(values: Vec<f64>, source: ProfileSource) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("load profile is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Data(format!("non-positive value at row {}", i + 1)));
        }
        let max = values.iter().copied().fold(f64::MIN, f64::max);
        Ok(LoadProfile {
            values: values.into_iter().map(|v| v / max).collect(),
            source,
        })
    }
}

// Daily shape: flat base plus a morning bump and a larger evening bump.
const DAY_BASE: f64 = 0.7;
const MORNING_PEAK_HOUR: f64 = 8.0;
const MORNING_AMPLITUDE: f64 = 0.15;
const MORNING_WIDTH: f64 = 2.5;
const EVENING_PEAK_HOUR: f64 = 19.0;
const EVENING_AMPLITUDE: f64 = 0.3;
const EVENING_WIDTH: f64 = 3.0;

// Seasonal envelope: summer maximum, secondary winter maximum, spring/fall troughs.
const SUMMER_PEAK_DAY: f64 = 196.0;
const ANNUAL_AMPLITUDE: f64 = 0.1;
const SEMIANNUAL_AMPLITUDE: f64 = 0.2;
const WEEKEND_FACTOR: f64 = 0.92;

// Day-to-day weather factor: AR(1) in log space.
const WEATHER_PERSISTENCE: f64 = 0.8;
const WEATHER_SHOCK_STD: f64 = 0.03;

/// Relative demand at `hour` (fractional hours after midnight, 0..24).
pub fn daily_shape(hour: f64) -> f64 {
    let bump = |center: f64, width: f64| (-(hour - center).powi(2) / (2.0 * width * width)).exp();
    DAY_BASE
        + MORNING_AMPLITUDE * bump(MORNING_PEAK_HOUR, MORNING_WIDTH)
        + EVENING_AMPLITUDE * bump(EVENING_PEAK_HOUR, EVENING_WIDTH)
}

/// Deterministic part of the per-day multiplier for `day` (0-based, day 0 a Monday).
pub fn seasonal_envelope(day: usize) -> f64 {
    let phase = 2.0 * PI * ((day % 365) as f64 - SUMMER_PEAK_DAY) / 365.0;
    let season = 1.0 + ANNUAL_AMPLITUDE * phase.cos() + SEMIANNUAL_AMPLITUDE * (2.0 * phase).cos();
    let week = if day % 7 >= 5 { WEEKEND_FACTOR } else { 1.0 };
    season * week
}

/// Synthetic annual load profile: a per-day envelope (season, weekday, and a
/// seeded weather factor) times a fixed intra-day double-peak curve, scaled to
/// a maximum of 1.
pub fn generate_profile(
    horizon: usize,
    intervals_per_day: usize,
    rng_seed: u64,
) -> Result<LoadProfile> {
    if intervals_per_day == 0 {
        return Err(Error::InvalidArgument(
            "intervals per day must be positive".into(),
        ));
    }
    if horizon == 0 || !horizon.is_multiple_of(intervals_per_day) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} is not a positive multiple of {intervals_per_day} intervals per day"
        )));
    }
    let days = horizon / intervals_per_day;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let shock = Normal::new(0.0, WEATHER_SHOCK_STD).expect("finite std");
    let mut weather = 0.0_f64;
    let envelope: Vec<f64> = (0..days)
        .map(|d| {
            if d > 0 {
                weather = WEATHER_PERSISTENCE * weather + shock.sample(&mut rng);
            }
            seasonal_envelope(d) * weather.exp()
        })
        .collect();
    let shape: Vec<f64> = (0..intervals_per_day)
        .map(|h| daily_shape(h as f64 * 24.0 / intervals_per_day as f64))
        .collect();
    let values = envelope
        .iter()
        .flat_map(|e| shape.iter().map(move |s| e * s))
        .collect();
    LoadProfile::from_raw(values, ProfileSource::Synthetic)
}

/// Reads a profile CSV: one positive decimal per line, `#` lines and blank
/// lines ignored. Errors carry the 1-based line number.
pub fn load_profile(path: impl AsRef<Path>) -> Result<LoadProfile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_profile(&text)
}

pub fn parse_profile(text: &str) -> Result<LoadProfile> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Data(format!("non-numeric value at row {row}: '{line}'")))?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Data(format!("non-positive value at row {row}")));
        }
        values.push(v);
    }
    LoadProfile::from_raw(values, ProfileSource::File)
}
