//! Run configuration: one TOML document with `simulation`, `features`,
//! `training` and `benchmark` sections. Every field has a default, so an
//! empty file is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::features::{StateConfig, TimeEncoding};
use crate::nn::{ModelKind, RecurrentArch, TrainConfig, DEFAULT_WARMUP};
use crate::sim::PopulationSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub simulation: SimulationConfig,
    pub features: FeatureConfig,
    pub training: TrainingConfig,
    pub benchmark: BenchmarkConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub customers: usize,
    pub horizon: usize,
    pub intervals_per_day: usize,
    pub price_low: f64,
    pub price_high: f64,
    pub noise_std: f64,
    pub peak_low: f64,
    pub peak_high: f64,
    pub rho_ratio: f64,
    pub min_fraction: f64,
    /// Redraw backlog rates every interval instead of once per customer.
    pub resample_alpha: bool,
    /// Profile CSV; the synthetic generator is used when absent. Relative
    /// paths resolve against the config file's directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_path: Option<PathBuf>,
    pub population_seed: u64,
    pub price_seed: u64,
    pub profile_seed: u64,
    pub noise_seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let spec = PopulationSpec::default();
        SimulationConfig {
            customers: 100,
            horizon: 8760,
            intervals_per_day: 24,
            price_low: 20.0,
            price_high: 50.0,
            noise_std: 0.1,
            peak_low: spec.peak_low,
            peak_high: spec.peak_high,
            rho_ratio: spec.rho_ratio,
            min_fraction: spec.min_fraction,
            resample_alpha: false,
            profile_path: None,
            population_seed: 1,
            price_seed: 2,
            profile_seed: 3,
            noise_seed: 4,
        }
    }
}

impl SimulationConfig {
    pub fn population_spec(&self) -> PopulationSpec {
        PopulationSpec {
            peak_low: self.peak_low,
            peak_high: self.peak_high,
            rho_ratio: self.rho_ratio,
            min_fraction: self.min_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub time_encoding: TimeEncoding,
    /// Leading intervals used for training; the rest is the test split.
    pub train_len: usize,
    pub window_length: usize,
    pub warmup: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            time_encoding: TimeEncoding::Scalar,
            train_len: 7296,
            window_length: 48,
            warmup: DEFAULT_WARMUP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FnnConfig {
    pub hidden: Vec<usize>,
    pub optimizer: TrainConfig,
}

impl Default for FnnConfig {
    fn default() -> Self {
        FnnConfig {
            hidden: vec![32, 32],
            optimizer: TrainConfig {
                rng_seed: 11,
                ..TrainConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecurrentConfig {
    pub hidden: usize,
    pub layers: usize,
    pub optimizer: TrainConfig,
}

impl RecurrentConfig {
    fn with_seed(rng_seed: u64) -> Self {
        let arch = RecurrentArch::default();
        RecurrentConfig {
            hidden: arch.hidden,
            layers: arch.layers,
            optimizer: TrainConfig {
                rng_seed,
                ..TrainConfig::default()
            },
        }
    }

    pub fn arch(&self) -> RecurrentArch {
        RecurrentArch {
            hidden: self.hidden,
            layers: self.layers,
        }
    }
}

impl Default for RecurrentConfig {
    fn default() -> Self {
        RecurrentConfig::with_seed(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub fnn: FnnConfig,
    pub rnn: RecurrentConfig,
    pub lstm: RecurrentConfig,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            fnn: FnnConfig::default(),
            rnn: RecurrentConfig::with_seed(12),
            lstm: RecurrentConfig::with_seed(13),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub kinds: Vec<ModelKind>,
    /// Orders trained for the direct (linear, fnn) kinds.
    pub orders: Vec<usize>,
    /// Order of the direct models written to the violin file.
    pub violin_order: usize,
    /// Used when no output directory is given on the command line.
    pub out_dir: PathBuf,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            kinds: ModelKind::ALL.to_vec(),
            orders: (0..=5).collect(),
            violin_order: 5,
            out_dir: PathBuf::from("benchmark-out"),
        }
    }
}

fn field_err(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{path}: {msg}"))
}

fn check_train(path: &str, cfg: &TrainConfig) -> Result<()> {
    cfg.validate().map_err(|e| match e {
        Error::InvalidArgument(m) => field_err(path, m),
        other => other,
    })
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)
            .map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file. Relative profile paths are
    /// resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let mut cfg = RunConfig::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let Some(p) = cfg.simulation.profile_path.as_mut() {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn state_config(&self, order: usize) -> StateConfig {
        StateConfig::new(
            order,
            self.features.time_encoding,
            self.simulation.intervals_per_day,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.simulation;
        if s.customers == 0 {
            return Err(field_err("simulation.customers", "must be at least 1"));
        }
        if s.intervals_per_day == 0 {
            return Err(field_err(
                "simulation.intervals_per_day",
                "must be at least 1",
            ));
        }
        if s.horizon == 0 || !s.horizon.is_multiple_of(s.intervals_per_day) {
            return Err(field_err(
                "simulation.horizon",
                format!(
                    "{} is not a positive multiple of intervals_per_day ({})",
                    s.horizon, s.intervals_per_day
                ),
            ));
        }
        if !(s.price_low >= 0.0 && s.price_low < s.price_high && s.price_high.is_finite()) {
            return Err(field_err(
                "simulation.price_low",
                format!(
                    "price range [{}, {}) must be non-negative and non-empty",
                    s.price_low, s.price_high
                ),
            ));
        }
        if !(s.noise_std >= 0.0 && s.noise_std.is_finite()) {
            return Err(field_err(
                "simulation.noise_std",
                format!("must be non-negative, got {}", s.noise_std),
            ));
        }
        if !(s.peak_low > 0.0 && s.peak_low < s.peak_high && s.peak_high.is_finite()) {
            return Err(field_err(
                "simulation.peak_low",
                format!(
                    "peak range [{}, {}) must be positive and non-empty",
                    s.peak_low, s.peak_high
                ),
            ));
        }
        if !(s.rho_ratio < 0.0 && s.rho_ratio.is_finite()) {
            return Err(field_err(
                "simulation.rho_ratio",
                format!("must be negative, got {}", s.rho_ratio),
            ));
        }
        if !(0.0..=1.0).contains(&s.min_fraction) {
            return Err(field_err(
                "simulation.min_fraction",
                format!("must lie in [0, 1], got {}", s.min_fraction),
            ));
        }

        let f = &self.features;
        if f.train_len == 0 || f.train_len >= s.horizon {
            return Err(field_err(
                "features.train_len",
                format!(
                    "{} must lie strictly between 0 and the horizon ({})",
                    f.train_len, s.horizon
                ),
            ));
        }
        if f.window_length < 2 {
            return Err(field_err("features.window_length", "must be at least 2"));
        }
        if f.warmup + 2 > s.horizon - f.train_len {
            return Err(field_err(
                "features.warmup",
                "leaves no scored test intervals",
            ));
        }

        let t = &self.training;
        if t.fnn.hidden.is_empty() || t.fnn.hidden.contains(&0) {
            return Err(field_err(
                "training.fnn.hidden",
                "needs at least one layer, each with at least one unit",
            ));
        }
        check_train("training.fnn.optimizer", &t.fnn.optimizer)?;
        for (name, r) in [("rnn", &t.rnn), ("lstm", &t.lstm)] {
            if r.hidden == 0 || r.layers == 0 {
                return Err(field_err(
                    &format!("training.{name}"),
                    "hidden and layers must be at least 1",
                ));
            }
            check_train(&format!("training.{name}.optimizer"), &r.optimizer)?;
        }

        let b = &self.benchmark;
        if b.kinds.is_empty() {
            return Err(field_err(
                "benchmark.kinds",
                "must name at least one model kind",
            ));
        }
        for (i, k) in b.kinds.iter().enumerate() {
            if b.kinds[..i].contains(k) {
                return Err(field_err("benchmark.kinds", format!("'{k}' listed twice")));
            }
        }
        if b.orders.is_empty() {
            return Err(field_err(
                "benchmark.orders",
                "must list at least one order",
            ));
        }
        for (i, o) in b.orders.iter().enumerate() {
            if b.orders[..i].contains(o) {
                return Err(field_err(
                    "benchmark.orders",
                    format!("order {o} listed twice"),
                ));
            }
            if *o >= f.train_len {
                return Err(field_err(
                    "benchmark.orders",
                    format!("order {o} exceeds the training split"),
                ));
            }
        }
        Ok(())
    }
}
