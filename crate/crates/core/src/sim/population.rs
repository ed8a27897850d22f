use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Behavioral parameters of one end-use customer (EUC).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EucParams {
    /// Peak hourly demand in MWh.
    pub peak_demand: f64,
    /// Curvature of the quadratic benefit in $/MWh², strictly negative.
    pub rho: f64,
    /// Share of unmet demand carried into the next interval.
    pub alpha: f64,
    /// Consumption floor as a fraction of current demand.
    pub min_fraction: f64,
}

impl EucParams {
    pub fn new(peak_demand: f64, rho: f64, alpha: f64, min_fraction: f64) -> Result<Self> {
        let p = EucParams {
            peak_demand,
            rho,
            alpha,
            min_fraction,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rho must be strictly negative for a concave benefit, got {}",
                self.rho
            )));
        }
        if !(self.peak_demand > 0.0) || !self.peak_demand.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "peak demand must be positive, got {}",
                self.peak_demand
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!(
                "backlog rate must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.min_fraction) {
            return Err(Error::InvalidArgument(format!(
                "min_fraction must lie in [0, 1], got {}",
                self.min_fraction
            )));
        }
        Ok(())
    }
}

/// Sampling ranges for a customer population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub peak_low: f64,
    pub peak_high: f64,
    /// rho = rho_ratio / peak_demand.
    pub rho_ratio: f64,
    pub min_fraction: f64,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        PopulationSpec {
            peak_low: 0.1,
            peak_high: 2.0,
            rho_ratio: -100.0,
            min_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub eucs: Vec<EucParams>,
    pub seed: u64,
}

impl Population {
    pub fn len(&self) -> usize {
        self.eucs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eucs.is_empty()
    }

    pub fn total_peak(&self) -> f64 {
        self.eucs.iter().map(|e| e.peak_demand).sum()
    }
}

/// Samples `count` customers with the default ranges: peak ~ U[0.1, 2] MWh,
/// backlog rate ~ U[0, 1], rho = -100 / peak, consumption floor 0.5.
pub fn sample_population(count: usize, rng_seed: u64) -> Result<Population> {
    sample_population_with(&PopulationSpec::default(), count, rng_seed)
}

pub fn sample_population_with(
    spec: &PopulationSpec,
    count: usize,
    rng_seed: u64,
) -> Result<Population> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "population size must be at least 1".into(),
        ));
    }
    if !(spec.peak_low > 0.0 && spec.peak_low < spec.peak_high) {
        return Err(Error::InvalidArgument(format!(
            "peak range must satisfy 0 < low < high, got [{}, {}]",
            spec.peak_low, spec.peak_high
        )));
    }
    if !(spec.rho_ratio < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rho ratio must be negative, got {}",
            spec.rho_ratio
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let eucs = (0..count)
        .map(|_| {
            let peak: f64 = rng.random_range(spec.peak_low..spec.peak_high);
            let alpha: f64 = rng.random_range(0.0..=1.0);
            EucParams::new(peak, spec.rho_ratio / peak, alpha, spec.min_fraction)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Population {
        eucs,
        seed: rng_seed,
    })
}
