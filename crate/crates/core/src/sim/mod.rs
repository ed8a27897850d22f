//! Customer population simulator.
//!
//! Each customer maximizes `rho (e_d - e_c)^2 - p e_c` over `e_c >= min_fraction * e_d`
//! once per interval; unmet demand is partly carried into the next interval.
//! Summing consumption over the population gives the aggregate series the
//! learners are trained on.

mod dataset;
mod population;
mod profile;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use dataset::{format_decimal, TimeSeriesDataset, DATASET_HEADER};
pub use population::{
    sample_population, sample_population_with, EucParams, Population, PopulationSpec,
};
pub use profile::{
    daily_shape, generate_profile, load_profile, parse_profile, seasonal_envelope, LoadProfile,
    ProfileSource,
};

use crate::par::{self, Execution};
use crate::{Error, Result};

/// Current energy demand of one customer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EucState {
    pub demand: f64,
}

/// Consumption that maximizes the customer's benefit minus cost.
///
/// The unconstrained maximizer of the concave quadratic is `demand + price / (2 rho)`;
/// the result is that point projected onto `[min_fraction * demand, inf)`.
pub fn optimal_consumption(demand: f64, price: f64, params: &EucParams) -> Result<f64> {
    params.validate()?;
    if !(demand >= 0.0) || !demand.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "demand must be non-negative, got {demand}"
        )));
    }
    if !(price >= 0.0) || !price.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "price must be non-negative and finite, got {price}"
        )));
    }
    Ok(consume(demand, price, params))
}

#[inline]
fn consume(demand: f64, price: f64, params: &EucParams) -> f64 {
    (demand + price / (2.0 * params.rho)).max(params.min_fraction * demand)
}

/// Next-interval demand: backlog of unmet demand plus new demand.
pub fn step_demand(demand: f64, consumption: f64, alpha: f64, new_demand: f64) -> Result<f64> {
    if !(demand >= 0.0 && consumption >= 0.0 && new_demand >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "demand ({demand}), consumption ({consumption}) and new demand ({new_demand}) must be non-negative"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "backlog rate must lie in [0, 1], got {alpha}"
        )));
    }
    if consumption > demand {
        return Err(Error::InvalidArgument(format!(
            "consumption {consumption} exceeds demand {demand}; unmet demand cannot be negative"
        )));
    }
    Ok(alpha * (demand - consumption) + new_demand)
}

/// I.i.d. uniform prices on `[low, high)`.
pub fn sample_prices(horizon: usize, low: f64, high: f64, rng_seed: u64) -> Result<Vec<f64>> {
    if !(low < high) || !low.is_finite() || !high.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "price range must satisfy low < high, got [{low}, {high}]"
        )));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument(
            "price horizon must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok((0..horizon).map(|_| rng.random_range(low..high)).collect())
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Standard deviation of the multiplicative new-demand noise (mean 1).
    pub noise_std: f64,
    pub intervals_per_day: usize,
    /// Redraw each customer's backlog rate from U[0, 1] every interval.
    pub resample_alpha: bool,
    pub exec: Execution,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            noise_std: 0.1,
            intervals_per_day: 24,
            resample_alpha: false,
            exec: Execution::Parallel,
        }
    }
}

/// One customer's trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EucTrace {
    pub demand: Vec<f64>,
    pub consumption: Vec<f64>,
}

/// Simulates the population and returns the aggregate dataset.
pub fn simulate(
    population: &Population,
    prices: &[f64],
    profile: &LoadProfile,
    noise_std: f64,
    rng_seed: u64,
) -> Result<TimeSeriesDataset> {
    let opts = SimOptions {
        noise_std,
        ..SimOptions::default()
    };
    simulate_with(population, prices, profile, &opts, rng_seed)
}

pub fn simulate_with(
    population: &Population,
    prices: &[f64],
    profile: &LoadProfile,
    opts: &SimOptions,
    rng_seed: u64,
) -> Result<TimeSeriesDataset> {
    let traces = simulate_traces(population, prices, profile, opts, rng_seed)?;
    let consumptions = aggregate(&traces, prices.len());
    TimeSeriesDataset::new(0, prices.to_vec(), consumptions, opts.intervals_per_day)
}

/// Sums per-customer consumption in population order.
pub fn aggregate(traces: &[EucTrace], horizon: usize) -> Vec<f64> {
    let mut total = vec![0.0; horizon];
    for tr in traces {
        for (acc, c) in total.iter_mut().zip(&tr.consumption) {
            *acc += c;
        }
    }
    total
}

/// Per-customer trajectories. Customer `k` draws from its own ChaCha stream
/// `(rng_seed, k)`, so results do not depend on scheduling.
pub fn simulate_traces(
    population: &Population,
    prices: &[f64],
    profile: &LoadProfile,
    opts: &SimOptions,
    rng_seed: u64,
) -> Result<Vec<EucTrace>> {
    if prices.len() != profile.len() {
        return Err(Error::Data(format!(
            "price series has {} intervals but load profile has {}",
            prices.len(),
            profile.len()
        )));
    }
    if let Some(t) = prices.iter().position(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::Data(format!(
            "price at t={t} is negative or non-finite"
        )));
    }
    if !(opts.noise_std >= 0.0) || !opts.noise_std.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise std must be non-negative, got {}",
            opts.noise_std
        )));
    }
    if opts.intervals_per_day == 0 {
        return Err(Error::InvalidArgument(
            "intervals per day must be positive".into(),
        ));
    }
    for e in &population.eucs {
        e.validate()?;
    }
    let noise = Normal::new(1.0, opts.noise_std).expect("validated std");
    Ok(par::map_range(opts.exec, population.len(), |k| {
        let params = population.eucs[k];
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(k as u64);
        run_euc(
            &params,
            prices,
            &profile.values,
            &noise,
            opts.resample_alpha,
            &mut rng,
        )
    }))
}

fn run_euc(
    params: &EucParams,
    prices: &[f64],
    profile: &[f64],
    noise: &Normal<f64>,
    resample_alpha: bool,
    rng: &mut ChaCha8Rng,
) -> EucTrace {
    let horizon = prices.len();
    let mut trace = EucTrace {
        demand: Vec::with_capacity(horizon),
        consumption: Vec::with_capacity(horizon),
    };
    let mut state = EucState { demand: 0.0 };
    let mut consumed = 0.0;
    let mut alpha = params.alpha;
    for t in 0..horizon {
        let new_demand = (params.peak_demand * profile[t] * noise.sample(rng)).max(0.0);
        state.demand = if t == 0 {
            new_demand
        } else {
            if resample_alpha {
                alpha = rng.random_range(0.0..=1.0);
            }
            // consumed <= demand holds by construction of `consume`
            alpha * (state.demand - consumed) + new_demand
        };
        consumed = consume(state.demand, prices[t], params);
        trace.demand.push(state.demand);
        trace.consumption.push(consumed);
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;

    fn objective(demand: f64, price: f64, p: &EucParams, c: f64) -> f64 {
        p.rho * (demand - c).powi(2) - price * c
    }

    /// Brute-force argmax of the benefit-minus-cost objective on a 1e-4 grid.
    fn grid_argmax(demand: f64, price: f64, p: &EucParams, lo: f64, hi: f64) -> f64 {
        let steps = ((hi - lo) / 1e-4).round() as usize;
        (0..=steps)
            .map(|i| lo + i as f64 * 1e-4)
            .filter(|c| *c >= p.min_fraction * demand - 1e-12)
            .max_by(|a, b| {
                objective(demand, price, p, *a).total_cmp(&objective(demand, price, p, *b))
            })
            .unwrap()
    }

    #[test]
    fn closed_form_matches_grid_examples() {
        let p = EucParams::new(1.0, -100.0, 0.5, 0.5).unwrap();
        // frozen from grid_argmax over [0.5, 2.0]
        assert!((grid_argmax(1.0, 30.0, &p, 0.5, 2.0) - 0.85).abs() < 1e-9);
        assert!((grid_argmax(1.0, 200.0, &p, 0.5, 2.0) - 0.5).abs() < 1e-9);
        assert!((optimal_consumption(1.0, 30.0, &p).unwrap() - 0.85).abs() < 1e-12);
        assert_eq!(optimal_consumption(1.0, 200.0, &p).unwrap(), 0.5);
        assert_eq!(optimal_consumption(1.0, 0.0, &p).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = EucParams::new(1.0, -100.0, 0.5, 0.5).unwrap();
        assert!(optimal_consumption(-1.0, 30.0, &p).is_err());
        assert!(optimal_consumption(1.0, -5.0, &p).is_err());
        let convex = EucParams { rho: 10.0, ..p };
        assert!(optimal_consumption(1.0, 30.0, &convex).is_err());
    }

    #[test]
    fn demand_step_examples() {
        assert!((step_demand(1.0, 0.85, 0.5, 0.9).unwrap() - 0.975).abs() < 1e-15);
        assert_eq!(step_demand(1.0, 1.0, 0.7, 0.4).unwrap(), 0.4);
        assert_eq!(step_demand(2.0, 1.0, 0.0, 0.3).unwrap(), 0.3);
        assert!(step_demand(1.0, 1.5, 0.5, 0.3).is_err());
        assert!(step_demand(1.0, 0.5, 1.5, 0.3).is_err());
    }

    #[test]
    fn prices_uniform_and_deterministic() {
        let a = sample_prices(8760, 20.0, 50.0, 5).unwrap();
        assert!(a.iter().all(|p| (20.0..=50.0).contains(p)));
        assert_eq!(a, sample_prices(8760, 20.0, 50.0, 5).unwrap());
        let big = sample_prices(100_000, 20.0, 50.0, 9).unwrap();
        let mean = big.iter().sum::<f64>() / big.len() as f64;
        assert!((34.8..=35.2).contains(&mean), "{mean}");
        assert!(sample_prices(10, 50.0, 20.0, 1).is_err());
        assert!(sample_prices(10, 20.0, 20.0, 1).is_err());
    }

    #[test]
    fn single_customer_follows_recursion() {
        let params = EucParams::new(1.2, -100.0 / 1.2, 0.6, 0.5).unwrap();
        let pop = Population {
            eucs: vec![params],
            seed: 0,
        };
        let prices = [30.0, 45.0, 20.0, 50.0, 25.0];
        let profile = LoadProfile::from_raw(vec![1.0; 5], ProfileSource::Synthetic).unwrap();
        let ds = simulate(&pop, &prices, &profile, 0.0, 4).unwrap();
        // hand-rolled: d0 = 1.2; c = max(0.5 d, d - p * 1.2 / 200); d' = 0.6 (d - c) + 1.2
        let mut d = 1.2_f64;
        for (t, p) in prices.iter().enumerate() {
            if t > 0 {
                d = 0.6 * (d - ds.consumptions[t - 1]) + 1.2;
            }
            let c = (d - p * 1.2 / 200.0).max(0.5 * d);
            assert!((ds.consumptions[t] - c).abs() < 1e-12, "t={t}");
        }
        assert_eq!(ds.hours, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn aggregate_equals_sum_of_traces() {
        let pop = sample_population(20, 3).unwrap();
        let prices = sample_prices(96, 20.0, 50.0, 1).unwrap();
        let profile = generate_profile(96, 24, 2).unwrap();
        let opts = SimOptions::default();
        let traces = simulate_traces(&pop, &prices, &profile, &opts, 9).unwrap();
        let ds = simulate_with(&pop, &prices, &profile, &opts, 9).unwrap();
        for t in 0..96 {
            let s: f64 = traces.iter().map(|tr| tr.consumption[t]).sum();
            assert!((s - ds.consumptions[t]).abs() <= 1e-9 * s);
            for (tr, e) in traces.iter().zip(&pop.eucs) {
                assert!(tr.consumption[t] >= e.min_fraction * tr.demand[t]);
                assert!(tr.consumption[t] <= tr.demand[t]);
                assert!(tr.demand[t] >= 0.0);
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let pop = sample_population(30, 3).unwrap();
        let prices = sample_prices(240, 20.0, 50.0, 1).unwrap();
        let profile = generate_profile(240, 24, 2).unwrap();
        let seq = SimOptions {
            exec: Execution::Sequential,
            ..SimOptions::default()
        };
        let a = simulate_with(&pop, &prices, &profile, &seq, 5).unwrap();
        let b = simulate_with(&pop, &prices, &profile, &SimOptions::default(), 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn resampled_alpha_changes_trajectory() {
        let pop = sample_population(10, 3).unwrap();
        let prices = sample_prices(48, 20.0, 50.0, 1).unwrap();
        let profile = generate_profile(48, 24, 2).unwrap();
        let fixed = simulate_with(&pop, &prices, &profile, &SimOptions::default(), 5).unwrap();
        let opts = SimOptions {
            resample_alpha: true,
            ..SimOptions::default()
        };
        let moving = simulate_with(&pop, &prices, &profile, &opts, 5).unwrap();
        assert_eq!(fixed.consumptions[0], moving.consumptions[0]);
        assert_ne!(fixed.consumptions, moving.consumptions);
    }

    #[test]
    fn length_mismatch_rejected() {
        let pop = sample_population(2, 3).unwrap();
        let profile = generate_profile(48, 24, 2).unwrap();
        assert!(matches!(
            simulate(&pop, &[30.0; 47], &profile, 0.1, 1),
            Err(Error::Data(_))
        ));
    }
}
