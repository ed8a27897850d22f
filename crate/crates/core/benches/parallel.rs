//! Sequential vs parallel execution of the data-parallel stages.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dr_core::config::RunConfig;
use dr_core::features::{build_direct_dataset, build_sequence_dataset, StateConfig, TimeEncoding};
use dr_core::nn::{train_fnn, train_recurrent, ModelKind, RecurrentArch, TrainConfig};
use dr_core::par::Execution;
use dr_core::pipeline::{run_benchmark, simulate_dataset};
use dr_core::sim::{
    generate_profile, sample_population, sample_prices, simulate_traces, SimOptions,
};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn simulation(c: &mut Criterion) {
    let horizon = 24 * 365;
    let population = sample_population(100, 1).unwrap();
    let prices = sample_prices(horizon, 20.0, 50.0, 2).unwrap();
    let profile = generate_profile(horizon, 24, 3).unwrap();
    let mut g = c.benchmark_group("simulate_100_customers_1y");
    for (name, exec) in MODES {
        let opts = SimOptions {
            exec,
            ..SimOptions::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| simulate_traces(&population, &prices, &profile, &opts, 4).unwrap())
        });
    }
    g.finish();
}

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.simulation.horizon = 24 * 60;
    cfg.features.train_len = 24 * 48;
    cfg
}

fn training(c: &mut Criterion) {
    let cfg = small_config();
    let data = simulate_dataset(&cfg, Execution::Parallel).unwrap();
    let train = data.slice(0..cfg.features.train_len);
    let direct =
        build_direct_dataset(&train, &StateConfig::new(3, TimeEncoding::Scalar, 24)).unwrap();
    let seq =
        build_sequence_dataset(&train, 48, &StateConfig::new(1, TimeEncoding::Scalar, 24)).unwrap();

    let mut g = c.benchmark_group("train_200_steps");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opt = TrainConfig {
            steps: 200,
            exec,
            ..TrainConfig::default()
        };
        g.bench_function(BenchmarkId::new("fnn_32x32", name), |b| {
            b.iter(|| train_fnn(&direct, &[32, 32], &opt).unwrap())
        });
        g.bench_function(BenchmarkId::new("lstm_1x32", name), |b| {
            b.iter(|| {
                train_recurrent(&seq, ModelKind::Lstm, RecurrentArch::default(), &opt).unwrap()
            })
        });
    }
    g.finish();
}

fn grid(c: &mut Criterion) {
    let mut cfg = small_config();
    cfg.training.fnn.optimizer.steps = 100;
    cfg.training.rnn.optimizer.steps = 20;
    cfg.training.lstm.optimizer.steps = 20;
    let mut g = c.benchmark_group("benchmark_grid_14_models");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_benchmark(&cfg, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, simulation, training, grid);
criterion_main!(benches);
