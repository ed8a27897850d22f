//! End-to-end stages behind the command-line front-end: simulate a dataset,
//! train one model, evaluate a saved model, and run the full benchmark grid.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::features::{build_direct_dataset, build_sequence_dataset};
use crate::metrics::{
    direct_table, evaluate_split, recurrent_table, violin_csv, EvalReport, ReportDocument, SplitTag,
};
use crate::nn::{
    self, linear_fit, load_model, model_to_json, save_model, train_fnn, Model, ModelKind,
    TrainReport,
};
use crate::par::{self, Execution};
use crate::sim::{
    generate_profile, load_profile, sample_population_with, sample_prices, simulate_with,
    SimOptions, TimeSeriesDataset,
};
use crate::{Error, Result};

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let res = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    res.map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Config from `path`, or the defaults when no file is given.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn stage<T>(name: impl Into<String>, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name.into(),
        source: Box::new(e),
    })
}

/// Samples the population, prices and profile from the configured seeds and
/// simulates the aggregate consumption.
pub fn simulate_dataset(cfg: &RunConfig, exec: Execution) -> Result<TimeSeriesDataset> {
    let s = &cfg.simulation;
    let population = sample_population_with(&s.population_spec(), s.customers, s.population_seed)?;
    let prices = sample_prices(s.horizon, s.price_low, s.price_high, s.price_seed)?;
    let profile = match &s.profile_path {
        Some(p) => load_profile(p)?,
        None => generate_profile(s.horizon, s.intervals_per_day, s.profile_seed)?,
    };
    if profile.len() != s.horizon {
        return Err(Error::Data(format!(
            "load profile has {} rows but simulation.horizon is {}",
            profile.len(),
            s.horizon
        )));
    }
    let opts = SimOptions {
        noise_std: s.noise_std,
        intervals_per_day: s.intervals_per_day,
        resample_alpha: s.resample_alpha,
        exec,
    };
    simulate_with(&population, &prices, &profile, &opts, s.noise_seed)
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path, exec: Execution) -> Result<TimeSeriesDataset> {
    let ts = simulate_dataset(cfg, exec)?;
    write_atomic(out, ts.to_csv_string().as_bytes())?;
    Ok(ts)
}

/// A trained model with its training-split score.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    /// Absent for the closed-form linear fit.
    pub report: Option<TrainReport>,
    pub train_eval: EvalReport,
}

/// Resolves the order for `kind`. Direct kinds need one; recurrent kinds
/// always take order-1 inputs.
pub fn resolve_order(kind: ModelKind, order: Option<usize>) -> Result<usize> {
    match (kind.is_recurrent(), order) {
        (false, Some(n)) => Ok(n),
        (false, None) => Err(Error::InvalidArgument(format!(
            "{kind} models need an order"
        ))),
        (true, None | Some(1)) => Ok(1),
        (true, Some(n)) => Err(Error::InvalidArgument(format!(
            "{kind} models take fixed order-1 inputs; order {n} is not valid for {kind}"
        ))),
    }
}

/// Trains `kind` on the first `features.train_len` intervals of `data`.
pub fn train_model(
    cfg: &RunConfig,
    data: &TimeSeriesDataset,
    kind: ModelKind,
    order: Option<usize>,
    exec: Execution,
) -> Result<TrainOutcome> {
    let order = resolve_order(kind, order)?;
    let train_len = cfg.features.train_len;
    if data.len() <= train_len {
        return Err(Error::Data(format!(
            "dataset has {} intervals; features.train_len is {train_len}",
            data.len()
        )));
    }
    if data.intervals_per_day != cfg.simulation.intervals_per_day {
        return Err(Error::Data(format!(
            "dataset has {} intervals per day but the config says {}",
            data.intervals_per_day, cfg.simulation.intervals_per_day
        )));
    }
    let train = data.slice(0..train_len);
    let state = cfg.state_config(order);
    let t = &cfg.training;
    let (model, report) = match kind {
        ModelKind::Linear => (
            Model::Linear(linear_fit(&build_direct_dataset(&train, &state)?)?),
            None,
        ),
        ModelKind::Fnn => {
            let opt = nn::TrainConfig {
                exec,
                ..t.fnn.optimizer.clone()
            };
            let (m, r) = train_fnn(&build_direct_dataset(&train, &state)?, &t.fnn.hidden, &opt)?;
            (Model::Fnn(m), Some(r))
        }
        ModelKind::Rnn | ModelKind::Lstm => {
            let rc = if kind == ModelKind::Rnn {
                &t.rnn
            } else {
                &t.lstm
            };
            let opt = nn::TrainConfig {
                exec,
                ..rc.optimizer.clone()
            };
            let set = build_sequence_dataset(&train, cfg.features.window_length, &state)?;
            let (mut m, r) = nn::train_recurrent(&set, kind, rc.arch(), &opt)?;
            match &mut m {
                Model::Rnn(x) => x.warmup = cfg.features.warmup,
                Model::Lstm(x) => x.warmup = cfg.features.warmup,
                _ => unreachable!(),
            }
            (m, Some(r))
        }
    };
    let train_eval = evaluate_split(&model, data, train_len, SplitTag::Train)?;
    Ok(TrainOutcome {
        model,
        report,
        train_eval,
    })
}

pub fn cmd_train(
    cfg: &RunConfig,
    data_path: &Path,
    kind: ModelKind,
    order: Option<usize>,
    out: &Path,
    exec: Execution,
) -> Result<TrainOutcome> {
    let data = TimeSeriesDataset::load(data_path, cfg.simulation.intervals_per_day)?;
    let outcome = train_model(cfg, &data, kind, order, exec)?;
    save_model(&outcome.model, out)?;
    Ok(outcome)
}

/// Evaluates a saved model on one split, or on both when `split` is `None`,
/// and writes the report document. `expect_order`, when given, must match
/// the model's order.
pub fn cmd_eval(
    cfg: &RunConfig,
    model_path: &Path,
    data_path: &Path,
    split: Option<SplitTag>,
    expect_order: Option<usize>,
    out: &Path,
) -> Result<Vec<EvalReport>> {
    let model = load_model(model_path)?;
    if let Some(n) = expect_order {
        if n != model.order() {
            return Err(Error::LayoutMismatch(format!(
                "model was trained with order {} but order {n} was requested",
                model.order()
            )));
        }
    }
    let per_day = model.state().intervals_per_day;
    if per_day != cfg.simulation.intervals_per_day {
        return Err(Error::LayoutMismatch(format!(
            "model expects {per_day} intervals per day but the config says {}",
            cfg.simulation.intervals_per_day
        )));
    }
    let data = TimeSeriesDataset::load(data_path, per_day)?;
    let splits = match split {
        Some(s) => vec![s],
        None => vec![SplitTag::Train, SplitTag::Test],
    };
    let reports = splits
        .into_iter()
        .map(|s| evaluate_split(&model, &data, cfg.features.train_len, s))
        .collect::<Result<Vec<_>>>()?;
    let doc = ReportDocument::new(
        model.warmup(),
        reports.iter().map(EvalReport::record).collect(),
    );
    write_atomic(out, doc.to_json().as_bytes())?;
    Ok(reports)
}

/// One trained benchmark model with both split scores.
#[derive(Debug, Clone)]
pub struct BenchmarkEntry {
    pub model: Model,
    pub train: EvalReport,
    pub test: EvalReport,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub dataset: TimeSeriesDataset,
    pub entries: Vec<BenchmarkEntry>,
    pub document: ReportDocument,
    pub tables: Vec<String>,
    pub violin: String,
    pub files: Vec<PathBuf>,
}

impl BenchmarkOutcome {
    pub fn entry(&self, kind: ModelKind, order: Option<usize>) -> Option<&BenchmarkEntry> {
        self.entries
            .iter()
            .find(|e| e.model.kind() == kind && order.is_none_or(|n| e.model.order() == n))
    }
}

pub const REPORT_FILE: &str = "report.json";
pub const VIOLIN_FILE: &str = "violin.csv";
pub const DATASET_FILE: &str = "dataset.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const TABLE_FILES: [&str; 3] = ["table_linear.txt", "table_fnn.txt", "table_recurrent.txt"];

/// Benchmark grid: every direct kind at every configured order, each
/// recurrent kind once.
pub fn benchmark_jobs(cfg: &RunConfig) -> Vec<(ModelKind, Option<usize>)> {
    let mut jobs = Vec::new();
    for &kind in &cfg.benchmark.kinds {
        if kind.is_recurrent() {
            jobs.push((kind, None));
        } else {
            jobs.extend(cfg.benchmark.orders.iter().map(|&n| (kind, Some(n))));
        }
    }
    jobs
}

/// Runs the benchmark in memory: simulate, train and score every model.
/// Models are trained concurrently, one per worker.
pub fn run_benchmark(cfg: &RunConfig, exec: Execution) -> Result<BenchmarkOutcome> {
    cfg.validate()?;
    let dataset = stage("simulate", simulate_dataset(cfg, exec))?;
    let jobs = benchmark_jobs(cfg);
    let results = par::map(exec, &jobs, |&(kind, order)| {
        let name = match order {
            Some(n) => format!("train {kind} order {n}"),
            None => format!("train {kind}"),
        };
        stage(name.clone(), train_model(cfg, &dataset, kind, order, exec)).and_then(|o| {
            let test = stage(
                name.replace("train", "evaluate"),
                evaluate_split(&o.model, &dataset, cfg.features.train_len, SplitTag::Test),
            )?;
            Ok(BenchmarkEntry {
                model: o.model,
                train: o.train_eval,
                test,
            })
        })
    });
    let entries = results.into_iter().collect::<Result<Vec<_>>>()?;

    let records = entries
        .iter()
        .flat_map(|e| [e.train.record(), e.test.record()])
        .collect();
    let document = ReportDocument::new(cfg.features.warmup, records);
    let orders = &cfg.benchmark.orders;
    let tables = vec![
        direct_table(
            &document,
            ModelKind::Linear,
            orders,
            "Linear model, one-step error by order n",
        ),
        direct_table(
            &document,
            ModelKind::Fnn,
            orders,
            "Feedforward network, one-step error by order n",
        ),
        recurrent_table(&document, "Recurrent networks, one-step error"),
    ];
    let violin_set: Vec<&EvalReport> = entries
        .iter()
        .filter(|e| e.model.kind().is_recurrent() || e.model.order() == cfg.benchmark.violin_order)
        .map(|e| &e.test)
        .collect();
    let violin = violin_csv(&violin_set);
    Ok(BenchmarkOutcome {
        dataset,
        entries,
        document,
        tables,
        violin,
        files: Vec::new(),
    })
}

/// Runs the benchmark and writes its outputs to `out_dir`. If any stage
/// fails, files written by this run are removed.
pub fn cmd_benchmark(cfg: &RunConfig, out_dir: &Path, exec: Execution) -> Result<BenchmarkOutcome> {
    let mut outcome = run_benchmark(cfg, exec)?;
    let mut written = Vec::new();
    match write_benchmark(cfg, out_dir, &outcome, &mut written) {
        Ok(()) => {
            outcome.files = written;
            Ok(outcome)
        }
        Err(e) => {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            Err(e)
        }
    }
}

fn write_benchmark(
    cfg: &RunConfig,
    dir: &Path,
    outcome: &BenchmarkOutcome,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        stage(format!("write {name}"), write_atomic(&path, bytes))?;
        written.push(path);
        Ok(())
    };
    stage(
        "create output directory",
        std::fs::create_dir_all(dir.join("models")).map_err(|e| Error::io(dir, e)),
    )?;
    put(CONFIG_FILE, cfg.to_toml().as_bytes())?;
    put(DATASET_FILE, outcome.dataset.to_csv_string().as_bytes())?;
    for e in &outcome.entries {
        put(
            &format!("models/{}.json", e.test.name),
            model_to_json(&e.model).as_bytes(),
        )?;
    }
    put(REPORT_FILE, outcome.document.to_json().as_bytes())?;
    for (name, table) in TABLE_FILES.iter().zip(&outcome.tables) {
        put(name, table.as_bytes())?;
    }
    put(VIOLIN_FILE, outcome.violin.as_bytes())
}
