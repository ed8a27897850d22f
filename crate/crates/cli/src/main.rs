//! `drmodel`: simulate demand-response data, train and evaluate models, and
//! run the full benchmark grid.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use dr_core::metrics::SplitTag;
use dr_core::nn::ModelKind;
use dr_core::par::Execution;
use dr_core::pipeline;
use dr_core::Error;

#[derive(Parser)]
#[command(
    name = "drmodel",
    version,
    about = "Dynamical demand-response models for real-time pricing"
)]
struct Cli {
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the customer population and write the dataset CSV.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on the training split of a dataset.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        model: Kind,
        /// Lag order n (direct models; recurrent models take order 1).
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved model on the train and/or test split.
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        split: Option<Split>,
        /// Expected lag order; a mismatch with the model is an error.
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and score every model in the benchmark grid.
    Benchmark {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (defaults to benchmark.out_dir from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Linear,
    Fnn,
    Rnn,
    Lstm,
}

impl From<Kind> for ModelKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Linear => ModelKind::Linear,
            Kind::Fnn => ModelKind::Fnn,
            Kind::Rnn => ModelKind::Rnn,
            Kind::Lstm => ModelKind::Lstm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Train,
    Test,
}

impl From<Split> for SplitTag {
    fn from(s: Split) -> Self {
        match s {
            Split::Train => SplitTag::Train,
            Split::Test => SplitTag::Test,
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let started = Instant::now();
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = pipeline::load_config(config.as_deref())?;
            let ts = pipeline::cmd_simulate(&cfg, &out, exec)?;
            println!("horizon           {}", ts.len());
            println!("mean price        {:.4} $/MWh", ts.mean_price());
            println!("mean consumption  {:.4} MWh", ts.mean_consumption());
            println!("wrote {}", out.display());
        }
        Command::Train {
            config,
            data,
            model,
            order,
            out,
        } => {
            let cfg = pipeline::load_config(config.as_deref())?;
            let o = pipeline::cmd_train(&cfg, &data, model.into(), order, &out, exec)?;
            println!(
                "model             {} ({} parameters)",
                o.model.architecture(),
                o.model.param_count()
            );
            match &o.report {
                Some(r) => println!(
                    "final train loss  {:.6} (initial {:.6})",
                    r.final_loss, r.initial_loss
                ),
                None => println!("final train loss  closed-form least squares"),
            }
            println!("train MAPE        {:.4} %", o.train_eval.mape_pct);
            println!("wall time         {:.2} s", started.elapsed().as_secs_f64());
            println!("wrote {}", out.display());
        }
        Command::Eval {
            config,
            model,
            data,
            split,
            order,
            out,
        } => {
            let cfg = pipeline::load_config(config.as_deref())?;
            let reports =
                pipeline::cmd_eval(&cfg, &model, &data, split.map(Into::into), order, &out)?;
            for r in &reports {
                println!(
                    "{:<12} {:<5}  MAPE {:>8.4} %  SDAPE {:>8.4} %",
                    r.name,
                    r.split.as_str(),
                    r.mape_pct,
                    r.sdape_pct
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Benchmark { config, out } => {
            let cfg = pipeline::load_config(config.as_deref())?;
            let dir = out.unwrap_or_else(|| cfg.benchmark.out_dir.clone());
            let o = pipeline::cmd_benchmark(&cfg, &dir, exec)?;
            for t in &o.tables {
                println!("{t}");
            }
            println!(
                "{} models trained in {:.1} s",
                o.entries.len(),
                started.elapsed().as_secs_f64()
            );
            println!("wrote {} files to {}", o.files.len(), dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
