use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nem::em::TrainMode;
use nem::encoder::Selector;
use nem::experiment::{self, ExperimentConfig};

/// Noisy-label EM for relation classifiers.
///
/// Every subcommand except `trace` reads a JSON experiment config; any
/// trailing `--key value` pairs override dotted config keys, e.g.
/// `--train.delta 200 --corpus.n_bags 500`.
#[derive(Parser)]
#[command(name = "nem", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the train/test corpus and its statistics.
    Generate(Common),
    /// Train a model and write its checkpoint and trace.
    Train {
        #[arg(long, default_value = "nem")]
        mode: TrainMode,
        #[arg(long)]
        selector: Option<Selector>,
        /// Dataset to train on instead of the generated training split.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Score a dataset with a checkpoint.
    Predict {
        #[arg(long)]
        selector: Option<Selector>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint and write the report files.
    Eval {
        #[arg(long)]
        selector: Option<Selector>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Print a training trace.
    Trace { path: PathBuf },
    /// Train both modes over a list of flip-noise levels.
    Sweep {
        /// Comma-separated noise levels, e.g. 0.02,0.04,0.1
        #[arg(long, value_delimiter = ',')]
        pf_list: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> nem::Result<ExperimentConfig> {
        ExperimentConfig::load(&self.config, &experiment::parse_overrides(&self.overrides)?)
    }
}

fn run(cli: Cli) -> nem::Result<()> {
    match cli.cmd {
        Cmd::Generate(c) => {
            let cfg = c.load()?;
            let s = experiment::cmd_generate(&cfg)?;
            println!(
                "wrote {} train and {} test bags to {}",
                s.train.bags,
                s.test.bags,
                cfg.paths.data_dir.display()
            );
        }
        Cmd::Train { mode, selector, dataset, common } => {
            let cfg = experiment::with_selector(&common.load()?, selector);
            let out = experiment::cmd_train(&cfg, mode, dataset.as_deref())?;
            if let Some(t) = out.trace.last() {
                println!(
                    "{} iterations; lower_bound {:.6}; train_loss {:.6}",
                    out.trace.len(),
                    t.lower_bound,
                    t.train_loss
                );
            }
        }
        Cmd::Predict { selector, dataset, common } => {
            let cfg = experiment::with_selector(&common.load()?, selector);
            let recs = experiment::cmd_predict(&cfg, dataset.as_deref())?;
            println!("scored {} bags into {}", recs.len(), cfg.paths.predictions.display());
        }
        Cmd::Eval { selector, dataset, common } => {
            let cfg = experiment::with_selector(&common.load()?, selector);
            let r = experiment::cmd_eval(&cfg, dataset.as_deref())?;
            println!(
                "P {:.2}  R {:.2}  F1 {:.2}",
                r.metrics.precision, r.metrics.recall, r.metrics.f1
            );
        }
        Cmd::Trace { path } => print!("{}", experiment::cmd_trace(&path)?),
        Cmd::Sweep { pf_list, common } => {
            let mut cfg = common.load()?;
            if let Some(p) = pf_list {
                cfg.sweep.pf_list = p;
                cfg.validate()?;
            }
            let r = experiment::cmd_sweep(&cfg, |run| {
                eprintln!("pf {} {} run {}: F1 {:.2}", run.pf, run.mode, run.run, run.metrics.f1)
            })?;
            print!("{}", r.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
