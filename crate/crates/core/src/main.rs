use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nowcast::harness::{
    cmd_evaluate, cmd_grid, cmd_inspect, cmd_prepare, cmd_train, cmd_verify, exit, ExperimentConfig, HarnessError,
    ModelMode, PrepareConfig, SourceSpec, TrainOptions, TEST_FILE, TRAIN_FILE,
};
use nowcast::models::{Architecture, ModelError};
use nowcast::pipeline::{Schema, SplitSpec, WindowConfig};
use nowcast::training::TrainConfig;

/// Thread count override for the worker pool.
const THREADS_ENV: &str = "NOWCAST_THREADS";

#[derive(Parser)]
#[command(name = "nowcast", version, about = "Hourly rain nowcasting with BiLSTM and 1D-CNN classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, resample, filter, window, split and normalize a raw station file.
    Prepare {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value_t = 0.8)]
        split: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on a prepared dataset directory.
    Train {
        /// Directory holding train.nwc and test.nwc.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a checkpoint on a dataset container.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Run every (model, lookback, horizon) cell on one raw source.
    Grid {
        #[command(flatten)]
        source: SourceArgs,
        /// Comma-separated lookbacks.
        #[arg(long, value_delimiter = ',', default_values_t = [24, 12])]
        lookback: Vec<usize>,
        /// Comma-separated horizons.
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2])]
        horizon: Vec<usize>,
        /// Comma-separated models.
        #[arg(long, value_delimiter = ',', default_values = ["bilstm", "cnn"])]
        model: Vec<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::Canonical)]
        mode: ModeArg,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = 0.8)]
        split: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a model's parity build against its published parameter table.
    Verify {
        /// bilstm_net or cnn_net
        model: String,
    },
    /// Print a checkpoint's layer table, and dataset stats if given.
    Inspect {
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaArg {
    Indian,
    Kaggle,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Canonical,
    Parity,
}

impl From<ModeArg> for ModelMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Canonical => ModelMode::Canonical,
            ModeArg::Parity => ModelMode::Parity,
        }
    }
}

#[derive(Args)]
struct SourceArgs {
    /// Raw CSV file, or the directory of per-parameter files for kaggle.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = SchemaArg::Indian)]
    schema: SchemaArg,
    #[arg(long)]
    city: Option<String>,
    /// Comma-separated months, or "all".
    #[arg(long, default_value = "6,7,8,9")]
    months: String,
}

impl SourceArgs {
    fn spec(&self) -> SourceSpec {
        SourceSpec {
            path: self.input.clone(),
            schema: match self.schema {
                SchemaArg::Indian => Schema::Indian,
                SchemaArg::Kaggle => Schema::KaggleCity,
            },
            city: self.city.clone(),
        }
    }

    fn months(&self) -> Result<Option<BTreeSet<u32>>, HarnessError> {
        parse_months(&self.months)
    }
}

fn parse_months(s: &str) -> Result<Option<BTreeSet<u32>>, HarnessError> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    let set = s
        .split(',')
        .map(|m| match m.trim().parse::<u32>() {
            Ok(v) if (1..=12).contains(&v) => Ok(v),
            _ => Err(HarnessError::Usage(format!("bad month {m:?}"))),
        })
        .collect::<Result<BTreeSet<u32>, _>>()?;
    Ok((set.len() < 12).then_some(set))
}

#[derive(Args)]
struct WindowArgs {
    #[arg(long, default_value_t = 24)]
    lookback: usize,
    #[arg(long, default_value_t = 1)]
    horizon: usize,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "bilstm")]
    model: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Canonical)]
    mode: ModeArg,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Early-stopping patience in epochs.
    #[arg(long)]
    patience: Option<usize>,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
            patience: self.patience,
            ..TrainConfig::default()
        }
    }
}

fn architecture(name: &str) -> Result<Architecture, HarnessError> {
    name.parse::<Architecture>().map_err(|e| HarnessError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Prepare { source, window, split, out } => {
            let cfg = PrepareConfig {
                source: source.spec(),
                months: source.months()?,
                window: WindowConfig::new(window.lookback, window.horizon),
                split: SplitSpec { train_fraction: split },
                out,
            };
            let prepared = cmd_prepare(&cfg)?;
            print!("{}", prepared.report.render());
        }
        Command::Train { data, model, train, out } => {
            let opts = TrainOptions {
                train: data.join(TRAIN_FILE),
                test: data.join(TEST_FILE),
                model: architecture(&model.model)?,
                mode: model.mode.into(),
                config: train.config(),
                out,
            };
            let outcome = cmd_train(&opts)?;
            let t = &outcome.log.test;
            println!(
                "{}: {} epochs, test accuracy {:.4}, precision {:.4}, recall {:.4}, f1 {:.4}",
                outcome.model.name,
                outcome.log.epochs.len(),
                t.accuracy,
                t.precision,
                t.recall,
                t.f1
            );
        }
        Command::Evaluate { checkpoint, dataset, threshold } => {
            let (_, text) = cmd_evaluate(&checkpoint, &dataset, threshold)?;
            print!("{text}");
        }
        Command::Grid { source, lookback, horizon, model, mode, train, split, out } => {
            let cfg = ExperimentConfig {
                source: source.spec(),
                months: source.months()?,
                lookbacks: lookback,
                horizons: horizon,
                models: model.iter().map(|m| architecture(m)).collect::<Result<_, _>>()?,
                mode: mode.into(),
                train: train.config(),
                split: SplitSpec { train_fraction: split },
                out,
            };
            let result = cmd_grid(&cfg)?;
            print!("{}", result.render_table());
        }
        Command::Verify { model } => match cmd_verify(architecture(&model)?) {
            Ok((_, text)) => print!("{text}"),
            Err(HarnessError::Model(ModelError::UnexpectedMismatch { layer, expected, computed, report })) => {
                print!("{}", report.render());
                return Err(HarnessError::Model(ModelError::UnexpectedMismatch { layer, expected, computed, report }));
            }
            Err(e) => return Err(e),
        },
        Command::Inspect { checkpoint, dataset } => {
            print!("{}", cmd_inspect(&checkpoint, dataset.as_deref())?);
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), HarnessError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| HarnessError::Usage(format!("{THREADS_ENV}={value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| HarnessError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = configure_threads().and_then(|()| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
