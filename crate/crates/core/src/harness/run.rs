use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{read_file, write_atomic, HarnessError, Result, CHECKPOINT_FILE, TRAIN_LOG_FILE};
use crate::models::{build_model, Architecture, BuildMode, ModelBlueprint};
use crate::nn::{decode_model, encode_model, Model};
use crate::pipeline::{decode_dataset, holdout_tail, WindowConfig, WindowedDataset};
use crate::training::{evaluate, fit, Metrics, TrainConfig, TrainLog, DEFAULT_THRESHOLD};

/// Share of the training rows, taken from the end, held out for the
/// per-epoch validation curve.
pub const VALIDATION_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelMode {
    Canonical,
    Parity,
}

impl FromStr for ModelMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(ModelMode::Canonical),
            "parity" | "published" => Ok(ModelMode::Parity),
            _ => Err(HarnessError::Usage(format!("unknown mode {s:?} (expected canonical or parity)"))),
        }
    }
}

/// Blueprint sized for windows of `window`. The parity stacks take the
/// flat row as input, whatever its width.
pub fn build_for(arch: Architecture, mode: ModelMode, window: WindowConfig) -> Result<ModelBlueprint> {
    let build = match mode {
        ModelMode::Canonical => BuildMode::Canonical { lookback: window.lookback, features: window.features },
        ModelMode::Parity => BuildMode::Parity { input_width: window.width() },
    };
    Ok(build_model(arch, build)?)
}

pub(crate) fn load_dataset(path: &Path) -> Result<WindowedDataset> {
    decode_dataset(&read_file(path)?).map_err(|e| HarnessError::from(e).context(path.display().to_string()))
}

pub(crate) fn load_model(path: &Path) -> Result<Model> {
    decode_model(&read_file(path)?).map_err(|e| HarnessError::from(e).context(path.display().to_string()))
}

pub(crate) fn render_metrics(m: &Metrics) -> String {
    let mut s = String::new();
    writeln!(s, "accuracy: {:.6}", m.accuracy).unwrap();
    writeln!(s, "precision: {:.6}", m.precision).unwrap();
    writeln!(s, "recall: {:.6}", m.recall).unwrap();
    writeln!(s, "f1: {:.6}", m.f1).unwrap();
    writeln!(s, "loss: {:.6}", m.loss).unwrap();
    writeln!(
        s,
        "confusion: tp {} fp {} tn {} fn {}",
        m.true_positives, m.false_positives, m.true_negatives, m.false_negatives
    )
    .unwrap();
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    pub train: PathBuf,
    pub test: PathBuf,
    pub model: Architecture,
    pub mode: ModelMode,
    pub config: TrainConfig,
    pub out: PathBuf,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub log: TrainLog,
}

/// Fits on the training container minus its validation tail and writes
/// `model.nwm`, `train_log.csv`, `train_timing.csv` and `metrics.txt`.
pub fn cmd_train(opts: &TrainOptions) -> Result<TrainOutcome> {
    let train = load_dataset(&opts.train)?;
    let test = load_dataset(&opts.test)?;
    if train.config != test.config {
        return Err(HarnessError::Usage("train and test containers have different window shapes".into()));
    }
    let (fit_rows, validation) = holdout_tail(&train, VALIDATION_FRACTION)?;
    let mut model = build_for(opts.model, opts.mode, train.config)?.instantiate(opts.config.seed)?;
    let log = fit(&mut model, &fit_rows, &validation, &test, &opts.config)?;
    write_atomic(&opts.out.join(CHECKPOINT_FILE), &encode_model(&model))?;
    write_atomic(&opts.out.join(TRAIN_LOG_FILE), log.to_csv().as_bytes())?;
    write_atomic(&opts.out.join("train_timing.csv"), log.timing_csv().as_bytes())?;
    let mut summary = format!(
        "model: {} ({} parameters)\nepochs run: {}{}\n",
        model.name,
        model.param_count(),
        log.epochs.len(),
        if log.stopped_early { " (early stop)" } else { "" }
    );
    summary.push_str(&render_metrics(&log.test));
    write_atomic(&opts.out.join("metrics.txt"), summary.as_bytes())?;
    Ok(TrainOutcome { model, log })
}

pub fn cmd_evaluate(checkpoint: &Path, dataset: &Path, threshold: Option<f64>) -> Result<(Metrics, String)> {
    let model = load_model(checkpoint)?;
    let ds = load_dataset(dataset)?;
    let m = evaluate(&model, &ds, threshold.unwrap_or(DEFAULT_THRESHOLD))?;
    let text = format!("rows: {}\n{}", ds.len(), render_metrics(&m));
    Ok((m, text))
}
