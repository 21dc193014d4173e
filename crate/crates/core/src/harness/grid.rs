use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use super::prepare::{load_series, prepare_series, SourceSpec};
use super::run::{build_for, ModelMode, VALIDATION_FRACTION};
use super::{write_atomic, HarnessError, Result, VERSION};
use crate::models::Architecture;
use crate::pipeline::{holdout_tail, SplitSpec, WindowConfig};
use crate::training::{fit, mix_seed, Metrics, TrainConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub source: SourceSpec,
    /// `None` keeps every month.
    pub months: Option<BTreeSet<u32>>,
    pub lookbacks: Vec<usize>,
    pub horizons: Vec<usize>,
    pub models: Vec<Architecture>,
    pub mode: ModelMode,
    /// `train.seed` is the base seed of the grid.
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lookbacks.is_empty() || self.horizons.is_empty() || self.models.is_empty() {
            return Err(HarnessError::Usage("grid needs at least one lookback, horizon and model".into()));
        }
        self.train.validate()?;
        Ok(())
    }
}

/// Seed of one grid cell: the base seed mixed with the model index,
/// lookback and horizon.
pub fn cell_seed(base: u64, model: Architecture, lookback: usize, horizon: usize) -> u64 {
    let index = Architecture::ALL.iter().position(|&a| a == model).expect("listed") as u64;
    mix_seed(mix_seed(mix_seed(base, index), lookback as u64), horizon as u64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub test: Metrics,
    pub epochs_run: usize,
    pub wall_clock_secs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub model: Architecture,
    pub lookback: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Failure message when the cell could not run.
    pub outcome: std::result::Result<CellResult, String>,
}

impl GridCell {
    pub fn accuracy(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|c| c.test.accuracy)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub dataset: String,
    pub seed: u64,
    pub version: &'static str,
    pub mode: ModelMode,
    pub models: Vec<Architecture>,
    /// Column order, `(lookback, horizon)`.
    pub columns: Vec<(usize, usize)>,
    pub cells: Vec<GridCell>,
}

impl GridResult {
    pub fn cell(&self, model: Architecture, lookback: usize, horizon: usize) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.model == model && c.lookback == lookback && c.horizon == horizon)
    }

    /// Columns where the LSTM net's accuracy is at least the CNN's, out of
    /// the columns where both ran.
    pub fn lstm_leads(&self) -> (usize, usize) {
        let mut wins = 0;
        let mut compared = 0;
        for &(l, h) in &self.columns {
            let acc = |m| self.cell(m, l, h).and_then(GridCell::accuracy);
            if let (Some(a), Some(b)) = (acc(Architecture::BiLstmNet), acc(Architecture::CnnNet)) {
                compared += 1;
                wins += usize::from(a >= b);
            }
        }
        (wins, compared)
    }

    /// Models as rows, `(L, h)` pairs as columns, tab-separated.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let mode = match self.mode {
            ModelMode::Canonical => "canonical",
            ModelMode::Parity => "parity",
        };
        writeln!(s, "# nowcast {}  seed {}  mode {}", self.version, self.seed, mode).unwrap();
        write!(s, "{}", self.dataset).unwrap();
        for (l, h) in &self.columns {
            write!(s, "\tInput hours={l}, output hours={h}").unwrap();
        }
        s.push('\n');
        for &m in &self.models {
            write!(s, "Accuracy on {}", m.short_name()).unwrap();
            for &(l, h) in &self.columns {
                match self.cell(m, l, h).map(|c| &c.outcome) {
                    Some(Ok(c)) => write!(s, "\t{:.2}%", 100.0 * c.test.accuracy).unwrap(),
                    _ => s.push_str("\tfailed"),
                }
            }
            s.push('\n');
        }
        for c in &self.cells {
            if let Err(e) = &c.outcome {
                writeln!(s, "# {} L={} h={}: {e}", c.model, c.lookback, c.horizon).unwrap();
            }
        }
        s
    }

    pub fn render_csv(&self) -> String {
        let mut s = String::from("model,lookback,horizon,seed,status,accuracy,precision,recall,f1,tp,fp,tn,fn,test_loss,epochs\n");
        for c in &self.cells {
            match &c.outcome {
                Ok(r) => {
                    let m = &r.test;
                    writeln!(
                        s,
                        "{},{},{},{},ok,{},{},{},{},{},{},{},{},{},{}",
                        c.model,
                        c.lookback,
                        c.horizon,
                        c.seed,
                        m.accuracy,
                        m.precision,
                        m.recall,
                        m.f1,
                        m.true_positives,
                        m.false_positives,
                        m.true_negatives,
                        m.false_negatives,
                        m.loss,
                        r.epochs_run
                    )
                    .unwrap();
                }
                Err(e) => {
                    let msg = e.replace([',', '\n'], " ");
                    writeln!(s, "{},{},{},{},failed: {msg},,,,,,,,,,", c.model, c.lookback, c.horizon, c.seed).unwrap();
                }
            }
        }
        s
    }

    pub fn render_timing(&self) -> String {
        let mut s = String::from("model,lookback,horizon,wall_clock_secs\n");
        for c in &self.cells {
            if let Ok(r) = &c.outcome {
                writeln!(s, "{},{},{},{:.3}", c.model, c.lookback, c.horizon, r.wall_clock_secs).unwrap();
            }
        }
        s
    }
}

fn curve_name(model: Architecture, lookback: usize, horizon: usize) -> String {
    format!("curves/{}_L{lookback}_h{horizon}.csv", model)
}

/// Runs every `(model, L, h)` cell, writing `grid.txt`, `grid.csv`,
/// `grid_timing.csv`, one curve file per cell, and one preparation report
/// per `(L, h)`. Failed cells are recorded and the grid carries on.
pub fn cmd_grid(cfg: &ExperimentConfig) -> Result<GridResult> {
    cfg.validate()?;
    let parsed = load_series(&cfg.source)?;
    let mut columns = Vec::new();
    for &l in &cfg.lookbacks {
        for &h in &cfg.horizons {
            columns.push((l, h));
        }
    }
    let mut cells = Vec::new();
    for &(l, h) in &columns {
        let prepared = prepare_series(&parsed, cfg.months.as_ref(), WindowConfig::new(l, h), cfg.split)
            .and_then(|p| {
                let (fit_rows, val) = holdout_tail(&p.train, VALIDATION_FRACTION)?;
                Ok((p, fit_rows, val))
            });
        let prepared = match prepared {
            Ok(p) => {
                write_atomic(&cfg.out.join(format!("prepare_L{l}_h{h}.txt")), p.0.report.render().as_bytes())?;
                Ok(p)
            }
            Err(e) => Err(e.to_string()),
        };
        for &m in &cfg.models {
            let seed = cell_seed(cfg.train.seed, m, l, h);
            let outcome = match &prepared {
                Err(e) => Err(e.clone()),
                Ok((p, fit_rows, val)) => {
                    let started = Instant::now();
                    let train_cfg = TrainConfig { seed, ..cfg.train.clone() };
                    let run = build_for(m, cfg.mode, p.train.config)
                        .and_then(|bp| Ok(bp.instantiate(seed)?))
                        .and_then(|mut model| Ok(fit(&mut model, fit_rows, val, &p.test, &train_cfg)?));
                    match run {
                        Ok(log) => {
                            write_atomic(&cfg.out.join(curve_name(m, l, h)), log.to_csv().as_bytes())?;
                            Ok(CellResult {
                                test: log.test,
                                epochs_run: log.epochs.len(),
                                wall_clock_secs: started.elapsed().as_secs_f64(),
                            })
                        }
                        Err(e) => Err(e.to_string()),
                    }
                }
            };
            cells.push(GridCell { model: m, lookback: l, horizon: h, seed, outcome });
        }
    }
    let result = GridResult {
        dataset: cfg.source.label(),
        seed: cfg.train.seed,
        version: VERSION,
        mode: cfg.mode,
        models: cfg.models.clone(),
        columns,
        cells,
    };
    write_atomic(&cfg.out.join("grid.txt"), result.render_table().as_bytes())?;
    write_atomic(&cfg.out.join("grid.csv"), result.render_csv().as_bytes())?;
    write_atomic(&cfg.out.join("grid_timing.csv"), result.render_timing().as_bytes())?;
    Ok(result)
}
