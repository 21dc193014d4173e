use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use super::{write_atomic, HarnessError, Result, TEST_FILE, TRAIN_FILE};
use crate::pipeline::{
    apply_normalizer, encode_dataset, filter_monsoon, fit_normalizer, make_windows, parse_raw_csv, resample_hourly,
    KaggleSources, LabelRule, NormStats, ObservationSeries, ParseWarnings, Parsed, RawInput, Schema, SplitSpec,
    WindowConfig, WindowedDataset, FEATURE_NAMES,
};
use crate::pipeline::split_chronological;

/// Where raw observations come from. For the wide layout `path` is the
/// directory holding `temperature.csv`, `humidity.csv`, `pressure.csv`,
/// `wind_speed.csv` and `weather_description.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSpec {
    pub path: PathBuf,
    pub schema: Schema,
    pub city: Option<String>,
}

impl SourceSpec {
    pub fn label(&self) -> String {
        match (&self.schema, &self.city) {
            (Schema::KaggleCity, Some(city)) => format!("{} ({city})", self.path.display()),
            _ => self.path.display().to_string(),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| HarnessError::Io(e).context(path.display().to_string()))
}

pub fn load_series(source: &SourceSpec) -> Result<Parsed> {
    let parsed = match source.schema {
        Schema::Indian => parse_raw_csv(RawInput::Indian(open(&source.path)?), &LabelRule::NumericPassthrough),
        Schema::KaggleCity => {
            let city = source
                .city
                .clone()
                .ok_or_else(|| HarnessError::Usage("the kaggle schema needs --city".into()))?;
            let file = |name: &str| open(&source.path.join(format!("{name}.csv")));
            let sources = KaggleSources {
                temperature: file("temperature")?,
                humidity: file("humidity")?,
                pressure: file("pressure")?,
                wind_speed: file("wind_speed")?,
                weather_description: file("weather_description")?,
            };
            parse_raw_csv(RawInput::Kaggle { sources, city }, &LabelRule::default_keywords())
        }
    };
    parsed.map_err(|e| HarnessError::from(e).context(source.path.display().to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrepareReport {
    pub station: String,
    pub raw_records: usize,
    pub warnings: ParseWarnings,
    pub hourly_records: usize,
    pub filled_hours: usize,
    /// `None` keeps every month.
    pub months: Option<BTreeSet<u32>>,
    pub filtered_records: usize,
    pub segments_used: usize,
    pub segments_skipped: usize,
    pub window: WindowConfig,
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_positive_rate: f64,
    pub test_positive_rate: f64,
    pub stats: NormStats,
}

impl PrepareReport {
    pub fn total_rows(&self) -> usize {
        self.train_rows + self.test_rows
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        writeln!(w, "station: {}", self.station).unwrap();
        writeln!(w, "raw records: {}", self.raw_records).unwrap();
        writeln!(
            w,
            "parse warnings: {} duplicate timestamps, {} incomplete timestamps, reordered: {}",
            self.warnings.duplicates,
            self.warnings.missing,
            if self.warnings.non_monotonic { "yes" } else { "no" }
        )
        .unwrap();
        writeln!(w, "hourly records: {} ({} forward-filled)", self.hourly_records, self.filled_hours).unwrap();
        match &self.months {
            Some(m) if m.len() < 12 => {
                let list: Vec<String> = m.iter().map(u32::to_string).collect();
                writeln!(w, "months: {}", list.join(",")).unwrap();
            }
            _ => writeln!(w, "months: all (identity filter)").unwrap(),
        }
        writeln!(w, "records after month filter: {}", self.filtered_records).unwrap();
        writeln!(
            w,
            "segments: {} used, {} dropped (shorter than lookback + horizon)",
            self.segments_used, self.segments_skipped
        )
        .unwrap();
        writeln!(
            w,
            "window: lookback {}, horizon {}, {} features, input width {}",
            self.window.lookback,
            self.window.horizon,
            self.window.features,
            self.window.width()
        )
        .unwrap();
        writeln!(w, "rows: {} total, {} train, {} test", self.total_rows(), self.train_rows, self.test_rows).unwrap();
        writeln!(
            w,
            "positive rate: train {:.4}, test {:.4}",
            self.train_positive_rate, self.test_positive_rate
        )
        .unwrap();
        writeln!(w, "normalization (train min, max):").unwrap();
        for (k, name) in FEATURE_NAMES.iter().enumerate().take(self.stats.mins.len()) {
            writeln!(w, "  {name}: {}, {}", self.stats.mins[k], self.stats.maxs[k]).unwrap();
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct Prepared {
    pub train: WindowedDataset,
    pub test: WindowedDataset,
    pub report: PrepareReport,
}

/// Resample → month filter → window → chronological split → normalize on
/// train statistics.
pub fn prepare_series(
    parsed: &Parsed,
    months: Option<&BTreeSet<u32>>,
    window: WindowConfig,
    split: SplitSpec,
) -> Result<Prepared> {
    let hourly = resample_hourly(&parsed.series);
    let filled_hours = hourly.records().filter(|o| o.filled).count();
    let filtered: ObservationSeries = match months {
        Some(m) => filter_monsoon(&hourly, m)?,
        None => hourly.clone(),
    };
    let (windows, wr) = make_windows(&filtered, window)?;
    let (train, test) = split_chronological(&windows, split)?;
    let stats = fit_normalizer(&train);
    let train = apply_normalizer(&train, &stats)?;
    let test = apply_normalizer(&test, &stats)?;
    let report = PrepareReport {
        station: parsed.series.station_id.clone(),
        raw_records: parsed.series.len(),
        warnings: parsed.warnings.clone(),
        hourly_records: hourly.len(),
        filled_hours,
        months: months.cloned(),
        filtered_records: filtered.len(),
        segments_used: wr.segments_used,
        segments_skipped: wr.segments_skipped,
        window,
        train_rows: train.len(),
        test_rows: test.len(),
        train_positive_rate: train.positive_rate(),
        test_positive_rate: test.positive_rate(),
        stats,
    };
    Ok(Prepared { train, test, report })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrepareConfig {
    pub source: SourceSpec,
    pub months: Option<BTreeSet<u32>>,
    pub window: WindowConfig,
    pub split: SplitSpec,
    pub out: PathBuf,
}

/// Writes `train.nwc`, `test.nwc` and `prepare_report.txt` into `out`.
pub fn cmd_prepare(cfg: &PrepareConfig) -> Result<Prepared> {
    let parsed = load_series(&cfg.source)?;
    let prepared = prepare_series(&parsed, cfg.months.as_ref(), cfg.window, cfg.split)
        .map_err(|e| e.context(cfg.source.label()))?;
    write_atomic(&cfg.out.join(TRAIN_FILE), &encode_dataset(&prepared.train))?;
    write_atomic(&cfg.out.join(TEST_FILE), &encode_dataset(&prepared.test))?;
    write_atomic(&cfg.out.join("prepare_report.txt"), prepared.report.render().as_bytes())?;
    Ok(prepared)
}
