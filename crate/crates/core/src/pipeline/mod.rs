//! Raw station files to normalized, windowed supervised datasets:
//! parse, binarize labels, resample to hourly, filter months, window,
//! split chronologically, normalize.

pub mod container;
pub mod filter;
pub mod ingest;
pub mod normalize;
pub mod resample;
pub mod split;
pub mod window;

use chrono::{Datelike, NaiveDateTime};

pub use container::{decode_dataset, encode_dataset, read_dataset, write_dataset, DATASET_MAGIC};
pub use filter::{filter_monsoon, DEFAULT_MONSOON_MONTHS};
pub use ingest::{binarize_rain, parse_raw_csv, DEFAULT_RAIN_KEYWORDS, KaggleSources, LabelRule, ParseWarnings, Parsed, RawInput, RawLabel, Schema};
pub use normalize::{apply_normalizer, fit_normalizer, NormStats, CLAMP_HIGH, CLAMP_LOW};
pub use resample::{resample_hourly, MAX_FILL_HOURS};
pub use split::{holdout_tail, split_chronological, SplitSpec};
pub use window::{make_windows, WindowConfig, WindowReport, WindowedDataset};

/// Feature order inside every window timestep.
pub const FEATURE_NAMES: [&str; 5] = ["temperature", "wind_speed", "humidity", "pressure", "rain"];
pub const FEATURE_COUNT: usize = FEATURE_NAMES.len();

/// One station reading. Units: °C, km/h, percent, mbar.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub timestamp: NaiveDateTime,
    pub temperature: f64,
    pub wind_speed: f64,
    pub humidity: f64,
    pub pressure: f64,
    pub rain: u8,
    /// Set on hours fabricated by forward-fill.
    pub filled: bool,
}

impl Observation {
    pub fn features(&self) -> [f64; FEATURE_COUNT] {
        [
            self.temperature,
            self.wind_speed,
            self.humidity,
            self.pressure,
            f64::from(self.rain),
        ]
    }

    pub fn month(&self) -> u32 {
        self.timestamp.month()
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        if !(0.0..=100.0).contains(&self.humidity) {
            return Err(format!("humidity {} outside [0, 100]", self.humidity));
        }
        if self.pressure <= 0.0 {
            return Err(format!("pressure {} not positive", self.pressure));
        }
        if self.rain > 1 {
            return Err(format!("rain flag {}", self.rain));
        }
        let finite = [self.temperature, self.wind_speed, self.humidity, self.pressure];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err("non-finite value".into());
        }
        Ok(())
    }
}

/// Time-ordered records of one station, split into contiguous segments.
/// Raw parses produce a single segment; resampling and month filtering may
/// split it.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSeries {
    pub station_id: String,
    pub segments: Vec<Vec<Observation>>,
    /// Fixed spacing in minutes once resampled.
    pub cadence_minutes: Option<u32>,
}

impl ObservationSeries {
    pub fn new(station_id: impl Into<String>, records: Vec<Observation>) -> Self {
        ObservationSeries {
            station_id: station_id.into(),
            segments: if records.is_empty() { Vec::new() } else { vec![records] },
            cadence_minutes: None,
        }
    }

    pub fn records(&self) -> impl Iterator<Item = &Observation> {
        self.segments.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("no valid rows")]
    NoData,
    #[error("city column {0:?} not found")]
    UnknownCity(String),
    #[error("month set is empty")]
    EmptyMonthSet,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate split: {train} train rows, {test} test rows")]
    DegenerateSplit { train: usize, test: usize },
    #[error("dataset rows carry no anchor timestamps")]
    MissingAnchors,
    #[error("dataset is already normalized with different statistics")]
    NormalizerMismatch,
    #[error("corrupt dataset container: {0}")]
    CorruptDataset(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
