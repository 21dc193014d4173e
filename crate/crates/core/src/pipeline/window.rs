use chrono::NaiveDateTime;

use super::normalize::NormStats;
use super::{ObservationSeries, PipelineError, FEATURE_COUNT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WindowConfig {
    /// Past hours per input row.
    pub lookback: usize,
    /// Hours past the anchor at which rain is the target.
    pub horizon: usize,
    pub features: usize,
}

impl WindowConfig {
    pub fn new(lookback: usize, horizon: usize) -> Self {
        WindowConfig {
            lookback,
            horizon,
            features: FEATURE_COUNT,
        }
    }

    pub fn width(&self) -> usize {
        self.lookback * self.features
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.lookback == 0 || self.horizon == 0 {
            return Err(PipelineError::InvalidConfig(format!(
                "lookback {} and horizon {} must be at least 1",
                self.lookback, self.horizon
            )));
        }
        if self.features != FEATURE_COUNT {
            return Err(PipelineError::InvalidConfig(format!(
                "{} features per hour, stations provide {FEATURE_COUNT}",
                self.features
            )));
        }
        Ok(())
    }

    /// Rows produced by one contiguous segment of `len` hours.
    pub fn rows_for(&self, len: usize) -> usize {
        (len + 1).saturating_sub(self.lookback + self.horizon)
    }
}

/// Supervised rows: `lookback` timesteps of all features, oldest first, and
/// the rain flag `horizon` hours after the anchor (the newest input hour).
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedDataset {
    pub config: WindowConfig,
    pub(crate) inputs: Vec<f64>,
    pub(crate) targets: Vec<u8>,
    /// Empty for datasets loaded from a container.
    pub(crate) anchors: Vec<NaiveDateTime>,
    pub(crate) norm_stats: Option<NormStats>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WindowReport {
    pub segments_used: usize,
    /// Segments shorter than `lookback + horizon`.
    pub segments_skipped: usize,
}

impl WindowedDataset {
    pub fn from_parts(
        config: WindowConfig,
        inputs: Vec<f64>,
        targets: Vec<u8>,
        anchors: Vec<NaiveDateTime>,
        norm_stats: Option<NormStats>,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        if inputs.len() != targets.len() * config.width() {
            return Err(PipelineError::InvalidConfig(format!(
                "{} input values for {} rows of width {}",
                inputs.len(),
                targets.len(),
                config.width()
            )));
        }
        if !anchors.is_empty() && anchors.len() != targets.len() {
            return Err(PipelineError::InvalidConfig("anchor count differs from row count".into()));
        }
        if targets.iter().any(|&t| t > 1) {
            return Err(PipelineError::InvalidConfig("targets must be 0 or 1".into()));
        }
        if let Some(s) = &norm_stats {
            if s.mins.len() != config.features {
                return Err(PipelineError::InvalidConfig("normalization stats width".into()));
            }
        }
        Ok(WindowedDataset {
            config,
            inputs,
            targets,
            anchors,
            norm_stats,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn width(&self) -> usize {
        self.config.width()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.inputs[i * w..(i + 1) * w]
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[u8] {
        &self.targets
    }

    pub fn anchors(&self) -> &[NaiveDateTime] {
        &self.anchors
    }

    pub fn norm_stats(&self) -> Option<&NormStats> {
        self.norm_stats.as_ref()
    }

    pub fn positive_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.targets.iter().map(|&t| f64::from(t)).sum::<f64>() / self.len() as f64
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> WindowedDataset {
        let w = self.width();
        let mut inputs = Vec::with_capacity(indices.len() * w);
        for &i in indices {
            inputs.extend_from_slice(self.row(i));
        }
        WindowedDataset {
            config: self.config,
            inputs,
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            anchors: if self.anchors.is_empty() {
                Vec::new()
            } else {
                indices.iter().map(|&i| self.anchors[i]).collect()
            },
            norm_stats: self.norm_stats.clone(),
        }
    }
}

/// Emits `M − L − h + 1` rows per segment of `M` hours. Segments too short
/// for one row are skipped and counted.
pub fn make_windows(series: &ObservationSeries, cfg: WindowConfig) -> Result<(WindowedDataset, WindowReport), PipelineError> {
    cfg.validate()?;
    if series.cadence_minutes != Some(60) {
        return Err(PipelineError::InvalidConfig("series must be resampled hourly before windowing".into()));
    }
    let (l, h) = (cfg.lookback, cfg.horizon);
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut anchors = Vec::new();
    let mut report = WindowReport::default();
    for segment in &series.segments {
        let rows = cfg.rows_for(segment.len());
        if rows == 0 {
            report.segments_skipped += 1;
            continue;
        }
        report.segments_used += 1;
        for anchor in l - 1..l - 1 + rows {
            for rec in &segment[anchor + 1 - l..=anchor] {
                inputs.extend_from_slice(&rec.features());
            }
            targets.push(segment[anchor + h].rain);
            anchors.push(segment[anchor].timestamp);
        }
    }
    let ds = WindowedDataset::from_parts(cfg, inputs, targets, anchors, None)?;
    Ok((ds, report))
}
