use std::collections::BTreeSet;

use super::{ObservationSeries, PipelineError};

pub const DEFAULT_MONSOON_MONTHS: [u32; 4] = [6, 7, 8, 9];

/// Keeps records whose calendar month is in `months`. Each surviving
/// contiguous run becomes its own segment.
pub fn filter_monsoon(series: &ObservationSeries, months: &BTreeSet<u32>) -> Result<ObservationSeries, PipelineError> {
    if months.is_empty() {
        return Err(PipelineError::EmptyMonthSet);
    }
    if let Some(bad) = months.iter().find(|m| !(1..=12).contains(*m)) {
        return Err(PipelineError::InvalidConfig(format!("month {bad}")));
    }
    let mut segments = Vec::new();
    for segment in &series.segments {
        let mut run = Vec::new();
        for rec in segment {
            if months.contains(&rec.month()) {
                run.push(rec.clone());
            } else if !run.is_empty() {
                segments.push(std::mem::take(&mut run));
            }
        }
        if !run.is_empty() {
            segments.push(run);
        }
    }
    if segments.is_empty() {
        return Err(PipelineError::NoData);
    }
    Ok(ObservationSeries {
        station_id: series.station_id.clone(),
        segments,
        cadence_minutes: series.cadence_minutes,
    })
}
