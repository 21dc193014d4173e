use chrono::{Duration, NaiveDateTime, Timelike};

use super::{Observation, ObservationSeries};

/// Longest run of missing hours that is forward-filled; longer gaps split
/// the series.
pub const MAX_FILL_HOURS: i64 = 6;

fn floor_hour(ts: NaiveDateTime) -> NaiveDateTime {
    ts.with_minute(0)
        .and_then(|t| t.with_second(0))
        .and_then(|t| t.with_nanosecond(0))
        .expect("zeroing minutes is always valid")
}

/// One record per clock hour: continuous features from the earliest record
/// in the hour, rain as the maximum over the hour. Runs of up to
/// [`MAX_FILL_HOURS`] missing hours repeat the previous hour with rain 0 and
/// `filled` set; longer gaps start a new segment.
pub fn resample_hourly(series: &ObservationSeries) -> ObservationSeries {
    let mut segments: Vec<Vec<Observation>> = Vec::new();
    for segment in &series.segments {
        let mut hours: Vec<Observation> = Vec::new();
        for rec in segment {
            let hour = floor_hour(rec.timestamp);
            match hours.last_mut() {
                Some(last) if last.timestamp == hour => last.rain = last.rain.max(rec.rain),
                _ => hours.push(Observation {
                    timestamp: hour,
                    ..rec.clone()
                }),
            }
        }
        let mut current: Vec<Observation> = Vec::new();
        for rec in hours {
            if let Some(prev) = current.last() {
                let missing = (rec.timestamp - prev.timestamp).num_hours() - 1;
                if missing > MAX_FILL_HOURS {
                    segments.push(std::mem::take(&mut current));
                } else {
                    let template = prev.clone();
                    for k in 1..=missing {
                        current.push(Observation {
                            timestamp: template.timestamp + Duration::hours(k),
                            rain: 0,
                            filled: true,
                            ..template.clone()
                        });
                    }
                }
            }
            current.push(rec);
        }
        if !current.is_empty() {
            segments.push(current);
        }
    }
    ObservationSeries {
        station_id: series.station_id.clone(),
        segments,
        cadence_minutes: Some(60),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn at(h: u32, m: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2010, 7, 15).unwrap().and_hms_opt(h, m, 0).unwrap()
    }

    fn obs(ts: NaiveDateTime, temp: f64, rain: u8) -> Observation {
        Observation {
            timestamp: ts,
            temperature: temp,
            wind_speed: 10.0,
            humidity: 50.0,
            pressure: 1000.0,
            rain,
            filled: false,
        }
    }

    #[test]
    fn half_hourly_rows_merge() {
        let s = ObservationSeries::new("x", vec![obs(at(8, 10), 27.0, 1), obs(at(8, 40), 26.0, 0)]);
        let r = resample_hourly(&s);
        assert_eq!(r.segments.len(), 1);
        let h = &r.segments[0][0];
        assert_eq!((h.timestamp, h.temperature, h.rain), (at(8, 0), 27.0, 1));
    }

    #[test]
    fn hourly_input_unchanged() {
        let recs: Vec<_> = (0..10).map(|h| obs(at(h, 0), h as f64, (h % 2) as u8)).collect();
        let s = ObservationSeries::new("x", recs.clone());
        let r = resample_hourly(&s);
        assert_eq!(r.segments, vec![recs]);
    }

    #[test]
    fn short_gap_filled_long_gap_splits() {
        let base = at(0, 0);
        let mut recs = Vec::new();
        for h in 0..40 {
            recs.push(obs(base + Duration::hours(h), h as f64, 1));
        }
        // hours 40..43 missing (3): filled
        for h in 43..50 {
            recs.push(obs(base + Duration::hours(h), h as f64, 1));
        }
        // hours 50..60 missing (10): split
        for h in 60..100 {
            recs.push(obs(base + Duration::hours(h), h as f64, 1));
        }
        let r = resample_hourly(&ObservationSeries::new("x", recs));
        assert_eq!(r.segments.len(), 2);
        assert_eq!(r.segments[0].len(), 50);
        assert_eq!(r.segments[1].len(), 40);
        let filled: Vec<_> = r.segments[0].iter().filter(|o| o.filled).collect();
        assert_eq!(filled.len(), 3);
        assert!(filled.iter().all(|o| o.rain == 0 && o.temperature == 39.0));
        assert_eq!(r.segments[1][0].timestamp, base + Duration::hours(60));
        for seg in &r.segments {
            for w in seg.windows(2) {
                assert_eq!(w[1].timestamp - w[0].timestamp, Duration::hours(1));
            }
        }
    }

    #[test]
    fn six_hour_gap_is_filled() {
        let base = at(0, 0);
        let recs = vec![obs(base, 1.0, 0), obs(base + Duration::hours(7), 2.0, 0)];
        let r = resample_hourly(&ObservationSeries::new("x", recs));
        assert_eq!(r.segments.len(), 1);
        assert_eq!(r.segments[0].len(), 8);
        let recs = vec![obs(base, 1.0, 0), obs(base + Duration::hours(8), 2.0, 0)];
        assert_eq!(resample_hourly(&ObservationSeries::new("x", recs)).segments.len(), 2);
    }
}
