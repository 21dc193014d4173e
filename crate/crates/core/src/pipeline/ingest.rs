use std::collections::HashMap;
use std::io::Read;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};

use super::{Observation, ObservationSeries, PipelineError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schema {
    /// `Year,Month,Date,Time,Temp,WindSpeed,Humidity,Pressure,Rainfall`
    Indian,
    /// One wide file per parameter, `datetime` then one column per city.
    KaggleCity,
}

/// How a raw rain column turns into the binary target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelRule {
    NumericPassthrough,
    KeywordMatch { keywords: Vec<String> },
}

/// Every precipitation-bearing phrase of the public hourly weather
/// description vocabulary contains one of these.
pub const DEFAULT_RAIN_KEYWORDS: [&str; 5] = ["rain", "drizzle", "thunderstorm", "snow", "sleet"];

impl LabelRule {
    pub fn default_keywords() -> Self {
        LabelRule::KeywordMatch {
            keywords: DEFAULT_RAIN_KEYWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum RawLabel<'a> {
    Numeric(f64),
    Text(&'a str),
}

/// 1 iff a numeric label is nonzero, or a lowercased description contains a
/// keyword. Anything else is 0.
pub fn binarize_rain(raw: RawLabel<'_>, rule: &LabelRule) -> u8 {
    match (raw, rule) {
        (RawLabel::Numeric(v), _) => u8::from(v != 0.0 && !v.is_nan()),
        (RawLabel::Text(s), LabelRule::NumericPassthrough) => match s.trim().parse::<f64>() {
            Ok(v) => u8::from(v != 0.0),
            Err(_) => 0,
        },
        (RawLabel::Text(s), LabelRule::KeywordMatch { keywords }) => {
            let lower = s.to_lowercase();
            u8::from(keywords.iter().any(|k| lower.contains(&k.to_lowercase())))
        }
    }
}

/// The five per-parameter files of the wide Kaggle layout.
pub struct KaggleSources<R> {
    pub temperature: R,
    pub humidity: R,
    pub pressure: R,
    pub wind_speed: R,
    pub weather_description: R,
}

pub enum RawInput<R> {
    Indian(R),
    Kaggle { sources: KaggleSources<R>, city: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParseWarnings {
    /// Rows dropped because an earlier row had the same timestamp.
    pub duplicates: usize,
    /// File order was not chronological; records were sorted.
    pub non_monotonic: bool,
    /// Kaggle timestamps with at least one empty parameter cell.
    pub missing: usize,
}

#[derive(Clone, Debug)]
pub struct Parsed {
    pub series: ObservationSeries,
    pub warnings: ParseWarnings,
}

pub fn parse_raw_csv<R: Read>(input: RawInput<R>, rule: &LabelRule) -> Result<Parsed, PipelineError> {
    match input {
        RawInput::Indian(src) => parse_indian(src, rule),
        RawInput::Kaggle { sources, city } => parse_kaggle(sources, &city, rule),
    }
}

fn malformed(line: u64, reason: impl Into<String>) -> PipelineError {
    PipelineError::MalformedRow {
        line,
        reason: reason.into(),
    }
}

fn num(field: &str, name: &str, line: u64) -> Result<f64, PipelineError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| malformed(line, format!("{name} field {field:?} is not numeric")))?;
    if !v.is_finite() {
        return Err(malformed(line, format!("{name} field {field:?} is not finite")));
    }
    Ok(v)
}

fn int(field: &str, name: &str, line: u64) -> Result<u32, PipelineError> {
    field
        .trim()
        .parse()
        .map_err(|_| malformed(line, format!("{name} field {field:?} is not an integer")))
}

fn parse_time(field: &str, line: u64) -> Result<NaiveTime, PipelineError> {
    let f = field.trim();
    NaiveTime::parse_from_str(f, "%H:%M")
        .or_else(|_| NaiveTime::parse_from_str(f, "%H:%M:%S"))
        .map_err(|_| malformed(line, format!("time field {field:?}")))
}

fn parse_indian<R: Read>(src: R, rule: &LabelRule) -> Result<Parsed, PipelineError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(src);
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 9 {
            return Err(malformed(line, format!("expected 9 columns, found {}", row.len())));
        }
        let year = int(&row[0], "year", line)?;
        let month = int(&row[1], "month", line)?;
        let day = int(&row[2], "date", line)?;
        let date = NaiveDate::from_ymd_opt(year as i32, month, day)
            .ok_or_else(|| malformed(line, format!("no such date {year}-{month}-{day}")))?;
        let time = parse_time(&row[3], line)?;
        let rain_raw = num(&row[8], "rainfall", line)?;
        let obs = Observation {
            timestamp: date.and_time(time),
            temperature: num(&row[4], "temperature", line)?,
            wind_speed: num(&row[5], "wind speed", line)?,
            humidity: num(&row[6], "humidity", line)?,
            pressure: num(&row[7], "pressure", line)?,
            rain: binarize_rain(RawLabel::Numeric(rain_raw), rule),
            filled: false,
        };
        obs.check().map_err(|reason| malformed(line, reason))?;
        records.push(obs);
    }
    finish("indian", records, ParseWarnings::default())
}

/// datetime → (line, cell) for one city column of one wide file.
fn read_wide<R: Read>(src: R, city: &str, file: &str) -> Result<Vec<(NaiveDateTime, u64, String)>, PipelineError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(src);
    let headers = reader.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h.trim() == city)
        .filter(|&i| i > 0)
        .ok_or_else(|| PipelineError::UnknownCity(city.to_string()))?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let stamp = row.get(0).unwrap_or("").trim();
        let ts = NaiveDateTime::parse_from_str(stamp, "%Y-%m-%d %H:%M:%S")
            .or_else(|_| NaiveDateTime::parse_from_str(stamp, "%Y-%m-%d %H:%M"))
            .map_err(|_| malformed(line, format!("{file}: datetime {stamp:?}")))?;
        out.push((ts, line, row.get(col).unwrap_or("").trim().to_string()));
    }
    Ok(out)
}

/// Kelvin → °C, m/s → km/h; pressure is already hPa = mbar.
fn parse_kaggle<R: Read>(sources: KaggleSources<R>, city: &str, rule: &LabelRule) -> Result<Parsed, PipelineError> {
    let temperature = read_wide(sources.temperature, city, "temperature")?;
    let index = |rows: Vec<(NaiveDateTime, u64, String)>| -> HashMap<NaiveDateTime, (u64, String)> {
        let mut map = HashMap::with_capacity(rows.len());
        for (ts, line, cell) in rows {
            map.entry(ts).or_insert((line, cell));
        }
        map
    };
    let humidity = index(read_wide(sources.humidity, city, "humidity")?);
    let pressure = index(read_wide(sources.pressure, city, "pressure")?);
    let wind = index(read_wide(sources.wind_speed, city, "wind_speed")?);
    let weather = index(read_wide(sources.weather_description, city, "weather_description")?);

    let mut warnings = ParseWarnings::default();
    let mut records = Vec::with_capacity(temperature.len());
    for (ts, line, temp_cell) in temperature {
        let cells = (humidity.get(&ts), pressure.get(&ts), wind.get(&ts), weather.get(&ts));
        let (Some(h), Some(p), Some(w), Some(d)) = cells else {
            warnings.missing += 1;
            continue;
        };
        if [temp_cell.as_str(), &h.1, &p.1, &w.1, &d.1].iter().any(|c| c.is_empty()) {
            warnings.missing += 1;
            continue;
        }
        let obs = Observation {
            timestamp: ts,
            temperature: num(&temp_cell, "temperature", line)? - 273.15,
            wind_speed: num(&w.1, "wind speed", w.0)? * 3.6,
            humidity: num(&h.1, "humidity", h.0)?,
            pressure: num(&p.1, "pressure", p.0)?,
            rain: binarize_rain(RawLabel::Text(&d.1), rule),
            filled: false,
        };
        obs.check().map_err(|reason| malformed(line, reason))?;
        records.push(obs);
    }
    finish(city, records, warnings)
}

fn finish(station: &str, mut records: Vec<Observation>, mut warnings: ParseWarnings) -> Result<Parsed, PipelineError> {
    if records.is_empty() {
        return Err(PipelineError::NoData);
    }
    warnings.non_monotonic = records.windows(2).any(|w| w[1].timestamp < w[0].timestamp);
    // stable: among equal stamps the first in file order survives
    records.sort_by_key(|r| r.timestamp);
    let before = records.len();
    records.dedup_by(|later, earlier| later.timestamp == earlier.timestamp);
    warnings.duplicates += before - records.len();
    Ok(Parsed {
        series: ObservationSeries::new(station, records),
        warnings,
    })
}
