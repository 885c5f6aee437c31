//! Discharge ingestion, system aggregation and basic series handling.
//!
//! Raw records are per-river daily discharges in m³/s. The system series is
//! the per-date sum over rivers on a complete daily grid, usually followed by
//! a natural-log transform.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{require_len, Error, Result};

/// Daily time step in years. Leap days are ignored.
pub const DAILY_DT: f64 = 1.0 / 365.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    Antioquia,
    Caribbean,
    Center,
    East,
    Valle,
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "antioquia" => Ok(Region::Antioquia),
            "caribbean" | "caribe" => Ok(Region::Caribbean),
            "center" | "centre" | "centro" => Ok(Region::Center),
            "east" | "oriente" => Ok(Region::East),
            "valle" => Ok(Region::Valle),
            other => Err(Error::Domain(format!("unknown region `{other}`"))),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::Antioquia => "Antioquia",
            Region::Caribbean => "Caribbean",
            Region::Center => "Center",
            Region::East => "East",
            Region::Valle => "Valle",
        };
        f.write_str(s)
    }
}

/// One daily discharge observation for a single river.
#[derive(Debug, Clone, PartialEq)]
pub struct RiverRecord {
    pub region: Region,
    pub reservoir: String,
    pub river: String,
    pub date: NaiveDate,
    /// m³/s, never negative.
    pub discharge: f64,
}

/// Column names used to locate fields in an input CSV header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub date: String,
    pub region: String,
    pub reservoir: String,
    pub river: String,
    pub discharge: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date: "date".into(),
            region: "region".into(),
            reservoir: "reservoir".into(),
            river: "river".into(),
            discharge: "discharge".into(),
        }
    }
}

/// Reads river records from a CSV file.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Vec<RiverRecord>> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file, schema)
}

/// Reads river records from any CSV source. Records come back sorted by
/// river, then date. Row numbers in errors are 1-based and count the header.
pub fn ingest_reader<R: Read>(reader: R, schema: &CsvSchema) -> Result<Vec<RiverRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    // An empty file has no header at all.
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(name.to_string()))
    };
    let i_date = col(&schema.date)?;
    let i_region = col(&schema.region)?;
    let i_reservoir = col(&schema.reservoir)?;
    let i_river = col(&schema.river)?;
    let i_discharge = col(&schema.discharge)?;

    let mut records = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row_no = idx + 2;
        let row = row.map_err(|e| Error::Parse {
            row: row_no,
            message: e.to_string(),
        })?;
        let field = |i: usize| -> Result<&str> {
            row.get(i).ok_or_else(|| Error::Parse {
                row: row_no,
                message: format!("missing field {}", i + 1),
            })
        };
        let date =
            NaiveDate::parse_from_str(field(i_date)?, "%Y-%m-%d").map_err(|e| Error::Parse {
                row: row_no,
                message: format!("bad date `{}`: {e}", field(i_date).unwrap_or("")),
            })?;
        let region = field(i_region)?
            .parse::<Region>()
            .map_err(|e| Error::Parse {
                row: row_no,
                message: e.to_string(),
            })?;
        let raw = field(i_discharge)?;
        let discharge: f64 = raw.parse().map_err(|_| Error::Parse {
            row: row_no,
            message: format!("bad discharge `{raw}`"),
        })?;
        if !discharge.is_finite() {
            return Err(Error::Parse {
                row: row_no,
                message: format!("non-finite discharge `{raw}`"),
            });
        }
        if discharge < 0.0 {
            return Err(Error::Domain(format!(
                "negative discharge {discharge} at row {row_no}"
            )));
        }
        records.push(RiverRecord {
            region,
            reservoir: field(i_reservoir)?.to_string(),
            river: field(i_river)?.to_string(),
            date,
            discharge,
        });
    }

    records.sort_by(|a, b| a.river.cmp(&b.river).then(a.date.cmp(&b.date)));
    for w in records.windows(2) {
        if w[0].river == w[1].river && w[0].date == w[1].date {
            return Err(Error::Domain(format!(
                "duplicate record for river `{}` on {}",
                w[0].river, w[0].date
            )));
        }
    }
    Ok(records)
}

/// How to treat calendar dates with no contributing river.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapPolicy {
    #[default]
    Fail,
    /// Linearly interpolate runs of at most this many missing days.
    Interpolate { max_gap_days: usize },
}

/// Sums discharge over rivers for each date on a complete daily grid.
pub fn aggregate_system(records: &[RiverRecord]) -> Result<TimeSeries> {
    aggregate_system_with(records, GapPolicy::Fail)
}

pub fn aggregate_system_with(records: &[RiverRecord], policy: GapPolicy) -> Result<TimeSeries> {
    if records.is_empty() {
        return Err(Error::Size("no records to aggregate".into()));
    }
    // Sum in sorted order so the total does not depend on record order.
    let mut by_date: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_date.entry(r.date).or_default().push(r.discharge);
    }
    let totals: BTreeMap<NaiveDate, f64> = by_date
        .into_iter()
        .map(|(date, mut vals)| {
            vals.sort_by(f64::total_cmp);
            (date, vals.iter().sum())
        })
        .collect();

    let start = *totals.keys().next().expect("non-empty");
    let end = *totals.keys().next_back().expect("non-empty");
    let n_days = (end - start).num_days() as usize + 1;
    let mut values: Vec<Option<f64>> = vec![None; n_days];
    for (date, v) in &totals {
        values[(*date - start).num_days() as usize] = Some(*v);
    }

    let mut out = Vec::with_capacity(n_days);
    let mut i = 0;
    while i < n_days {
        if let Some(v) = values[i] {
            out.push(v);
            i += 1;
            continue;
        }
        let gap_start = i;
        while i < n_days && values[i].is_none() {
            i += 1;
        }
        let gap_len = i - gap_start;
        let gap_date = start + Duration::days(gap_start as i64);
        match policy {
            GapPolicy::Interpolate { max_gap_days } if gap_len <= max_gap_days => {
                // Both neighbours exist: the span starts and ends on observed dates.
                let left = values[gap_start - 1].expect("observed");
                let right = values[i].expect("observed");
                let steps = (gap_len + 1) as f64;
                for j in 1..=gap_len {
                    out.push(left + (right - left) * j as f64 / steps);
                }
            }
            _ => return Err(Error::Gap(gap_date)),
        }
    }

    TimeSeries::new(start, DAILY_DT, out, "system")
}

/// A uniformly sampled daily series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start_date: NaiveDate,
    dt_years: f64,
    values: Vec<f64>,
    label: String,
}

impl TimeSeries {
    pub fn new(
        start_date: NaiveDate,
        dt_years: f64,
        values: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Size("time series must not be empty".into()));
        }
        if !(dt_years > 0.0 && dt_years.is_finite()) {
            return Err(Error::Domain(format!(
                "dt_years must be positive, got {dt_years}"
            )));
        }
        Ok(Self {
            start_date,
            dt_years,
            values,
            label: label.into(),
        })
    }

    /// Daily series with `dt = 1/365`.
    pub fn daily(
        start_date: NaiveDate,
        values: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        Self::new(start_date, DAILY_DT, values, label)
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.date_at(self.values.len() - 1)
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start_date + Duration::days(index as i64)
    }

    pub fn dt_years(&self) -> f64 {
        self.dt_years
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    /// Same metadata, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.start_date, self.dt_years, values, self.label.clone())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }
}

pub fn log_transform(series: &TimeSeries) -> Result<TimeSeries> {
    if let Some((i, v)) = series
        .values()
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0))
    {
        return Err(Error::Domain(format!(
            "log of nonpositive value {v} at index {i}"
        )));
    }
    Ok(series.map(f64::ln))
}

/// Inclusive sub-series between two calendar dates.
pub fn slice_period(series: &TimeSeries, start: NaiveDate, end: NaiveDate) -> Result<TimeSeries> {
    if start >= end {
        return Err(Error::Range(format!(
            "period start {start} is not before end {end}"
        )));
    }
    if start < series.start_date() || end > series.end_date() {
        return Err(Error::Range(format!(
            "period {start}..{end} outside series span {}..{}",
            series.start_date(),
            series.end_date()
        )));
    }
    let i0 = (start - series.start_date()).num_days() as usize;
    let i1 = (end - series.start_date()).num_days() as usize;
    TimeSeries::new(
        start,
        series.dt_years(),
        series.values()[i0..=i1].to_vec(),
        series.label(),
    )
}

/// First differences; the result starts one day later.
pub fn difference(series: &TimeSeries) -> Result<TimeSeries> {
    require_len("difference", series.len(), 2)?;
    let diffs = series.values().windows(2).map(|w| w[1] - w[0]).collect();
    TimeSeries::new(
        series.date_at(1),
        series.dt_years(),
        diffs,
        format!("d({})", series.label()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub mean: f64,
    pub std_dev: f64,
    pub n: usize,
}

/// Sample mean and standard deviation (n − 1 denominator).
pub fn describe(series: &TimeSeries) -> Result<DescriptiveStats> {
    describe_values(series.values())
}

pub fn describe_values(values: &[f64]) -> Result<DescriptiveStats> {
    require_len("describe", values.len(), 2)?;
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(DescriptiveStats {
        mean,
        std_dev: (ss / (n - 1) as f64).sqrt(),
        n,
    })
}

/// Writes `date,value` rows.
pub fn write_series_csv<W: Write>(series: &TimeSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "value"])?;
    for (i, v) in series.values().iter().enumerate() {
        w.write_record([series.date_at(i).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `date,value` series. Dates must be consecutive days.
pub fn read_series_csv<R: Read>(reader: R, label: &str) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let i_date = headers
        .iter()
        .position(|h| h == "date")
        .ok_or_else(|| Error::Schema("date".into()))?;
    let i_value = headers
        .iter()
        .position(|h| h == "value")
        .ok_or_else(|| Error::Schema("value".into()))?;

    let mut start = None;
    let mut values = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row_no = idx + 2;
        let row = row.map_err(|e| Error::Parse {
            row: row_no,
            message: e.to_string(),
        })?;
        let parse_err = |message: String| Error::Parse {
            row: row_no,
            message,
        };
        let date = NaiveDate::parse_from_str(row.get(i_date).unwrap_or(""), "%Y-%m-%d")
            .map_err(|e| parse_err(format!("bad date: {e}")))?;
        let value: f64 = row
            .get(i_value)
            .unwrap_or("")
            .parse()
            .map_err(|_| parse_err("bad value".into()))?;
        let start_date = *start.get_or_insert(date);
        let expected = start_date + Duration::days(values.len() as i64);
        if date != expected {
            return Err(parse_err(format!("expected date {expected}, found {date}")));
        }
        values.push(value);
    }
    let start = start.ok_or_else(|| Error::Size("series file has no rows".into()))?;
    TimeSeries::daily(start, values, label)
}

pub fn read_series_file(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into());
    read_series_csv(std::fs::File::open(path)?, &label)
}
