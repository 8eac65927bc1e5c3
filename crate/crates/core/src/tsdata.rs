//! Collections of short time series: validation, CSV ingestion,
//! differencing into transitions, and preprocessing.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("series `{unit}` has {len} observations, at least 2 required")]
    SeriesTooShort { unit: String, len: usize },
    #[error("series `{unit}`: {times} times but {values} values")]
    LengthMismatch { unit: String, times: usize, values: usize },
    #[error("series `{unit}`: times not strictly increasing at index {index}")]
    NonIncreasingTimes { unit: String, index: usize },
    #[error("series `{unit}`: non-finite entry at index {index}")]
    NonFinite { unit: String, index: usize },
    #[error("collection contains no series")]
    EmptyCollection,
    #[error("characteristic time scale undefined: every increment is zero")]
    DegenerateTimescale,
    #[error("max_dt must be positive and finite, got {0}")]
    InvalidMaxDt(f64),
    #[error("no series survives filtering with max_dt = {0}")]
    EmptyAfterFilter(f64),
    #[error("abundance matrix entry ({row}, {col}) is not strictly positive: {value}")]
    NonPositiveEntry { row: usize, col: usize, value: f64 },
    #[error("abundance matrix rows have unequal lengths (row {row})")]
    RaggedMatrix { row: usize },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("line {line}: duplicate observation for unit `{unit}` at time {time}")]
    DuplicateObservation { line: u64, unit: String, time: f64 },
    #[error("unknown abundance column `{0}`")]
    UnknownColumn(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One sampling unit's observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries")]
pub struct TimeSeries {
    unit_id: String,
    times: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSeries {
    unit_id: String,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawSeries> for TimeSeries {
    type Error = DataError;
    fn try_from(r: RawSeries) -> Result<Self, DataError> {
        TimeSeries::new(r.unit_id, r.times, r.values)
    }
}

impl TimeSeries {
    pub fn new(unit_id: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self, DataError> {
        let unit = unit_id.into();
        if times.len() != values.len() {
            return Err(DataError::LengthMismatch { unit, times: times.len(), values: values.len() });
        }
        if times.len() < 2 {
            return Err(DataError::SeriesTooShort { unit, len: times.len() });
        }
        if let Some(index) = times.iter().zip(&values).position(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(DataError::NonFinite { unit, index });
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(DataError::NonIncreasingTimes { unit, index: i + 1 });
        }
        Ok(Self { unit_id: unit, times, values })
    }

    pub fn unit_id(&self) -> &str {
        &self.unit_id
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Always false for a validated series.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Short series assumed to share one stationary dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCollection")]
pub struct TimeSeriesCollection {
    series: Vec<TimeSeries>,
    value_range: (f64, f64),
}

#[derive(Deserialize)]
struct RawCollection {
    series: Vec<TimeSeries>,
}

impl TryFrom<RawCollection> for TimeSeriesCollection {
    type Error = DataError;
    fn try_from(r: RawCollection) -> Result<Self, DataError> {
        TimeSeriesCollection::new(r.series)
    }
}

impl TimeSeriesCollection {
    pub fn new(series: Vec<TimeSeries>) -> Result<Self, DataError> {
        if series.is_empty() {
            return Err(DataError::EmptyCollection);
        }
        let (lo, hi) = series
            .iter()
            .flat_map(|s| s.values.iter())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Ok(Self { series, value_range: (lo, hi) })
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.value_range
    }

    pub fn n_observations(&self) -> usize {
        self.series.iter().map(TimeSeries::len).sum()
    }

    pub fn n_transitions(&self) -> usize {
        self.series.iter().map(|s| s.len() - 1).sum()
    }

    /// Every observed value, series by series.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.series.iter().flat_map(|s| s.values.iter().copied())
    }

    /// Reads the long observation format `unit_id,time,value`.
    ///
    /// Series appear in order of first occurrence of their unit id and are
    /// sorted by time.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_error(&e, 1))?.clone();
        let col = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| DataError::Csv {
                line: 1,
                message: format!("missing required column `{name}`"),
            })
        };
        let (iu, it, iv) = (col("unit_id")?, col("time")?, col("value")?);

        let mut units: Vec<(String, Vec<(f64, f64, u64)>)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(&e, 0))?;
            let line = rec.position().map_or(0, |p| p.line());
            let field = |i: usize| {
                rec.get(i).ok_or_else(|| DataError::Csv { line, message: format!("expected {} fields", headers.len()) })
            };
            let unit = field(iu)?.to_string();
            let time = parse_number(field(it)?, "time", line)?;
            let value = parse_number(field(iv)?, "value", line)?;
            match units.iter_mut().find(|(u, _)| *u == unit) {
                Some((_, obs)) => obs.push((time, value, line)),
                None => units.push((unit, vec![(time, value, line)])),
            }
        }

        let mut series = Vec::with_capacity(units.len());
        for (unit, mut obs) in units {
            obs.sort_by(|a, b| a.0.total_cmp(&b.0));
            if let Some(w) = obs.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(DataError::DuplicateObservation { line: w[0].2.max(w[1].2), unit, time: w[1].0 });
            }
            let (times, values) = obs.iter().map(|&(t, v, _)| (t, v)).unzip();
            series.push(TimeSeries::new(unit, times, values)?);
        }
        Self::new(series)
    }

    /// Writes the long observation format with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| DataError::Io(std::io::Error::other(e));
        w.write_record(["unit_id", "time", "value"]).map_err(io)?;
        for s in &self.series {
            for (t, v) in s.times.iter().zip(&s.values) {
                w.write_record([s.unit_id.as_str(), &t.to_string(), &v.to_string()]).map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_number(s: &str, what: &str, line: u64) -> Result<f64, DataError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(DataError::Csv { line, message: format!("invalid {what} `{s}`") }),
    }
}

fn csv_error(e: &csv::Error, fallback_line: u64) -> DataError {
    let line = e.position().map_or(fallback_line, |p| p.line());
    DataError::Csv { line, message: e.to_string() }
}

/// A single observed increment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub x: f64,
    pub dx: f64,
    pub dt: f64,
}

/// Transitions of a collection, in series order then time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionSet {
    pub transitions: Vec<Transition>,
    /// Number of transitions contributed by each source series.
    pub per_series: Vec<usize>,
}

impl TransitionSet {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn empty() -> Self {
        Self { transitions: Vec::new(), per_series: Vec::new() }
    }
}

/// Differences consecutive observations within each series.
pub fn to_transitions(c: &TimeSeriesCollection) -> TransitionSet {
    let mut transitions = Vec::with_capacity(c.n_transitions());
    let mut per_series = Vec::with_capacity(c.series.len());
    for s in &c.series {
        for i in 1..s.len() {
            transitions.push(Transition {
                x: s.values[i - 1],
                dx: s.values[i] - s.values[i - 1],
                dt: s.times[i] - s.times[i - 1],
            });
        }
        per_series.push(s.len() - 1);
    }
    TransitionSet { transitions, per_series }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimescaleSummary {
    pub t_c: f64,
    /// Observed range `max - min` of all values.
    pub d: f64,
    /// Mean of `dx^2 / dt` over all transitions.
    pub mean_sq_rate: f64,
}

/// Apparent time to traverse the observed range through fluctuations,
/// `t_c = d^2 / <dx^2/dt>`.
pub fn characteristic_timescale(c: &TimeSeriesCollection) -> Result<TimescaleSummary, DataError> {
    let ts = to_transitions(c);
    if ts.transitions.iter().all(|t| t.dx == 0.0) {
        return Err(DataError::DegenerateTimescale);
    }
    let mean_sq_rate = ts.transitions.iter().map(|t| t.dx * t.dx / t.dt).sum::<f64>() / ts.len() as f64;
    let (lo, hi) = c.value_range;
    let d = hi - lo;
    Ok(TimescaleSummary { t_c: d * d / mean_sq_rate, d, mean_sq_rate })
}

/// Splits series at gaps longer than `max_dt`, dropping fragments with fewer
/// than two observations. A split series' fragments are named
/// `<unit_id>#<fragment index>`.
pub fn filter_by_timestep(c: &TimeSeriesCollection, max_dt: f64) -> Result<TimeSeriesCollection, DataError> {
    if !(max_dt > 0.0 && max_dt.is_finite()) {
        return Err(DataError::InvalidMaxDt(max_dt));
    }
    let mut out = Vec::new();
    for s in &c.series {
        let mut bounds = vec![0];
        bounds.extend((1..s.len()).filter(|&i| s.times[i] - s.times[i - 1] > max_dt));
        bounds.push(s.len());
        if bounds.len() == 2 {
            out.push(s.clone());
            continue;
        }
        for (k, w) in bounds.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            if b - a >= 2 {
                out.push(TimeSeries {
                    unit_id: format!("{}#{}", s.unit_id, k),
                    times: s.times[a..b].to_vec(),
                    values: s.values[a..b].to_vec(),
                });
            }
        }
    }
    if out.is_empty() {
        return Err(DataError::EmptyAfterFilter(max_dt));
    }
    TimeSeriesCollection::new(out)
}

/// Zero handling applied to an abundance matrix before CLR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Pseudocount {
    /// Replace zeros with half the smallest positive entry of the matrix.
    #[default]
    HalfMinPositive,
    /// Replace zeros with a fixed value.
    Fixed(f64),
    /// Leave zeros in place (CLR will then reject them).
    None,
}

pub fn apply_pseudocount(m: &mut [Vec<f64>], policy: Pseudocount) {
    let fill = match policy {
        Pseudocount::None => return,
        Pseudocount::Fixed(v) => v,
        Pseudocount::HalfMinPositive => {
            let min_pos = m.iter().flatten().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
            if !min_pos.is_finite() {
                return;
            }
            0.5 * min_pos
        }
    };
    for v in m.iter_mut().flatten() {
        if *v == 0.0 {
            *v = fill;
        }
    }
}

/// Centred log-ratio transform of each row of a strictly positive matrix.
pub fn clr_transform(m: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, DataError> {
    let width = m.first().map_or(0, Vec::len);
    m.iter()
        .enumerate()
        .map(|(row, r)| {
            if r.len() != width {
                return Err(DataError::RaggedMatrix { row });
            }
            if let Some((col, &value)) = r.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
                return Err(DataError::NonPositiveEntry { row, col, value });
            }
            let logs: Vec<f64> = r.iter().map(|v| v.ln()).collect();
            let centre = logs.iter().sum::<f64>() / logs.len() as f64;
            Ok(logs.into_iter().map(|l| l - centre).collect())
        })
        .collect()
}

/// Wide abundance table: `unit_id,time,<taxon>...`, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AbundanceTable {
    pub unit_ids: Vec<String>,
    pub times: Vec<f64>,
    pub taxa: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl AbundanceTable {
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_error(&e, 1))?.clone();
        if headers.len() < 3 || &headers[0] != "unit_id" || &headers[1] != "time" {
            return Err(DataError::Csv { line: 1, message: "expected header `unit_id,time,<taxon>...`".into() });
        }
        let taxa: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
        let mut t = AbundanceTable { unit_ids: Vec::new(), times: Vec::new(), taxa, rows: Vec::new() };
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(&e, 0))?;
            let line = rec.position().map_or(0, |p| p.line());
            t.unit_ids.push(rec[0].to_string());
            t.times.push(parse_number(&rec[1], "time", line)?);
            let row = rec.iter().skip(2).map(|s| parse_number(s, "abundance", line)).collect::<Result<Vec<_>, _>>()?;
            t.rows.push(row);
        }
        Ok(t)
    }

    /// CLR-transforms the full table and returns one taxon's coordinate as
    /// a time-series collection.
    pub fn clr_collection(&self, taxon: &str, policy: Pseudocount) -> Result<TimeSeriesCollection, DataError> {
        let col = self.taxa.iter().position(|t| t == taxon).ok_or_else(|| DataError::UnknownColumn(taxon.into()))?;
        let mut m = self.rows.clone();
        apply_pseudocount(&mut m, policy);
        let clr = clr_transform(&m)?;
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let io = |e: csv::Error| DataError::Io(std::io::Error::other(e));
            w.write_record(["unit_id", "time", "value"]).map_err(io)?;
            for ((u, t), r) in self.unit_ids.iter().zip(&self.times).zip(&clr) {
                w.write_record([u.as_str(), &t.to_string(), &r[col].to_string()]).map_err(io)?;
            }
            w.flush()?;
        }
        TimeSeriesCollection::read_csv(buf.as_slice())
    }
}
