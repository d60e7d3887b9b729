//! Price files, log returns and descriptive statistics.
//!
//! Input files are UTF-8 CSV with one header row and one row per trading
//! day. Dates are ISO-8601 (`YYYY-MM-DD`). Missing trading days are simply
//! absent rows; nothing is interpolated.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("row {row}: {message}")]
    Parse { row: u64, message: String },
    #[error("row {row}: non-positive price {value}")]
    NonPositivePrice { row: u64, value: f64 },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("dates must be strictly increasing (violated at index {0})")]
    Unordered(usize),
    #[error("series length mismatch: {dates} dates, {values} values")]
    LengthMismatch { dates: usize, values: usize },
    #[error("series too short: need at least {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("no observations between {from} and {to}")]
    EmptyRange { from: NaiveDate, to: NaiveDate },
    #[error("file contains no data rows")]
    Empty,
}

/// Where to find a column in a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Name(String),
    Index(usize),
}

impl Column {
    fn resolve(&self, headers: &csv::StringRecord) -> Option<usize> {
        match self {
            Column::Name(name) => headers.iter().position(|h| h.trim() == name),
            Column::Index(i) => (*i < headers.len()).then_some(*i),
        }
    }
}

impl From<&str> for Column {
    /// Plain integers are treated as zero-based column indices.
    fn from(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvLayout {
    pub date: Column,
    pub value: Column,
}

impl Default for CsvLayout {
    fn default() -> Self {
        Self {
            date: Column::Name("date".into()),
            value: Column::Name("close".into()),
        }
    }
}

impl CsvLayout {
    pub fn new(date: impl Into<Column>, value: impl Into<Column>) -> Self {
        Self {
            date: date.into(),
            value: value.into(),
        }
    }
}

fn check_dates(dates: &[NaiveDate]) -> Result<(), IngestError> {
    for (i, w) in dates.windows(2).enumerate() {
        if w[1] == w[0] {
            return Err(IngestError::DuplicateDate(w[0]));
        }
        if w[1] < w[0] {
            return Err(IngestError::Unordered(i + 1));
        }
    }
    Ok(())
}

/// Dated sequence of strictly positive closing values.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self, IngestError> {
        if dates.len() != values.len() {
            return Err(IngestError::LengthMismatch {
                dates: dates.len(),
                values: values.len(),
            });
        }
        check_dates(&dates)?;
        if let Some((i, &v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(IngestError::NonPositivePrice {
                row: i as u64 + 1,
                value: v,
            });
        }
        Ok(Self { dates, values })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
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
}

/// Dated log returns. `dates[t]` is the date of the later of the two prices.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self, IngestError> {
        if dates.len() != values.len() {
            return Err(IngestError::LengthMismatch {
                dates: dates.len(),
                values: values.len(),
            });
        }
        check_dates(&dates)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(IngestError::Parse {
                row: i as u64 + 1,
                message: "non-finite return".into(),
            });
        }
        Ok(Self { dates, values })
    }

    /// Attaches a synthetic business-day calendar to raw values.
    pub fn with_synthetic_dates(values: Vec<f64>) -> Self {
        let dates = business_days(default_start_date(), values.len());
        Self { dates, values }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
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

    /// Contiguous sub-series `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> ReturnSeries {
        ReturnSeries {
            dates: self.dates[start..end].to_vec(),
            values: self.values[start..end].to_vec(),
        }
    }
}

/// First date of synthetic calendars.
pub fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date")
}

/// `n` consecutive weekdays starting at `start` (or the next weekday).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// Raw dated rows read from a CSV, not yet validated or sorted.
struct Rows {
    dates: Vec<(NaiveDate, u64)>,
    values: Vec<f64>,
}

fn read_rows<R: Read>(reader: R, layout: &CsvLayout, date_optional: bool) -> Result<Rows, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let value_idx = layout
        .value
        .resolve(&headers)
        .ok_or_else(|| IngestError::MissingColumn(format!("{:?}", layout.value)))?;
    let date_idx = match layout.date.resolve(&headers) {
        Some(i) => Some(i),
        None if date_optional => None,
        None => return Err(IngestError::MissingColumn(format!("{:?}", layout.date))),
    };

    let mut dates = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| {
            record.get(i).ok_or_else(|| IngestError::Parse {
                row,
                message: format!("missing field {i}"),
            })
        };
        let raw = field(value_idx)?;
        let value: f64 = raw.parse().map_err(|_| IngestError::Parse {
            row,
            message: format!("cannot parse value `{raw}`"),
        })?;
        if let Some(di) = date_idx {
            let raw = field(di)?;
            let date = NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|e| IngestError::Parse {
                row,
                message: format!("cannot parse date `{raw}`: {e}"),
            })?;
            dates.push((date, row));
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(Rows { dates, values })
}

/// Sorts by date and rejects duplicates. Returns the permuted values and the
/// original file row of each.
fn sort_rows(rows: Rows) -> Result<(Vec<NaiveDate>, Vec<f64>, Vec<u64>), IngestError> {
    let mut idx: Vec<usize> = (0..rows.values.len()).collect();
    idx.sort_by_key(|&i| rows.dates[i].0);
    let dates: Vec<NaiveDate> = idx.iter().map(|&i| rows.dates[i].0).collect();
    if let Some(w) = dates.windows(2).find(|w| w[0] == w[1]) {
        return Err(IngestError::DuplicateDate(w[0]));
    }
    let values = idx.iter().map(|&i| rows.values[i]).collect();
    let lines = idx.iter().map(|&i| rows.dates[i].1).collect();
    Ok((dates, values, lines))
}

pub fn read_prices<R: Read>(reader: R, layout: &CsvLayout) -> Result<PriceSeries, IngestError> {
    let rows = read_rows(reader, layout, false)?;
    let (dates, values, lines) = sort_rows(rows)?;
    for (v, row) in values.iter().zip(&lines) {
        if !(v.is_finite() && *v > 0.0) {
            return Err(IngestError::NonPositivePrice { row: *row, value: *v });
        }
    }
    PriceSeries::new(dates, values)
}

/// Loads a price file. Rows may appear in any date order; the result is
/// sorted ascending.
pub fn load_prices(path: impl AsRef<Path>, layout: &CsvLayout) -> Result<PriceSeries, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    read_prices(file, layout)
}

/// Loads a file of returns (or any stationary series). When the date
/// column is absent a synthetic business-day calendar is attached.
pub fn load_returns(path: impl AsRef<Path>, layout: &CsvLayout) -> Result<ReturnSeries, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let rows = read_rows(file, layout, true)?;
    if rows.dates.is_empty() {
        return Ok(ReturnSeries::with_synthetic_dates(rows.values));
    }
    let (dates, values, _) = sort_rows(rows)?;
    ReturnSeries::new(dates, values)
}

/// Writes a dated series with header `date,<value_header>`. Values use the
/// shortest representation that parses back to the identical `f64`.
pub fn write_series<W: Write>(
    writer: W,
    dates: &[NaiveDate],
    values: &[f64],
    value_header: &str,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", value_header])?;
    for (d, v) in dates.iter().zip(values) {
        w.write_record([d.format("%Y-%m-%d").to_string(), v.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_prices<W: Write>(writer: W, prices: &PriceSeries) -> Result<(), IngestError> {
    write_series(writer, &prices.dates, &prices.values, "close")
}

/// `r_t = ln(S_t / S_{t-1})`.
pub fn log_returns(prices: &PriceSeries) -> Result<ReturnSeries, IngestError> {
    if prices.len() < 2 {
        return Err(IngestError::TooShort {
            needed: 2,
            got: prices.len(),
        });
    }
    let values = prices.values.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    Ok(ReturnSeries {
        dates: prices.dates[1..].to_vec(),
        values,
    })
}

/// Largest peak-to-trough loss between `from` and `to` (inclusive), as a
/// fraction of the peak. The running peak only sees prices inside the range.
pub fn max_drawdown(prices: &PriceSeries, from: NaiveDate, to: NaiveDate) -> Result<f64, IngestError> {
    let start = prices.dates.partition_point(|d| *d < from);
    let end = prices.dates.partition_point(|d| *d <= to);
    if start >= end {
        return Err(IngestError::EmptyRange { from, to });
    }
    Ok(drawdown(&prices.values[start..end]))
}

fn drawdown(values: &[f64]) -> f64 {
    let mut peak = f64::MIN_POSITIVE;
    let mut worst = 1.0_f64;
    for &v in values {
        peak = peak.max(v);
        worst = worst.min(v / peak);
    }
    1.0 - worst
}

/// Moments and extremes of a sample.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub skewness: f64,
    /// Non-excess kurtosis; 3 for a Gaussian.
    pub kurtosis: f64,
    pub min: f64,
    pub max: f64,
}

pub fn describe(values: &[f64]) -> Summary {
    let n = values.len();
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let var_pop = m2 / nf;
    Summary {
        n,
        mean,
        std: if n > 1 { (m2 / (nf - 1.0)).sqrt() } else { 0.0 },
        skewness: (m3 / nf) / var_pop.powf(1.5),
        kurtosis: (m4 / nf) / (var_pop * var_pop),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}
