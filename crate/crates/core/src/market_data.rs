//! Closing-price ingestion, log-returns and sample moments.

use std::collections::HashMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: close must be positive, got {value}")]
    NonPositiveClose { line: usize, value: f64 },
    #[error("line {line}: duplicate date {date}")]
    DuplicateDate { line: usize, date: NaiveDate },
    #[error("series too short: {len} observations, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("sample is constant; skewness and kurtosis are undefined")]
    Degenerate,
    #[error("dates and closes differ in length ({dates} vs {closes})")]
    LengthMismatch { dates: usize, closes: usize },
    #[error("dates are not strictly increasing at index {index}")]
    Unordered { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PriceSeries<T> {
    pub asset_id: String,
    pub dates: Vec<NaiveDate>,
    pub closes: Vec<T>,
}

impl<T: Scalar> PriceSeries<T> {
    /// Builds a series, checking ordering, positivity and length.
    pub fn new(asset_id: impl Into<String>, dates: Vec<NaiveDate>, closes: Vec<T>) -> Result<Self, MarketDataError> {
        if dates.len() != closes.len() {
            return Err(MarketDataError::LengthMismatch { dates: dates.len(), closes: closes.len() });
        }
        if closes.len() < 2 {
            return Err(MarketDataError::TooShort { len: closes.len(), min: 2 });
        }
        if let Some(i) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(MarketDataError::Unordered { index: i + 1 });
        }
        if let Some(i) = closes.iter().position(|c| !(*c > T::zero()) || !c.is_finite()) {
            return Err(MarketDataError::NonPositiveClose { line: i + 2, value: closes[i].as_f64() });
        }
        Ok(PriceSeries { asset_id: asset_id.into(), dates, closes })
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    pub fn last_close(&self) -> T {
        *self.closes.last().expect("non-empty series")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ReturnSeries<T> {
    pub asset_id: String,
    pub values: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SummaryStats<T> {
    pub n: usize,
    pub mean: T,
    pub sd: T,
    pub skewness: T,
    /// Raw kurtosis: 3 for a Gaussian.
    pub kurtosis: T,
}

/// Reads a `date,close` CSV. Rows may come in any order; the result is
/// sorted by date.
pub fn load_price_csv<T: Scalar>(path: impl AsRef<Path>, asset_id: &str) -> Result<PriceSeries<T>, MarketDataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MarketDataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_price_csv(&text, asset_id)
}

/// Parses CSV text with header `date,close`. Line numbers in errors are
/// 1-based and count the header.
pub fn parse_price_csv<T: Scalar>(text: &str, asset_id: &str) -> Result<PriceSeries<T>, MarketDataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| MarketDataError::Malformed { line: 1, reason: e.to_string() })?
        .clone();
    let cols: Vec<&str> = headers.iter().map(|h| h.trim_start_matches('\u{feff}')).collect();
    if cols != ["date", "close"] {
        return Err(MarketDataError::Malformed {
            line: 1,
            reason: format!("expected header `date,close`, found `{}`", cols.join(",")),
        });
    }
    let mut rows: Vec<(NaiveDate, f64, usize)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| MarketDataError::Malformed {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != 2 {
            return Err(MarketDataError::Malformed { line, reason: format!("expected 2 fields, got {}", record.len()) });
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| MarketDataError::Malformed { line, reason: format!("bad date `{}`: {e}", &record[0]) })?;
        let close: f64 = record[1]
            .parse()
            .map_err(|e| MarketDataError::Malformed { line, reason: format!("bad close `{}`: {e}", &record[1]) })?;
        if !(close > 0.0) || !close.is_finite() {
            return Err(MarketDataError::NonPositiveClose { line, value: close });
        }
        rows.push((date, close, line));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(MarketDataError::DuplicateDate { line: w[0].2.max(w[1].2), date: w[1].0 });
    }
    let (dates, closes): (Vec<_>, Vec<_>) = rows.into_iter().map(|(d, c, _)| (d, T::lit(c))).unzip();
    PriceSeries::new(asset_id, dates, closes)
}

/// `values[i] = ln(closes[i+1] / closes[i])`.
pub fn log_returns<T: Scalar>(p: &PriceSeries<T>) -> Result<ReturnSeries<T>, MarketDataError> {
    if p.closes.len() < 2 {
        return Err(MarketDataError::TooShort { len: p.closes.len(), min: 2 });
    }
    let values = p.closes.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    Ok(ReturnSeries { asset_id: p.asset_id.clone(), values })
}

/// Sample mean, standard deviation (n − 1 denominator) and raw central
/// moment ratios `m3 / m2^1.5`, `m4 / m2^2`.
pub fn summary_stats<T: Scalar>(r: &ReturnSeries<T>) -> Result<SummaryStats<T>, MarketDataError> {
    summary_of(&r.values)
}

pub fn summary_of<T: Scalar>(xs: &[T]) -> Result<SummaryStats<T>, MarketDataError> {
    let n = xs.len();
    if n < 4 {
        return Err(MarketDataError::TooShort { len: n, min: 4 });
    }
    let nf = T::from_usize(n).unwrap();
    let mean = xs.iter().copied().sum::<T>() / nf;
    let (mut m2, mut m3, mut m4) = (T::zero(), T::zero(), T::zero());
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 = m2 + d2;
        m3 = m3 + d2 * d;
        m4 = m4 + d2 * d2;
    }
    if m2 == T::zero() {
        return Err(MarketDataError::Degenerate);
    }
    let sd = (m2 / (nf - T::one())).sqrt();
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    Ok(SummaryStats {
        n,
        mean,
        sd,
        skewness: m3 / m2.powf(T::lit(1.5)),
        kurtosis: m4 / (m2 * m2),
    })
}

/// Inner join of two price series on their dates. Returns the aligned
/// series and the number of dates dropped from either side.
pub fn align_pair<T: Scalar>(
    a: &PriceSeries<T>,
    b: &PriceSeries<T>,
) -> Result<(PriceSeries<T>, PriceSeries<T>, usize), MarketDataError> {
    let index: HashMap<NaiveDate, T> = b.dates.iter().copied().zip(b.closes.iter().copied()).collect();
    let mut dates = Vec::new();
    let mut ca = Vec::new();
    let mut cb = Vec::new();
    for (d, c) in a.dates.iter().zip(a.closes.iter()) {
        if let Some(&other) = index.get(d) {
            dates.push(*d);
            ca.push(*c);
            cb.push(other);
        }
    }
    let dropped = a.len() + b.len() - 2 * dates.len();
    if dropped > 0 {
        log::info!(
            "aligning {} and {}: dropped {dropped} unmatched dates",
            a.asset_id,
            b.asset_id
        );
    }
    Ok((
        PriceSeries::new(a.asset_id.clone(), dates.clone(), ca)?,
        PriceSeries::new(b.asset_id.clone(), dates, cb)?,
        dropped,
    ))
}
