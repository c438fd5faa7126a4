//! Price ingestion, logarithmic returns and basic sample statistics.
//!
//! Pairwise routines demand identical timestamp vectors; nothing here
//! interpolates or fills gaps.

use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Daily price observations for one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    label: String,
    timestamps: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl PriceSeries {
    pub fn new(label: impl Into<String>, timestamps: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::LengthMismatch { left: timestamps.len(), right: values.len() });
        }
        if values.len() < 2 {
            return Err(Error::TooShort { required: 2, actual: values.len() });
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!("timestamps not strictly increasing at index {}", i + 1)));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::NonPositivePrice { index, value });
        }
        Ok(Self { label: label.into(), timestamps, values })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
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

/// Logarithmic returns, stamped with the later date of each price pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    label: String,
    timestamps: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(label: impl Into<String>, timestamps: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::LengthMismatch { left: timestamps.len(), right: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { label: label.into(), timestamps, values })
    }

    /// Builds a series on a synthetic daily calendar starting 2000-01-01.
    pub fn from_values(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let timestamps = start.iter_days().take(values.len()).collect();
        Self::new(label, timestamps, values)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
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

    /// Fails unless both series share the exact same timestamp vector.
    pub fn check_aligned(&self, other: &ReturnSeries) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { left: self.len(), right: other.len() });
        }
        if self.timestamps != other.timestamps {
            return Err(Error::Misaligned { left: self.label.clone(), right: other.label.clone() });
        }
        Ok(())
    }
}

/// `values[i] = ln(p[i+1] / p[i])`.
pub fn log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    // PriceSeries already guarantees positivity; re-check for series built elsewhere.
    if let Some((index, &value)) = prices.values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositivePrice { index, value });
    }
    let values = prices.values.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    ReturnSeries::new(prices.label.clone(), prices.timestamps[1..].to_vec(), values)
}

/// Denominator used for the second moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Denominator {
    /// n − 1
    #[default]
    Sample,
    /// n
    Population,
}

/// Conventions for [`describe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatsConfig {
    pub denominator: Denominator,
    /// Report kurtosis − 3 instead of the raw fourth standardized moment.
    pub excess_kurtosis: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptiveStats {
    pub mean: f64,
    pub st_dev: f64,
    /// `None` when the standard deviation is zero.
    pub skewness: Option<f64>,
    /// `None` when the standard deviation is zero.
    pub kurtosis: Option<f64>,
    pub min: f64,
    pub max: f64,
}

/// Sample moments of the return vector.
///
/// Skewness and kurtosis are the third and fourth central moments (divided
/// by n) over the matching power of the configured standard deviation.
pub fn describe(returns: &ReturnSeries, config: StatsConfig) -> Result<DescriptiveStats> {
    describe_values(returns.values(), config)
}

pub fn describe_values(values: &[f64], config: StatsConfig) -> Result<DescriptiveStats> {
    let n = values.len();
    if n < 4 {
        return Err(Error::TooShort { required: 4, actual: n });
    }
    let nf = n as f64;
    let mean = mean(values);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let var = match config.denominator {
        Denominator::Sample => m2 / (nf - 1.0),
        Denominator::Population => m2 / nf,
    };
    let st_dev = var.sqrt();
    let (skewness, kurtosis) = if st_dev > 0.0 {
        let skew = (m3 / nf) / st_dev.powi(3);
        let mut kurt = (m4 / nf) / (var * var);
        if config.excess_kurtosis {
            kurt -= 3.0;
        }
        (Some(skew), Some(kurt))
    } else {
        (None, None)
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DescriptiveStats { mean, st_dev, skewness, kurtosis, min, max })
}

/// Pearson correlation of two aligned return series.
pub fn unconditional_corr(a: &ReturnSeries, b: &ReturnSeries) -> Result<f64> {
    a.check_aligned(b)?;
    pearson(a.values(), b.values())
}

/// Pearson correlation of two equal-length vectors.
///
/// The accumulation is symmetric in its arguments so `pearson(a, b)` and
/// `pearson(b, a)` agree bit for bit.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() < 2 {
        return Err(Error::TooShort { required: 2, actual: a.len() });
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let denom = (saa * sbb).sqrt();
    Ok((sab / denom).clamp(-1.0, 1.0))
}

/// Trailing moving average; output length is `len − window + 1`.
pub fn moving_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::InvalidInput("moving-average window must be positive".into()));
    }
    if window > values.len() {
        return Err(Error::TooShort { required: window, actual: values.len() });
    }
    let w = window as f64;
    let mut out = Vec::with_capacity(values.len() - window + 1);
    // Kahan-compensated running sum keeps long series from drifting.
    let mut sum = 0.0;
    let mut comp = 0.0;
    let add = |sum: &mut f64, comp: &mut f64, v: f64| {
        let y = v - *comp;
        let t = *sum + y;
        *comp = (t - *sum) - y;
        *sum = t;
    };
    for &v in &values[..window] {
        add(&mut sum, &mut comp, v);
    }
    out.push(sum / w);
    for i in window..values.len() {
        add(&mut sum, &mut comp, values[i]);
        add(&mut sum, &mut comp, -values[i - window]);
        out.push(sum / w);
    }
    Ok(out)
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// Reads a price table: header row of labels, ISO-8601 dates in the first
/// column, one price column per series.
pub fn read_price_csv(path: &Path) -> Result<Vec<PriceSeries>> {
    let file = std::fs::File::open(path)?;
    parse_price_csv(file)
}

pub fn parse_price_csv<R: Read>(reader: R) -> Result<Vec<PriceSeries>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Csv { row: 1, message: e.to_string() })?.clone();
    if headers.len() < 2 {
        return Err(Error::Csv { row: 1, message: "header needs a date column and at least one series".into() });
    }
    let labels: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    let mut dates = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    let mut bad_rows = Vec::new();

    for (i, record) in rdr.records().enumerate() {
        // Header is row 1.
        let row = i + 2;
        let record = record.map_err(|e| Error::Csv { row, message: e.to_string() })?;
        if record.len() != headers.len() || record.iter().any(str::is_empty) {
            bad_rows.push(row);
            continue;
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| Error::Csv { row, message: format!("bad date '{}': {e}", &record[0]) })?;
        dates.push(date);
        for (col, field) in columns.iter_mut().zip(record.iter().skip(1)) {
            let v: f64 = field.parse().map_err(|_| Error::Csv { row, message: format!("bad number '{field}'") })?;
            col.push(v);
        }
    }
    if !bad_rows.is_empty() {
        let listed: Vec<String> = bad_rows.iter().map(|r| r.to_string()).collect();
        return Err(Error::Csv { row: bad_rows[0], message: format!("missing fields in rows {}", listed.join(", ")) });
    }
    labels.into_iter().zip(columns).map(|(label, values)| PriceSeries::new(label, dates.clone(), values)).collect()
}
