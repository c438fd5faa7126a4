//! Time-varying correlation tracks.
//!
//! The wavelet track at time t is the square root of the scale-average of
//! significant squared coherence, non-significant points counting as zero.
//! Anti-phase points (|φ| > π/2) enter the average with negative sign and
//! the sign survives the square root.

use std::f64::consts::FRAC_PI_2;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::coherence::CoherenceField;
use crate::error::{Error, Result};
use crate::metadata::Metadata;
use crate::significance::SignificanceResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackMethod {
    Wtc,
    Dcc,
    Unconditional,
}

impl TrackMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrackMethod::Wtc => "wtc",
            TrackMethod::Dcc => "dcc",
            TrackMethod::Unconditional => "unconditional",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wtc" => Ok(TrackMethod::Wtc),
            "dcc" => Ok(TrackMethod::Dcc),
            "unconditional" => Ok(TrackMethod::Unconditional),
            other => Err(Error::InvalidInput(format!("unknown track method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTrack {
    pub timestamps: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub method: TrackMethod,
}

impl CorrelationTrack {
    pub fn new(timestamps: Vec<NaiveDate>, values: Vec<f64>, method: TrackMethod) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::LengthMismatch { left: timestamps.len(), right: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !(v.abs() <= 1.0)) {
            return Err(Error::Invariant(format!("correlation {} at index {i} outside [-1, 1]", values[i])));
        }
        Ok(Self { timestamps, values, method })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOptions {
    /// Scales with a longer Fourier period are left out of the average.
    pub max_period: f64,
    /// Average over points inside the cone of influence as well.
    pub include_coi: bool,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self { max_period: 256.0, include_coi: true }
    }
}

/// Reduces a coherence field to one signed correlation per time point.
///
/// With `include_coi = false`, edge-affected points drop out of both the
/// sum and the count; a time with no trustworthy scale gets zero.
pub fn wtc_correlation_track(
    field: &CoherenceField,
    sig: &SignificanceResult,
    timestamps: &[NaiveDate],
    options: &TrackOptions,
) -> Result<CorrelationTrack> {
    let n = field.n();
    if sig.mask.shape() != field.r2().shape() {
        return Err(Error::InvalidInput(format!(
            "significance mask {:?} does not match coherence field {:?}",
            sig.mask.shape(),
            field.r2().shape()
        )));
    }
    if timestamps.len() != n {
        return Err(Error::LengthMismatch { left: timestamps.len(), right: n });
    }
    let grid = field.grid();
    let scales: Vec<usize> =
        (0..grid.len()).filter(|&j| grid.fourier_periods()[j] <= options.max_period * (1.0 + 1e-12)).collect();
    if scales.is_empty() {
        return Err(Error::InvalidInput(format!("no scale has a Fourier period at or below {}", options.max_period)));
    }
    let values = (0..n)
        .map(|u| {
            let (mut acc, mut count) = (0.0, 0usize);
            for &j in &scales {
                if !options.include_coi && !field.coi().contains(u, grid.scales()[j]) {
                    continue;
                }
                count += 1;
                if sig.mask[(j, u)] {
                    let r2 = field.r2()[(j, u)];
                    acc += if field.phase()[(j, u)].abs() > FRAC_PI_2 { -r2 } else { r2 };
                }
            }
            if count == 0 {
                return 0.0;
            }
            let mean = acc / count as f64;
            mean.signum() * mean.abs().sqrt().min(1.0)
        })
        .map(|v| if v == 0.0 { 0.0 } else { v })
        .collect();
    CorrelationTrack::new(timestamps.to_vec(), values, TrackMethod::Wtc)
}

/// Arithmetic mean and sample standard deviation.
pub fn track_summary(track: &CorrelationTrack) -> Result<(f64, f64)> {
    summary(&track.values)
}

pub(crate) fn summary(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidInput("empty correlation track".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// Two-column `date,value` CSV preceded by a `# key: value` header.
pub fn write_track_csv<W: Write>(mut out: W, track: &CorrelationTrack, meta: &Metadata) -> Result<()> {
    let mut header = meta.clone();
    header.set("method", track.method.as_str());
    out.write_all(header.render().as_bytes())?;
    writeln!(out, "date,value")?;
    for (d, v) in track.timestamps.iter().zip(&track.values) {
        writeln!(out, "{},{}", d.format("%Y-%m-%d"), v)?;
    }
    Ok(())
}

pub fn save_track_csv(path: &Path, track: &CorrelationTrack, meta: &Metadata) -> Result<()> {
    let mut buf = Vec::new();
    write_track_csv(&mut buf, track, meta)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_track_csv<R: Read>(input: R) -> Result<(CorrelationTrack, Metadata)> {
    let mut lines = BufReader::new(input).lines();
    let (meta, first) = Metadata::parse_header(&mut lines)?;
    if first.as_deref() != Some("date,value") {
        return Err(Error::Sidecar(format!("expected 'date,value' column header, got {first:?}")));
    }
    let method = TrackMethod::parse(meta.get("method").unwrap_or("wtc"))?;
    let (mut timestamps, mut values) = (Vec::new(), Vec::new());
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (d, v) = line.split_once(',').ok_or_else(|| Error::Sidecar(format!("bad track row '{line}'")))?;
        timestamps.push(
            NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|e| Error::Sidecar(format!("bad date '{d}': {e}")))?,
        );
        values.push(v.parse().map_err(|_| Error::Sidecar(format!("bad value '{v}'")))?);
    }
    Ok((CorrelationTrack::new(timestamps, values, method)?, meta))
}
