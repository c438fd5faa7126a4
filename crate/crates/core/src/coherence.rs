//! Cross-wavelet spectrum, time/scale smoothing and squared coherence.
//!
//! ```text
//! R²(u,s) = |S(W_xy/s)|² / (S(|W_x|²/s) · S(|W_y|²/s))
//! φ(u,s)  = arg S(W_xy/s)
//! ```
//!
//! `S` convolves each scale row with a Gaussian whose standard deviation is
//! proportional to the scale, then each time column with a boxcar spanning a
//! fixed number of octaves. Both windows are renormalized at the edges, so a
//! constant field is left unchanged.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::cwt::{cone_of_influence, ConeOfInfluence, CwtPlan, ScaleGrid, WaveletField};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Rows at least this long are smoothed through the FFT.
pub const FFT_ROW_THRESHOLD: usize = 1024;

/// Gaussian truncation radius in standard deviations.
const GAUSS_RADIUS: f64 = 4.0;

const DENOM_FLOOR: f64 = 1e-300;
const CLIP_TOLERANCE: f64 = 1e-6;
const CLIP_FRACTION_LIMIT: f64 = 1e-3;

/// Smoothing windows. A zero width disables that direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherSpec {
    /// Gaussian standard deviation as a multiple of the scale (in samples).
    pub time_sigma: f64,
    /// Boxcar width across scales, in octaves.
    pub scale_width: f64,
}

impl SmootherSpec {
    /// No smoothing at all; coherence then degenerates to one everywhere.
    pub const IDENTITY: SmootherSpec = SmootherSpec { time_sigma: 0.0, scale_width: 0.0 };

    pub fn validate(&self) -> Result<()> {
        if !(self.time_sigma >= 0.0 && self.time_sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("time_sigma must be >= 0, got {}", self.time_sigma)));
        }
        if !(self.scale_width >= 0.0 && self.scale_width.is_finite()) {
            return Err(Error::InvalidInput(format!("scale_width must be >= 0, got {}", self.scale_width)));
        }
        Ok(())
    }
}

impl Default for SmootherSpec {
    /// σ = s and a 0.6-octave scale window.
    fn default() -> Self {
        Self { time_sigma: 1.0, scale_width: 0.6 }
    }
}

/// How rows are convolved in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmoothPath {
    /// Direct below [`FFT_ROW_THRESHOLD`], FFT otherwise.
    #[default]
    Auto,
    Direct,
    Fft,
}

struct RowKernel {
    /// Weights for lags −radius..=radius.
    weights: Vec<f64>,
    radius: usize,
    /// Σ of in-range weights per output sample.
    norm: Vec<f64>,
    spectrum: Option<Vec<Complex64>>,
}

struct FftPair {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Smoothing operator precomputed for a fixed (length, grid, spec).
pub struct Smoother {
    n: usize,
    rows: Vec<Option<RowKernel>>,
    /// Per output row: (source row, weight), weights summing to one.
    scale_taps: Vec<Vec<(usize, f64)>>,
    fft: Option<FftPair>,
}

impl Smoother {
    pub fn new(n: usize, grid: &ScaleGrid, spec: &SmootherSpec) -> Result<Self> {
        Self::with_path(n, grid, spec, SmoothPath::Auto)
    }

    pub fn with_path(n: usize, grid: &ScaleGrid, spec: &SmootherSpec, path: SmoothPath) -> Result<Self> {
        spec.validate()?;
        if n == 0 {
            return Err(Error::TooShort { required: 1, actual: 0 });
        }
        let use_fft = match path {
            SmoothPath::Auto => n >= FFT_ROW_THRESHOLD,
            SmoothPath::Direct => false,
            SmoothPath::Fft => true,
        };
        let mut rows: Vec<Option<RowKernel>> = grid
            .scales()
            .iter()
            .map(|&s| {
                let sigma = spec.time_sigma * s / grid.dt();
                (sigma > 0.0).then(|| gaussian_kernel(sigma, n))
            })
            .collect();

        let fft = if use_fft {
            let max_radius = rows.iter().flatten().map(|k| k.radius).max().unwrap_or(0);
            let len = (n + 2 * max_radius).next_power_of_two();
            let mut planner = FftPlanner::new();
            let pair = FftPair { len, forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len) };
            for kernel in rows.iter_mut().flatten() {
                let mut buf = vec![Complex64::new(0.0, 0.0); len];
                for (i, &w) in kernel.weights.iter().enumerate() {
                    // Lag i − radius lands at index (i − radius) mod len.
                    let idx = (i + len - kernel.radius) % len;
                    buf[idx].re = w;
                }
                pair.forward.process(&mut buf);
                kernel.spectrum = Some(buf);
            }
            Some(pair)
        } else {
            None
        };

        let scale_taps = boxcar_taps(grid.len(), spec.scale_width / grid.dj());
        Ok(Self { n, rows, scale_taps, fft })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Applies time then scale smoothing.
    pub fn smooth(&self, m: &Matrix<Complex64>) -> Result<Matrix<Complex64>> {
        if m.rows() != self.rows.len() || m.cols() != self.n {
            return Err(Error::InvalidInput(format!(
                "matrix shape {:?} does not match smoother ({}, {})",
                m.shape(),
                self.rows.len(),
                self.n
            )));
        }
        let timed: Vec<Vec<Complex64>> = self
            .rows
            .par_iter()
            .enumerate()
            .map(|(j, kernel)| match kernel {
                None => m.row(j).to_vec(),
                Some(k) => match (&self.fft, &k.spectrum) {
                    (Some(fft), Some(spec)) => convolve_fft(m.row(j), k, spec, fft),
                    _ => convolve_direct(m.row(j), k),
                },
            })
            .collect();

        let n = self.n;
        let out: Vec<Vec<Complex64>> = self
            .scale_taps
            .par_iter()
            .map(|taps| {
                let mut row = vec![Complex64::new(0.0, 0.0); n];
                for &(src, w) in taps {
                    for (dst, v) in row.iter_mut().zip(&timed[src]) {
                        *dst += v * w;
                    }
                }
                row
            })
            .collect();
        Ok(Matrix::from_rows(out))
    }
}

fn gaussian_kernel(sigma: f64, n: usize) -> RowKernel {
    let radius = ((GAUSS_RADIUS * sigma).ceil() as usize).min(n.saturating_sub(1));
    let weights: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let lag = i as f64 - radius as f64;
            (-0.5 * lag * lag / (sigma * sigma)).exp()
        })
        .collect();
    // prefix[k] = Σ weights[..k]
    let mut prefix = vec![0.0; weights.len() + 1];
    for (i, w) in weights.iter().enumerate() {
        prefix[i + 1] = prefix[i] + w;
    }
    let norm = (0..n)
        .map(|u| {
            // lags m with 0 ≤ u + m < n, |m| ≤ radius
            let lo = radius.saturating_sub(u);
            let hi = (radius + (n - 1 - u)).min(2 * radius);
            prefix[hi + 1] - prefix[lo]
        })
        .collect();
    RowKernel { weights, radius, norm, spectrum: None }
}

fn convolve_direct(row: &[Complex64], k: &RowKernel) -> Vec<Complex64> {
    let n = row.len();
    let r = k.radius as isize;
    (0..n)
        .map(|u| {
            let lo = (-r).max(-(u as isize));
            let hi = r.min((n - 1 - u) as isize);
            let mut acc = Complex64::new(0.0, 0.0);
            for m in lo..=hi {
                acc += row[(u as isize + m) as usize] * k.weights[(m + r) as usize];
            }
            acc / k.norm[u]
        })
        .collect()
}

fn convolve_fft(row: &[Complex64], k: &RowKernel, spectrum: &[Complex64], fft: &FftPair) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); fft.len];
    buf[..row.len()].copy_from_slice(row);
    fft.forward.process(&mut buf);
    for (b, s) in buf.iter_mut().zip(spectrum) {
        *b *= s;
    }
    fft.inverse.process(&mut buf);
    let scale = 1.0 / fft.len as f64;
    buf.truncate(row.len());
    buf.iter_mut().zip(&k.norm).for_each(|(b, norm)| *b *= scale / norm);
    buf
}

/// Boxcar across `width` scale steps, weights given by the overlap of each
/// unit cell with the window, renormalized at the ends of the ladder.
fn boxcar_taps(num_scales: usize, width: f64) -> Vec<Vec<(usize, f64)>> {
    let half = width / 2.0;
    let reach = (half + 0.5).floor() as isize;
    let cell = |offset: isize| -> f64 {
        if width <= 0.0 {
            return if offset == 0 { 1.0 } else { 0.0 };
        }
        let lo = (offset as f64 - 0.5).max(-half);
        let hi = (offset as f64 + 0.5).min(half);
        (hi - lo).max(0.0)
    };
    (0..num_scales as isize)
        .map(|j| {
            let taps: Vec<(usize, f64)> = (-reach..=reach)
                .filter(|o| (0..num_scales as isize).contains(&(j + o)))
                .map(|o| ((j + o) as usize, cell(o)))
                .filter(|&(_, w)| w > 0.0)
                .collect();
            let total: f64 = taps.iter().map(|t| t.1).sum();
            taps.into_iter().map(|(src, w)| (src, w / total)).collect()
        })
        .collect()
}

/// One-shot smoothing; see [`Smoother`] for repeated use.
pub fn smooth(m: &Matrix<Complex64>, grid: &ScaleGrid, spec: &SmootherSpec) -> Result<Matrix<Complex64>> {
    Smoother::new(m.cols(), grid, spec)?.smooth(m)
}

/// `W_x · conj(W_y)`; its modulus is the cross-wavelet power.
pub fn cross_wavelet(wx: &WaveletField, wy: &WaveletField) -> Result<Matrix<Complex64>> {
    if wx.grid() != wy.grid() {
        return Err(Error::GridMismatch);
    }
    if wx.n() != wy.n() {
        return Err(Error::LengthMismatch { left: wx.n(), right: wy.n() });
    }
    Ok(wx.coefficients().zip_map(wy.coefficients(), |a, b| a * b.conj()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceField {
    r2: Matrix<f64>,
    phase: Matrix<f64>,
    coi: ConeOfInfluence,
    grid: ScaleGrid,
    smoother: SmootherSpec,
    sig_mask: Option<Matrix<bool>>,
    /// Entries above one that were clipped.
    clipped: usize,
    /// Entries whose denominator fell below 1e-300.
    guarded: usize,
}

impl CoherenceField {
    pub fn r2(&self) -> &Matrix<f64> {
        &self.r2
    }

    pub fn phase(&self) -> &Matrix<f64> {
        &self.phase
    }

    pub fn coi(&self) -> &ConeOfInfluence {
        &self.coi
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn smoother(&self) -> &SmootherSpec {
        &self.smoother
    }

    pub fn sig_mask(&self) -> Option<&Matrix<bool>> {
        self.sig_mask.as_ref()
    }

    pub fn set_sig_mask(&mut self, mask: Matrix<bool>) -> Result<()> {
        if mask.shape() != self.r2.shape() {
            return Err(Error::InvalidInput("significance mask shape mismatch".into()));
        }
        self.sig_mask = Some(mask);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.r2.cols()
    }

    pub fn clipped(&self) -> usize {
        self.clipped
    }

    pub fn guarded(&self) -> usize {
        self.guarded
    }

    /// Assembles a field from stored matrices, e.g. when re-reading output.
    pub fn from_parts(
        r2: Matrix<f64>,
        phase: Matrix<f64>,
        grid: ScaleGrid,
        smoother: SmootherSpec,
        sig_mask: Option<Matrix<bool>>,
    ) -> Result<Self> {
        if r2.rows() != grid.len() || phase.shape() != r2.shape() {
            return Err(Error::InvalidInput("coherence matrices do not match the grid".into()));
        }
        if sig_mask.as_ref().is_some_and(|m| m.shape() != r2.shape()) {
            return Err(Error::InvalidInput("significance mask shape mismatch".into()));
        }
        let coi = cone_of_influence(r2.cols(), grid.dt());
        Ok(Self { r2, phase, coi, grid, smoother, sig_mask, clipped: 0, guarded: 0 })
    }
}

/// Phase of the smoothed cross spectrum at (time `u`, scale index `j`), in
/// (−π, π]. Positive values mean the first series leads.
pub fn phase_difference(field: &CoherenceField, u: usize, j: usize) -> Result<f64> {
    let (rows, cols) = field.phase.shape();
    if j >= rows || u >= cols {
        return Err(Error::IndexOutOfRange(format!("(u={u}, scale={j}) outside {cols}x{rows}")));
    }
    Ok(field.phase[(j, u)])
}

/// Reusable transform + smoothing pipeline for a fixed length and grid.
pub struct CoherenceEngine {
    plan: CwtPlan,
    smoother: Smoother,
    spec: SmootherSpec,
}

impl CoherenceEngine {
    pub fn new(n: usize, grid: &ScaleGrid, spec: &SmootherSpec) -> Result<Self> {
        Self::with_path(n, grid, spec, SmoothPath::Auto)
    }

    pub fn with_path(n: usize, grid: &ScaleGrid, spec: &SmootherSpec, path: SmoothPath) -> Result<Self> {
        if n < 16 {
            return Err(Error::TooShort { required: 16, actual: n });
        }
        Ok(Self { plan: CwtPlan::new(n, grid)?, smoother: Smoother::with_path(n, grid, spec, path)?, spec: *spec })
    }

    pub fn grid(&self) -> &ScaleGrid {
        self.plan.grid()
    }

    pub fn plan(&self) -> &CwtPlan {
        &self.plan
    }

    pub fn coherence(&self, x: &[f64], y: &[f64]) -> Result<CoherenceField> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
        }
        for v in [x, y] {
            if crate::timeseries::sample_variance(v) <= 0.0 {
                return Err(Error::ZeroVariance);
            }
        }
        let wx = self.plan.transform(x)?;
        let wy = self.plan.transform(y)?;
        self.from_transforms(&wx, &wy)
    }

    pub fn from_transforms(&self, wx: &WaveletField, wy: &WaveletField) -> Result<CoherenceField> {
        let grid = self.plan.grid();
        if wx.grid() != grid || wy.grid() != grid {
            return Err(Error::GridMismatch);
        }
        let n = wx.n();
        if n != self.plan.n() || wy.n() != n {
            return Err(Error::LengthMismatch { left: wx.n(), right: self.plan.n() });
        }
        let rows = grid.len();
        let mut cross = Matrix::filled(rows, n, Complex64::new(0.0, 0.0));
        // Both auto-spectra ride in one complex matrix: the kernels are real.
        let mut auto = Matrix::filled(rows, n, Complex64::new(0.0, 0.0));
        for (j, &s) in grid.scales().iter().enumerate() {
            let inv = 1.0 / s;
            let (ax, ay) = (wx.coefficients().row(j), wy.coefficients().row(j));
            for (u, (a, b)) in ax.iter().zip(ay).enumerate() {
                cross[(j, u)] = a * b.conj() * inv;
                auto[(j, u)] = Complex64::new(a.norm_sqr() * inv, b.norm_sqr() * inv);
            }
        }
        let cross = self.smoother.smooth(&cross)?;
        let auto = self.smoother.smooth(&auto)?;

        let mut r2 = Matrix::filled(rows, n, 0.0);
        let mut phase = Matrix::filled(rows, n, 0.0);
        let (mut clipped, mut guarded, mut excessive) = (0usize, 0usize, 0usize);
        for j in 0..rows {
            for u in 0..n {
                let c = cross[(j, u)];
                let a = auto[(j, u)];
                let denom = a.re * a.im;
                phase[(j, u)] = canonical_angle(c.im.atan2(c.re));
                if !(denom >= DENOM_FLOOR) {
                    guarded += 1;
                    continue;
                }
                let mut v = c.norm_sqr() / denom;
                if v > 1.0 {
                    if v > 1.0 + CLIP_TOLERANCE {
                        excessive += 1;
                    }
                    clipped += 1;
                    v = 1.0;
                }
                r2[(j, u)] = v;
            }
        }
        if excessive as f64 > CLIP_FRACTION_LIMIT * (rows * n) as f64 {
            return Err(Error::Invariant(format!("{excessive} coherence values exceed 1 + {CLIP_TOLERANCE}")));
        }
        Ok(CoherenceField {
            r2,
            phase,
            coi: cone_of_influence(n, grid.dt()),
            grid: grid.clone(),
            smoother: self.spec,
            sig_mask: None,
            clipped,
            guarded,
        })
    }
}

/// Maps −π to π so angles lie in (−π, π].
fn canonical_angle(a: f64) -> f64 {
    if a <= -std::f64::consts::PI {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// Squared wavelet coherence and phase of two equal-length series.
pub fn wavelet_coherence(x: &[f64], y: &[f64], grid: &ScaleGrid, spec: &SmootherSpec) -> Result<CoherenceField> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    CoherenceEngine::new(x.len(), grid, spec)?.coherence(x, y)
}
