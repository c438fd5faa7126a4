//! Morlet continuous wavelet transform.
//!
//! Coefficients follow the discretized projection
//!
//! ```text
//! W(u, s) = Σ_t x(t) · dt/√s · conj(ψ((t − u)·dt / s))
//! ```
//!
//! evaluated as a circular convolution on a zero-padded buffer. The buffer
//! length (next power of two ≥ 2n) guarantees that no lag used by an output
//! sample wraps around, so the FFT path reproduces the direct sum exactly
//! up to rounding.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Kernel support in units of scale; |ψ| < 1.3e-14 beyond it.
const KERNEL_HALF_WIDTH: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorletParams {
    omega0: f64,
}

impl MorletParams {
    /// Central frequencies below 5 break the zero-mean approximation.
    pub fn new(omega0: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega0 >= 5.0) {
            return Err(Error::InvalidInput(format!("omega0 must be >= 5, got {omega0}")));
        }
        Ok(Self { omega0 })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Ratio of Fourier period to scale.
    pub fn fourier_factor(&self) -> f64 {
        4.0 * PI / (self.omega0 + (2.0 + self.omega0 * self.omega0).sqrt())
    }

    /// ½ ∫₀^∞ |Ψ(ω)|²/ω dω, the normalizer of the energy identity for real
    /// signals analysed with an analytic wavelet.
    pub fn admissibility_constant(&self) -> f64 {
        // Composite Simpson over the Gaussian's support; the integrand is
        // below e⁻¹⁰⁰ outside ω0 ± 10.
        let lo = (self.omega0 - 10.0).max(1e-9);
        let hi = self.omega0 + 10.0;
        let steps = 20_000;
        let h = (hi - lo) / steps as f64;
        let f = |w: f64| {
            let psi = morlet_fourier(w, 1.0, 1.0, self);
            psi * psi / w
        };
        let mut acc = f(lo) + f(hi);
        for k in 1..steps {
            let w = lo + k as f64 * h;
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(w);
        }
        0.5 * acc * h / 3.0
    }
}

impl Default for MorletParams {
    fn default() -> Self {
        Self { omega0: 6.0 }
    }
}

/// ψ(t) = π^(−1/4) · e^(iω0t) · e^(−t²/2)
pub fn morlet(t: f64, params: &MorletParams) -> Complex64 {
    let envelope = PI.powf(-0.25) * (-0.5 * t * t).exp();
    Complex64::from_polar(envelope, params.omega0 * t)
}

/// Fourier transform of the scaled Morlet, analytic form (zero for ω ≤ 0).
///
/// `π^(−1/4) · √(2πs/dt) · exp(−(sω − ω0)²/2)`
pub fn morlet_fourier(omega: f64, s: f64, dt: f64, params: &MorletParams) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    let d = s * omega - params.omega0;
    PI.powf(-0.25) * (2.0 * PI * s / dt).sqrt() * (-0.5 * d * d).exp()
}

/// Dyadic scale ladder `s_j = s0 · 2^(j·dj)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    s0: f64,
    dj: f64,
    dt: f64,
    params: MorletParams,
    scales: Vec<f64>,
    fourier_periods: Vec<f64>,
}

impl ScaleGrid {
    pub fn new(s0: f64, dj: f64, num_scales: usize, dt: f64, params: MorletParams) -> Result<Self> {
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::InvalidInput(format!("s0 must be positive, got {s0}")));
        }
        if !(dj > 0.0 && dj.is_finite()) {
            return Err(Error::InvalidInput(format!("dj must be positive, got {dj}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        if num_scales == 0 {
            return Err(Error::InvalidInput("scale grid needs at least one scale".into()));
        }
        let ff = params.fourier_factor();
        let scales: Vec<f64> = (0..num_scales).map(|j| s0 * (j as f64 * dj).exp2()).collect();
        let fourier_periods = scales.iter().map(|s| s * ff).collect();
        Ok(Self { s0, dj, dt, params, scales, fourier_periods })
    }

    /// Smallest ladder whose top Fourier period reaches `max_period`, capped
    /// at half the series span. For short series the top period is the
    /// largest one not exceeding `n·dt/2`.
    pub fn covering(s0: f64, dj: f64, max_period: f64, n: usize, dt: f64, params: MorletParams) -> Result<Self> {
        if n < 16 {
            return Err(Error::TooShort { required: 16, actual: n });
        }
        if !(max_period > 0.0) {
            return Err(Error::InvalidInput(format!("max period must be positive, got {max_period}")));
        }
        let ff = params.fourier_factor();
        let cap = n as f64 * dt / 2.0;
        let period = |j: usize| ff * s0 * (j as f64 * dj).exp2();
        if period(0) > cap {
            return Err(Error::TooShort { required: (2.0 * period(0) / dt).ceil() as usize, actual: n });
        }
        let target = max_period.min(cap);
        let mut j = 0;
        while period(j) < target - 1e-9 * target {
            j += 1;
        }
        if period(j) > cap {
            j -= 1;
        }
        Self::new(s0, dj, j + 1, dt, params)
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn dj(&self) -> f64 {
        self.dj
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &MorletParams {
        &self.params
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn fourier_periods(&self) -> &[f64] {
        &self.fourier_periods
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }
}

/// Default ladder: s0 = 2·dt, twelve voices per octave, top period at least
/// 256·dt and at most min(512·dt, n·dt/2).
pub fn default_scale_grid(n: usize, dt: f64) -> Result<ScaleGrid> {
    ScaleGrid::covering(2.0 * dt, 1.0 / 12.0, 256.0 * dt, n, dt, MorletParams::default())
}

/// Complex coefficients on a (scale × time) lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletField {
    coefficients: Matrix<Complex64>,
    grid: ScaleGrid,
    /// Sample mean removed before the transform.
    mean: f64,
}

impl WaveletField {
    pub fn coefficients(&self) -> &Matrix<Complex64> {
        &self.coefficients
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    /// Series length.
    pub fn n(&self) -> usize {
        self.coefficients.cols()
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn get(&self, scale_index: usize, time: usize) -> Complex64 {
        self.coefficients[(scale_index, time)]
    }
}

/// Precomputed kernel spectra for one (length, grid) combination.
///
/// Reusing a plan across many inputs of the same length avoids rebuilding
/// the per-scale kernels, which dominates Monte Carlo runs.
pub struct CwtPlan {
    n: usize,
    padded: usize,
    grid: ScaleGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernels: Vec<Vec<Complex64>>,
}

impl CwtPlan {
    pub fn new(n: usize, grid: &ScaleGrid) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooShort { required: 2, actual: n });
        }
        let padded = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(padded);
        let inverse = planner.plan_fft_inverse(padded);
        let dt = grid.dt;
        let kernels = grid
            .scales
            .par_iter()
            .map(|&s| {
                // Convolution kernel h(m) = dt/√s · ψ(m·dt/s); lags beyond n − 1
                // never reach an output sample.
                let reach = ((KERNEL_HALF_WIDTH * s / dt).ceil() as usize).min(n - 1);
                let norm = dt / s.sqrt();
                let mut buf = vec![Complex64::new(0.0, 0.0); padded];
                buf[0] = norm * morlet(0.0, &grid.params);
                for m in 1..=reach {
                    let tau = m as f64 * dt / s;
                    buf[m] = norm * morlet(tau, &grid.params);
                    buf[padded - m] = norm * morlet(-tau, &grid.params);
                }
                forward.process(&mut buf);
                buf
            })
            .collect();
        Ok(Self { n, padded, grid: grid.clone(), forward, inverse, kernels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn padded_len(&self) -> usize {
        self.padded
    }

    pub fn transform(&self, x: &[f64]) -> Result<WaveletField> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch { left: x.len(), right: self.n });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mean = x.iter().sum::<f64>() / self.n as f64;
        let mut spectrum = vec![Complex64::new(0.0, 0.0); self.padded];
        for (dst, &v) in spectrum.iter_mut().zip(x) {
            dst.re = v - mean;
        }
        self.forward.process(&mut spectrum);

        let n = self.n;
        let inv_len = 1.0 / self.padded as f64;
        let rows: Vec<Vec<Complex64>> = self
            .kernels
            .par_iter()
            .map(|kernel| {
                let mut buf: Vec<Complex64> = spectrum.iter().zip(kernel).map(|(a, b)| a * b).collect();
                self.inverse.process(&mut buf);
                buf.truncate(n);
                buf.iter_mut().for_each(|c| *c *= inv_len);
                buf
            })
            .collect();
        Ok(WaveletField { coefficients: Matrix::from_rows(rows), grid: self.grid.clone(), mean })
    }
}

/// Transforms `x` on `grid`; the input is de-meaned and zero-padded first.
pub fn cwt(x: &[f64], grid: &ScaleGrid) -> Result<WaveletField> {
    CwtPlan::new(x.len(), grid)?.transform(x)
}

/// Reconstruction factor `K` for [`reconstruct`], from the flat-band gain
/// of the scale sum: a cosine at angular frequency ω inside the resolved
/// band returns `½ · Σ_j Ψ(s_j ω)` ≈ `∫₀^∞ Ψ(ξ)/ξ dξ / (2·dj·ln2)`.
pub fn reconstruction_factor(grid: &ScaleGrid) -> f64 {
    let params = &grid.params;
    let lo = (params.omega0 - 10.0).max(1e-9);
    let hi = params.omega0 + 10.0;
    let steps = 20_000;
    let h = (hi - lo) / steps as f64;
    let f = |w: f64| morlet_fourier(w, 1.0, 1.0, params) / w;
    let mut acc = f(lo) + f(hi);
    for k in 1..steps {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(lo + k as f64 * h);
    }
    let integral = acc * h / 3.0;
    2.0 * grid.dj * LN_2 / integral
}

/// Factor that makes [`reconstruct`] return a unit impulse exactly at its
/// own location. It averages the scale-sum response over every frequency up
/// to Nyquist, including the band above the smallest scale, so it runs a few
/// percent high relative to [`reconstruction_factor`] for s0 = 2·dt.
pub fn delta_reconstruction_factor(grid: &ScaleGrid) -> Result<f64> {
    let s_max = grid.scales.last().copied().unwrap_or(grid.s0);
    let half = (KERNEL_HALF_WIDTH * s_max / grid.dt).ceil() as usize + 1;
    let len = 2 * half + 1;
    let mut delta = vec![0.0; len];
    delta[half] = 1.0;
    let field = cwt(&delta, grid)?;
    let response: f64 = grid.scales.iter().enumerate().map(|(j, s)| field.get(j, half).re / s.sqrt()).sum();
    // The de-meaned impulse peaks at 1 − 1/len.
    Ok((1.0 - 1.0 / len as f64) / response)
}

/// Inverse transform by summing real parts over scales,
/// `x(u) ≈ K · Σ_j Re W(u, s_j) / √s_j`, with `K` from
/// [`reconstruction_factor`]. The removed mean is restored.
pub fn reconstruct(field: &WaveletField) -> Result<Vec<f64>> {
    let grid = &field.grid;
    if grid.dj > 0.25 {
        return Err(Error::SparseGrid(grid.dj));
    }
    let factor = reconstruction_factor(grid);
    let weights: Vec<f64> = grid.scales.iter().map(|s| 1.0 / s.sqrt()).collect();
    let out = (0..field.n())
        .map(|u| {
            let acc: f64 = weights.iter().enumerate().map(|(j, w)| field.get(j, u).re * w).sum();
            factor * acc + field.mean
        })
        .collect();
    Ok(out)
}

/// Per-time energy density `(1/C_ψ) · Σ_j |W(u, s_j)|² · dj·ln2 / s_j`.
pub fn energy_density(field: &WaveletField) -> Vec<f64> {
    let grid = &field.grid;
    let c_psi = grid.params.admissibility_constant();
    let weights: Vec<f64> = grid.scales.iter().map(|s| grid.dj * LN_2 / s / c_psi).collect();
    (0..field.n()).map(|u| weights.iter().enumerate().map(|(j, w)| field.get(j, u).norm_sqr() * w).sum()).collect()
}

/// Discretized energy identity: approximates Σ (x − x̄)² · dt.
pub fn energy(field: &WaveletField) -> f64 {
    energy_density(field).iter().sum::<f64>() * field.dt()
}

/// Largest trustworthy scale at each time index.
///
/// A point (u, s) is outside the edge-affected region when the Morlet
/// e-folding time √2·s fits between u and the nearer series end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeOfInfluence {
    boundary: Vec<f64>,
}

impl ConeOfInfluence {
    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    /// True when `scale` at time `u` is free of edge effects.
    pub fn contains(&self, u: usize, scale: f64) -> bool {
        scale <= self.boundary[u]
    }

    /// Boundary expressed as a Fourier period.
    pub fn period_boundary(&self, params: &MorletParams) -> Vec<f64> {
        let ff = params.fourier_factor();
        self.boundary.iter().map(|b| b * ff).collect()
    }
}

pub fn cone_of_influence(n: usize, dt: f64) -> ConeOfInfluence {
    let boundary = (0..n)
        .map(|u| {
            let edge = u.min(n - 1 - u) as f64;
            edge * dt / SQRT_2
        })
        .collect();
    ConeOfInfluence { boundary }
}
