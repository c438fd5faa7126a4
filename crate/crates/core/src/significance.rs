//! Monte Carlo significance of coherence against AR(1) red noise.
//!
//! Each surrogate pair is drawn from its own ChaCha stream keyed by
//! `(seed, surrogate index)`, and surrogate coherences are pooled into
//! integer histograms, so the result does not depend on thread count or
//! scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherence::{CoherenceEngine, CoherenceField};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const SIGNIFICANCE_LEVEL: f64 = 0.95;
pub const MIN_SURROGATES: usize = 100;
pub const DEFAULT_SURROGATES: usize = 300;

const PHI_CAP: f64 = 0.99;
/// Histogram resolution for pooled coherence values on [0, 1].
const BINS: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Model {
    phi: f64,
    sigma: f64,
    mean: f64,
}

impl Ar1Model {
    pub fn new(phi: f64, sigma: f64, mean: f64) -> Result<Self> {
        if !(phi.abs() < 1.0) {
            return Err(Error::InvalidInput(format!("AR(1) coefficient must satisfy |phi| < 1, got {phi}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("AR(1) sigma must be positive, got {sigma}")));
        }
        if !mean.is_finite() {
            return Err(Error::InvalidInput("AR(1) mean must be finite".into()));
        }
        Ok(Self { phi, sigma, mean })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }
}

/// Lag-1 autocorrelation model, with the coefficient floored at zero and
/// capped at 0.99.
pub fn fit_ar1(x: &[f64]) -> Result<Ar1Model> {
    let n = x.len();
    if n < 8 {
        return Err(Error::TooShort { required: 8, actual: n });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c0: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    if !(c0 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let c1: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    let phi = (c1 / c0).clamp(0.0, PHI_CAP);
    let variance = c0 / (n as f64 - 1.0);
    let sigma = (variance * (1.0 - phi * phi)).sqrt();
    Ar1Model::new(phi, sigma, mean)
}

/// RNG stream for one surrogate.
pub fn surrogate_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stationary AR(1) path; the first value comes from the stationary law.
pub fn surrogate<R: Rng + ?Sized>(model: &Ar1Model, n: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let stationary_sd = model.sigma / (1.0 - model.phi * model.phi).sqrt();
    let mut dev = stationary_sd * rng.sample::<f64, _>(StandardNormal);
    out.push(model.mean + dev);
    for _ in 1..n {
        dev = model.phi * dev + model.sigma * rng.sample::<f64, _>(StandardNormal);
        out.push(model.mean + dev);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceResult {
    /// 95th-percentile surrogate coherence per scale.
    pub threshold_by_scale: Vec<f64>,
    /// `r2 > threshold` for each (scale, time).
    pub mask: Matrix<bool>,
    pub num_surrogates: usize,
    pub seed: u64,
}

impl SignificanceResult {
    /// Fraction of trustworthy (outside-cone) points flagged significant.
    pub fn fraction_outside_coi(&self, field: &CoherenceField) -> f64 {
        let (mut hits, mut total) = (0usize, 0usize);
        for (j, &s) in field.grid().scales().iter().enumerate() {
            for u in 0..field.n() {
                if field.coi().contains(u, s) {
                    total += 1;
                    hits += usize::from(self.mask[(j, u)]);
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        }
    }
}

struct Pool {
    counts: Vec<u32>,
    num_scales: usize,
}

impl Pool {
    fn new(num_scales: usize) -> Self {
        Self { counts: vec![0; num_scales * BINS], num_scales }
    }

    fn add(&mut self, j: usize, v: f64) {
        let b = ((v.clamp(0.0, 1.0) * BINS as f64) as usize).min(BINS - 1);
        self.counts[j * BINS + b] += 1;
    }

    fn merge(mut self, other: Pool) -> Pool {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }

    /// Linear interpolation inside the bin holding the q-quantile.
    fn quantile(&self, j: usize, q: f64) -> f64 {
        let row = &self.counts[j * BINS..(j + 1) * BINS];
        let total: u64 = row.iter().map(|&c| u64::from(c)).sum();
        if total == 0 {
            return 1.0;
        }
        let target = q * total as f64;
        let mut cum = 0u64;
        for (b, &c) in row.iter().enumerate() {
            let next = cum + u64::from(c);
            if next as f64 >= target && c > 0 {
                let frac = ((target - cum as f64) / c as f64).clamp(0.0, 1.0);
                return (b as f64 + frac) / BINS as f64;
            }
            cum = next;
        }
        1.0
    }
}

/// Thresholds each scale at the 95th percentile of surrogate coherence,
/// pooled over surrogates and over time points outside the cone of
/// influence (all time points when a scale has none outside it).
pub fn significance_test(
    field: &CoherenceField,
    mx: &Ar1Model,
    my: &Ar1Model,
    num_surrogates: usize,
    seed: u64,
) -> Result<SignificanceResult> {
    if num_surrogates < MIN_SURROGATES {
        return Err(Error::InvalidInput(format!("need at least {MIN_SURROGATES} surrogates, got {num_surrogates}")));
    }
    let n = field.n();
    let grid = field.grid();
    let engine = CoherenceEngine::new(n, grid, field.smoother())?;
    let coi = field.coi();
    let num_scales = grid.len();
    let pooled_times: Vec<Vec<usize>> = grid
        .scales()
        .iter()
        .map(|&s| {
            let inside: Vec<usize> = (0..n).filter(|&u| coi.contains(u, s)).collect();
            if inside.is_empty() {
                (0..n).collect()
            } else {
                inside
            }
        })
        .collect();

    let pool = (0..num_surrogates as u64)
        .into_par_iter()
        .try_fold(
            || Pool::new(num_scales),
            |mut pool, i| -> Result<Pool> {
                let mut rng = surrogate_stream(seed, i);
                let x = surrogate(mx, n, &mut rng);
                let y = surrogate(my, n, &mut rng);
                let f = engine.coherence(&x, &y)?;
                for (j, times) in pooled_times.iter().enumerate() {
                    let row = f.r2().row(j);
                    for &u in times {
                        pool.add(j, row[u]);
                    }
                }
                Ok(pool)
            },
        )
        .try_reduce(|| Pool::new(num_scales), |a, b| Ok(a.merge(b)))?;
    debug_assert_eq!(pool.num_scales, num_scales);

    let threshold_by_scale: Vec<f64> = (0..num_scales).map(|j| pool.quantile(j, SIGNIFICANCE_LEVEL)).collect();
    let mut mask = Matrix::filled(num_scales, n, false);
    for (j, &thr) in threshold_by_scale.iter().enumerate() {
        for (m, &v) in mask.row_mut(j).iter_mut().zip(field.r2().row(j)) {
            *m = v > thr;
        }
    }
    Ok(SignificanceResult { threshold_by_scale, mask, num_surrogates, seed })
}
