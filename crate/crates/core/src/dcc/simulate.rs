//! Simulators for GARCH and DCC-GARCH processes.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::garch::GarchParams;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const BURN_IN: usize = 500;

/// Zero-mean GARCH path of length `n`, started at the unconditional
/// variance and run through a burn-in.
pub fn simulate_garch<R: Rng + ?Sized>(params: &GarchParams, n: usize, rng: &mut R) -> Vec<f64> {
    let z: Vec<f64> = (0..n + BURN_IN).map(|_| rng.sample(StandardNormal)).collect();
    let mut sim = GarchState::new(params);
    z.into_iter().map(|z| sim.step(z)).skip(BURN_IN).collect()
}

struct GarchState<'a> {
    params: &'a GarchParams,
    eps2: Vec<f64>,
    h: Vec<f64>,
}

impl<'a> GarchState<'a> {
    fn new(params: &'a GarchParams) -> Self {
        let v = params.unconditional_variance();
        Self { params, eps2: vec![v; params.alpha.len()], h: vec![v; params.beta.len()] }
    }

    fn variance(&self) -> f64 {
        let p = self.params;
        p.omega
            + p.alpha.iter().zip(&self.eps2).map(|(a, e)| a * e).sum::<f64>()
            + p.beta.iter().zip(&self.h).map(|(b, h)| b * h).sum::<f64>()
    }

    /// Advances one step with standardized shock `z`, returning the return.
    fn step(&mut self, z: f64) -> f64 {
        let h = self.variance();
        let e = h.sqrt() * z;
        if !self.eps2.is_empty() {
            self.eps2.rotate_right(1);
            self.eps2[0] = e * e;
        }
        if !self.h.is_empty() {
            self.h.rotate_right(1);
            self.h[0] = h;
        }
        e
    }
}

/// Simulated DCC-GARCH sample: returns (time × series) and the true
/// conditional correlation matrices.
#[derive(Debug, Clone)]
pub struct DccSample {
    pub returns: Matrix<f64>,
    pub correlations: Vec<Matrix<f64>>,
}

/// Draws `n` observations of a DCC-GARCH process whose long-run correlation
/// target is `qbar` (a correlation matrix).
pub fn simulate_dcc<R: Rng + ?Sized>(
    garch: &[GarchParams],
    alpha: f64,
    beta: f64,
    qbar: &Matrix<f64>,
    n: usize,
    rng: &mut R,
) -> Result<DccSample> {
    let k = garch.len();
    if k < 2 || qbar.shape() != (k, k) {
        return Err(Error::InvalidInput("need at least two series and a matching k x k target".into()));
    }
    if !(alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0) {
        return Err(Error::InvalidInput(format!("DCC parameters ({alpha}, {beta}) are not feasible")));
    }
    let qbar = DMatrix::from_row_slice(k, k, qbar.as_slice());
    if qbar.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite("correlation target".into()));
    }
    let mut states: Vec<GarchState> = garch.iter().map(GarchState::new).collect();
    let mut q = qbar.clone();
    let mut returns = Vec::with_capacity(n * k);
    let mut correlations = Vec::with_capacity(n);
    for t in 0..n + BURN_IN {
        let d = DVector::from_iterator(k, (0..k).map(|i| 1.0 / q[(i, i)].sqrt()));
        let r = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { q[(i, j)] * d[i] * d[j] });
        let chol = r.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite(format!("R at step {t}")))?;
        let z = DVector::from_iterator(k, (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let eta = chol.l() * z;
        if t >= BURN_IN {
            correlations.push(Matrix::from_vec(k, k, r.transpose().as_slice().to_vec()));
            returns.extend(states.iter_mut().zip(eta.iter()).map(|(s, e)| s.step(*e)));
        } else {
            states.iter_mut().zip(eta.iter()).for_each(|(s, e)| {
                s.step(*e);
            });
        }
        q = &qbar * (1.0 - alpha - beta) + &eta * eta.transpose() * alpha + &q * beta;
    }
    Ok(DccSample { returns: Matrix::from_vec(n, k, returns), correlations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn garch_sample_has_unconditional_variance() {
        let p = GarchParams::garch11(0.1, 0.05, 0.85).unwrap();
        let x = simulate_garch(&p, 100_000, &mut ChaCha8Rng::seed_from_u64(1));
        let v = x.iter().map(|e| e * e).sum::<f64>() / x.len() as f64;
        assert!((v - 1.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn dcc_sample_correlation_near_target() {
        let g = GarchParams::garch11(0.05, 0.05, 0.9).unwrap();
        let qbar = Matrix::from_rows(vec![vec![1.0, 0.6], vec![0.6, 1.0]]);
        let s = simulate_dcc(&[g.clone(), g], 0.03, 0.9, &qbar, 20_000, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(s.returns.shape(), (20_000, 2));
        let mean_r = s.correlations.iter().map(|r| r[(0, 1)]).sum::<f64>() / 20_000.0;
        assert!((mean_r - 0.6).abs() < 0.05, "{mean_r}");
        assert!(s.correlations.iter().all(|r| r[(0, 0)] == 1.0 && r[(0, 1)].abs() <= 1.0));
    }
}
