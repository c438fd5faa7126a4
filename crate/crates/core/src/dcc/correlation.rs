//! Second stage: the dynamic conditional correlation recursion.
//!
//! `Q_t = (1 − α − β) Q̄ + α η_{t−1} η_{t−1}ᵀ + β Q_{t−1}` with `Q_1 = Q̄`,
//! and `R_t` is `Q_t` rescaled to unit diagonal. The likelihood is the
//! correlation part of the Gaussian QML objective.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::garch::{opg_std_errors, MIN_OBSERVATIONS};
use super::optimize::{bfgs, persistence_coefficients, persistence_raw, Convergence};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Smallest admissible eigenvalue of Q̄ relative to its largest.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DccFit {
    pub alpha: f64,
    pub beta: f64,
    pub qbar: Matrix<f64>,
    /// One correlation matrix per observation.
    pub correlations: Vec<Matrix<f64>>,
    /// Correlation-stage log-likelihood.
    pub loglik: f64,
    /// OPG standard errors of (α, β); NaN when not estimated.
    pub std_errors: [f64; 2],
    pub convergence: Option<Convergence>,
}

impl DccFit {
    pub fn num_series(&self) -> usize {
        self.qbar.rows()
    }

    pub fn len(&self) -> usize {
        self.correlations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correlations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DccParams {
    pub alpha: f64,
    pub beta: f64,
}

/// Feasible (α, β) from two unconstrained values; always α, β ≥ 0 and
/// α + β < 1.
pub fn dcc_params_from_raw(raw: [f64; 2]) -> DccParams {
    let (c, _) = persistence_coefficients(&raw);
    DccParams { alpha: c[0], beta: c[1] }
}

struct Stage {
    eta: Vec<DVector<f64>>,
    qbar: DMatrix<f64>,
}

struct Evaluation {
    loglik: f64,
    grad: [f64; 2],
    scores: Vec<[f64; 2]>,
    correlations: Vec<DMatrix<f64>>,
}

impl Stage {
    fn new(eta: &Matrix<f64>) -> Result<Self> {
        let (t, n) = eta.shape();
        if n < 2 {
            return Err(Error::InvalidInput(format!("DCC needs at least two series, got {n}")));
        }
        if t < MIN_OBSERVATIONS {
            return Err(Error::TooShort { required: MIN_OBSERVATIONS, actual: t });
        }
        if let Some(i) = eta.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i / n));
        }
        let eta: Vec<DVector<f64>> = (0..t).map(|r| DVector::from_column_slice(eta.row(r))).collect();
        let mut qbar = DMatrix::zeros(n, n);
        for e in &eta {
            qbar += e * e.transpose();
        }
        qbar /= t as f64;
        let eig = qbar.clone().symmetric_eigen().eigenvalues;
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        if !(lo > RANK_TOL * hi) {
            return Err(Error::NotPositiveDefinite(format!(
                "unconditional residual covariance is rank deficient (eigenvalues {lo:e} to {hi:e})"
            )));
        }
        Ok(Self { eta, qbar })
    }

    fn evaluate(&self, p: DccParams, keep: bool) -> Option<Evaluation> {
        let n = self.qbar.nrows();
        let (a, b) = (p.alpha, p.beta);
        let mut q = self.qbar.clone();
        let mut dqa = DMatrix::zeros(n, n);
        let mut dqb = DMatrix::zeros(n, n);
        let mut loglik = 0.0;
        let mut grad = [0.0; 2];
        let mut scores = Vec::with_capacity(if keep { self.eta.len() } else { 0 });
        let mut correlations = Vec::with_capacity(scores.capacity());
        for e in &self.eta {
            let d: Vec<f64> = (0..n).map(|i| q[(i, i)].sqrt()).collect();
            let r = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { q[(i, j)] / (d[i] * d[j]) });
            let chol = r.clone().cholesky()?;
            let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            let x = chol.solve(e);
            let rinv = chol.inverse();
            let lt = -0.5 * (logdet + e.dot(&x) - e.dot(e));
            if !lt.is_finite() {
                return None;
            }
            loglik += lt;
            let mut st = [0.0; 2];
            for (slot, dq) in [&dqa, &dqb].into_iter().enumerate() {
                let dr = DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        0.0
                    } else {
                        dq[(i, j)] / (d[i] * d[j]) - 0.5 * r[(i, j)] * (dq[(i, i)] / q[(i, i)] + dq[(j, j)] / q[(j, j)])
                    }
                });
                let trace = rinv.component_mul(&dr).sum();
                st[slot] = -0.5 * (trace - x.dot(&(&dr * &x)));
                grad[slot] += st[slot];
            }
            if keep {
                scores.push(st);
                correlations.push(r);
            }
            let outer = e * e.transpose();
            dqa = &outer - &self.qbar + &dqa * b;
            dqb = &q - &self.qbar + &dqb * b;
            q = &self.qbar * (1.0 - a - b) + &outer * a + &q * b;
        }
        Some(Evaluation { loglik, grad, scores, correlations })
    }
}

/// Correlation-stage log-likelihood and its gradient in (α, β).
pub fn dcc_loglik(eta: &Matrix<f64>, params: DccParams) -> Result<(f64, [f64; 2])> {
    check(params)?;
    let e = Stage::new(eta)?
        .evaluate(params, false)
        .ok_or_else(|| Error::NotPositiveDefinite("conditional correlation matrix".into()))?;
    Ok((e.loglik, e.grad))
}

fn check(p: DccParams) -> Result<()> {
    if !(p.alpha >= 0.0 && p.beta >= 0.0 && p.alpha + p.beta < 1.0) {
        return Err(Error::InvalidInput(format!("DCC parameters ({}, {}) are not feasible", p.alpha, p.beta)));
    }
    Ok(())
}

/// Runs the recursion at fixed (α, β) without estimation. α = β = 0 gives
/// the constant-correlation model.
pub fn evaluate_dcc(eta: &Matrix<f64>, params: DccParams) -> Result<DccFit> {
    check(params)?;
    let stage = Stage::new(eta)?;
    finish(&stage, params, None, false)
}

fn finish(stage: &Stage, params: DccParams, convergence: Option<Convergence>, with_se: bool) -> Result<DccFit> {
    let e = stage
        .evaluate(params, true)
        .ok_or_else(|| Error::NotPositiveDefinite("conditional correlation matrix".into()))?;
    let n = stage.qbar.nrows();
    let to_matrix = |m: &DMatrix<f64>| Matrix::from_vec(n, n, m.transpose().as_slice().to_vec());
    let std_errors = if with_se {
        let flat: Vec<f64> = e.scores.iter().flatten().copied().collect();
        let se = opg_std_errors(&flat, 2);
        [se[0], se[1]]
    } else {
        [f64::NAN; 2]
    };
    Ok(DccFit {
        alpha: params.alpha,
        beta: params.beta,
        qbar: to_matrix(&stage.qbar),
        correlations: e.correlations.iter().map(to_matrix).collect(),
        loglik: e.loglik,
        std_errors,
        convergence,
    })
}

/// Estimates (α, β) by maximising the correlation-stage likelihood of the
/// standardized residuals `eta` (time × series).
pub fn fit_dcc(eta: &Matrix<f64>) -> Result<DccFit> {
    let stage = Stage::new(eta)?;
    let scale = eta.rows() as f64;
    let objective = |raw: &[f64]| {
        let (c, jac) = persistence_coefficients(raw);
        let e = stage.evaluate(DccParams { alpha: c[0], beta: c[1] }, false)?;
        let grad = (0..2).map(|l| -(e.grad[0] * jac[l] + e.grad[1] * jac[2 + l]) / scale).collect();
        Some((-e.loglik / scale, grad))
    };
    let mut best: Option<(Vec<f64>, f64, Convergence)> = None;
    for start in [[0.05, 0.90], [0.01, 0.50]] {
        let run = bfgs(objective, &persistence_raw(&start));
        if best.as_ref().is_none_or(|b| (run.2.converged, -run.1) > (b.2.converged, -b.1)) {
            best = Some(run);
        }
    }
    let (raw, _, convergence) = best.expect("at least one start");
    if !convergence.converged {
        return Err(Error::NonConvergence { iterations: convergence.iterations, grad_norm: convergence.grad_norm });
    }
    finish(&stage, dcc_params_from_raw([raw[0], raw[1]]), Some(convergence), true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noise(t: usize, n: usize, rho: f64, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(t * n);
        for _ in 0..t {
            let common: f64 = rng.sample(StandardNormal);
            for _ in 0..n {
                let own: f64 = rng.sample(StandardNormal);
                data.push(rho.sqrt() * common + (1.0 - rho).sqrt() * own);
            }
        }
        Matrix::from_vec(t, n, data)
    }

    #[test]
    fn ccc_limit_is_constant() {
        let eta = noise(400, 3, 0.4, 1);
        let fit = evaluate_dcc(&eta, DccParams { alpha: 0.0, beta: 0.0 }).unwrap();
        let first = &fit.correlations[0];
        for r in &fit.correlations {
            for (a, b) in r.as_slice().iter().zip(first.as_slice()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        let q = &fit.qbar;
        let expected = q[(0, 1)] / (q[(0, 0)] * q[(1, 1)]).sqrt();
        assert!((first[(0, 1)] - expected).abs() < 1e-14);
    }

    #[test]
    fn correlations_are_valid() {
        let eta = noise(300, 4, 0.3, 2);
        let fit = evaluate_dcc(&eta, DccParams { alpha: 0.1, beta: 0.85 }).unwrap();
        for r in &fit.correlations {
            for i in 0..4 {
                assert_eq!(r[(i, i)], 1.0);
                for j in 0..4 {
                    assert_eq!(r[(i, j)], r[(j, i)]);
                    assert!(r[(i, j)].abs() <= 1.0);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(fit_dcc(&noise(100, 2, 0.2, 3)).is_err());
        assert!(fit_dcc(&noise(300, 1, 0.2, 3)).is_err());
        let eta = noise(300, 2, 0.2, 3);
        assert!(evaluate_dcc(&eta, DccParams { alpha: 0.5, beta: 0.5 }).is_err());
        let dup = Matrix::from_vec(300, 2, eta.column(0).iter().flat_map(|v| [*v, *v]).collect());
        assert!(matches!(fit_dcc(&dup), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn iid_residuals_give_small_alpha() {
        let fit = fit_dcc(&noise(1500, 2, 0.5, 4)).unwrap();
        assert!(fit.alpha < 0.05, "{}", fit.alpha);
        assert!(fit.alpha + fit.beta < 1.0);
    }
}
