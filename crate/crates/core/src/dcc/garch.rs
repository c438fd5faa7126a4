//! Univariate GARCH by Gaussian quasi-maximum likelihood.
//!
//! Returns are de-meaned and the variance recursion starts at the sample
//! variance, which also stands in for every pre-sample lag.

use serde::{Deserialize, Serialize};

use super::optimize::{bfgs, log_scale, persistence_coefficients, persistence_raw, Convergence};
use crate::error::{Error, Result};
use crate::timeseries::ReturnSeries;

pub const MIN_OBSERVATIONS: usize = 250;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Lag orders: `arch` squared-return lags and `garch` variance lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GarchOrder {
    pub arch: usize,
    pub garch: usize,
}

impl Default for GarchOrder {
    fn default() -> Self {
        Self { arch: 1, garch: 1 }
    }
}

impl GarchOrder {
    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.arch) || self.garch > 5 {
            return Err(Error::InvalidInput(format!(
                "GARCH orders must satisfy 1 <= arch <= 5 and garch <= 5, got ({}, {})",
                self.arch, self.garch
            )));
        }
        Ok(())
    }

    /// Number of free parameters including the intercept.
    pub fn num_params(&self) -> usize {
        1 + self.arch + self.garch
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl GarchParams {
    pub fn new(omega: f64, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let p = Self { omega, alpha, beta };
        p.order().validate()?;
        if !(p.omega > 0.0 && p.omega.is_finite()) {
            return Err(Error::InvalidInput(format!("omega must be positive, got {}", p.omega)));
        }
        if p.alpha.iter().chain(&p.beta).any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidInput("GARCH coefficients must be non-negative".into()));
        }
        if !(p.persistence() < 1.0) {
            return Err(Error::InvalidInput(format!("GARCH persistence {} is not below one", p.persistence())));
        }
        Ok(p)
    }

    pub fn garch11(omega: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(omega, vec![alpha], vec![beta])
    }

    pub fn order(&self) -> GarchOrder {
        GarchOrder { arch: self.alpha.len(), garch: self.beta.len() }
    }

    pub fn persistence(&self) -> f64 {
        self.alpha.iter().chain(&self.beta).sum()
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.persistence())
    }

    /// `[omega, alpha..., beta...]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.omega];
        v.extend(&self.alpha);
        v.extend(&self.beta);
        v
    }

    fn from_slice(order: GarchOrder, v: &[f64]) -> Self {
        Self { omega: v[0], alpha: v[1..1 + order.arch].to_vec(), beta: v[1 + order.arch..].to_vec() }
    }
}

/// Unconstrained coordinates for a given order and variance scale.
///
/// `raw[0]` is `ln(omega / scale)`; the rest feed
/// [`persistence_coefficients`] with the ARCH terms first.
pub fn garch_params_from_raw(order: GarchOrder, scale: f64, raw: &[f64]) -> GarchParams {
    let (params, _) = raw_to_natural(order, scale, raw);
    params
}

fn raw_to_natural(order: GarchOrder, scale: f64, raw: &[f64]) -> (GarchParams, Vec<f64>) {
    let k = order.num_params();
    let (omega, d_omega) = log_scale(scale, raw[0]);
    let (coef, cjac) = persistence_coefficients(&raw[1..]);
    let m = k - 1;
    let mut jac = vec![0.0; k * k];
    jac[0] = d_omega;
    for i in 0..m {
        for l in 0..m {
            jac[(1 + i) * k + 1 + l] = cjac[i * m + l];
        }
    }
    let mut natural = vec![omega];
    natural.extend(coef);
    (GarchParams::from_slice(order, &natural), jac)
}

fn natural_to_raw(params: &GarchParams, scale: f64) -> Vec<f64> {
    let mut raw = vec![(params.omega / scale).ln()];
    raw.extend(persistence_raw(&params.to_vec()[1..]));
    raw
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub label: String,
    pub params: GarchParams,
    /// Sample mean removed before fitting.
    pub mean: f64,
    pub h: Vec<f64>,
    pub std_residuals: Vec<f64>,
    pub loglik: f64,
    /// Outer-product-of-gradients standard errors, ordered like
    /// [`GarchParams::to_vec`].
    pub std_errors: Vec<f64>,
    pub convergence: Convergence,
}

pub type Garch11Fit = GarchFit;

impl GarchFit {
    pub fn omega(&self) -> f64 {
        self.params.omega
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha[0]
    }

    pub fn beta(&self) -> f64 {
        self.params.beta.first().copied().unwrap_or(0.0)
    }
}

/// Variance path for de-meaned returns `eps`, started at `init_var`.
pub fn garch_variance(eps: &[f64], init_var: f64, params: &GarchParams) -> Vec<f64> {
    let n = eps.len();
    let mut h = Vec::with_capacity(n);
    if n == 0 {
        return h;
    }
    h.push(init_var);
    for t in 1..n {
        let mut v = params.omega;
        for (i, a) in params.alpha.iter().enumerate() {
            v += a * lagged(eps, t, i + 1).map_or(init_var, |e| e * e);
        }
        for (k, b) in params.beta.iter().enumerate() {
            v += b * lagged(&h, t, k + 1).unwrap_or(init_var);
        }
        h.push(v);
    }
    h
}

fn lagged(v: &[f64], t: usize, lag: usize) -> Option<f64> {
    t.checked_sub(lag).map(|s| v[s])
}

struct Evaluation {
    loglik: f64,
    grad: Vec<f64>,
    scores: Option<Vec<f64>>,
}

fn evaluate(eps: &[f64], init_var: f64, params: &GarchParams, want_scores: bool) -> Option<Evaluation> {
    let n = eps.len();
    let order = params.order();
    let k = order.num_params();
    let h = garch_variance(eps, init_var, params);
    let mut dh = vec![0.0; n * k];
    let mut loglik = 0.0;
    let mut grad = vec![0.0; k];
    let mut scores = want_scores.then(|| vec![0.0; n * k]);
    for t in 0..n {
        if t > 0 {
            let (done, rest) = dh.split_at_mut(t * k);
            let row = &mut rest[..k];
            row[0] = 1.0;
            for i in 0..order.arch {
                row[1 + i] = lagged(eps, t, i + 1).map_or(init_var, |e| e * e);
            }
            for kk in 0..order.garch {
                row[1 + order.arch + kk] = lagged(&h, t, kk + 1).unwrap_or(init_var);
            }
            for (kk, b) in params.beta.iter().enumerate() {
                if let Some(s) = t.checked_sub(kk + 1) {
                    for c in 0..k {
                        row[c] += b * done[s * k + c];
                    }
                }
            }
        }
        let ht = h[t];
        if !(ht > 0.0 && ht.is_finite()) {
            return None;
        }
        let e2 = eps[t] * eps[t];
        loglik -= 0.5 * (LN_2PI + ht.ln() + e2 / ht);
        let w = -0.5 * (1.0 / ht - e2 / (ht * ht));
        for c in 0..k {
            let s = w * dh[t * k + c];
            grad[c] += s;
            if let Some(sc) = scores.as_mut() {
                sc[t * k + c] = s;
            }
        }
    }
    Some(Evaluation { loglik, grad, scores })
}

/// Gaussian log-likelihood and its gradient in `[omega, alpha..., beta...]`.
pub fn garch_loglik(eps: &[f64], init_var: f64, params: &GarchParams) -> Result<(f64, Vec<f64>)> {
    let e = evaluate(eps, init_var, params, false)
        .ok_or_else(|| Error::InvalidInput("variance recursion left the positive reals".into()))?;
    Ok((e.loglik, e.grad))
}

pub fn fit_garch11(r: &ReturnSeries) -> Result<GarchFit> {
    fit_garch(r, GarchOrder::default())
}

pub fn fit_garch(r: &ReturnSeries, order: GarchOrder) -> Result<GarchFit> {
    fit_garch_values(r.label(), r.values(), order)
}

pub fn fit_garch_values(label: &str, values: &[f64], order: GarchOrder) -> Result<GarchFit> {
    order.validate()?;
    let n = values.len();
    if n < MIN_OBSERVATIONS {
        return Err(Error::TooShort { required: MIN_OBSERVATIONS, actual: n });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let eps: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let var = eps.iter().map(|e| e * e).sum::<f64>() / n as f64;
    if !(var > 0.0) || values.iter().all(|v| *v == values[0]) {
        return Err(Error::ZeroVariance);
    }

    let start = {
        let a = 0.05 / order.arch as f64;
        let b = if order.garch == 0 { 0.0 } else { 0.90 / order.garch as f64 };
        let alpha = vec![a; order.arch];
        let beta = vec![b; order.garch];
        let persistence = 0.05 + if order.garch == 0 { 0.0 } else { 0.90 };
        GarchParams { omega: var * (1.0 - persistence), alpha, beta }
    };
    let k = order.num_params();
    let scale = n as f64;
    let objective = |raw: &[f64]| {
        let (params, jac) = raw_to_natural(order, var, raw);
        let e = evaluate(&eps, var, &params, false)?;
        let grad = (0..k).map(|l| -(0..k).map(|c| e.grad[c] * jac[c * k + l]).sum::<f64>() / scale).collect();
        Some((-e.loglik / scale, grad))
    };
    let (raw, _, convergence) = bfgs(objective, &natural_to_raw(&start, var));
    if !convergence.converged {
        return Err(Error::NonConvergence { iterations: convergence.iterations, grad_norm: convergence.grad_norm });
    }
    let params = garch_params_from_raw(order, var, &raw);
    let e = evaluate(&eps, var, &params, true).expect("optimum is feasible");
    let h = garch_variance(&eps, var, &params);
    let std_residuals = eps.iter().zip(&h).map(|(e, h)| e / h.sqrt()).collect();
    let std_errors = opg_std_errors(e.scores.as_deref().unwrap_or(&[]), k);
    Ok(GarchFit { label: label.to_string(), params, mean, h, std_residuals, loglik: e.loglik, std_errors, convergence })
}

/// Square roots of the diagonal of `(Σ s_t s_tᵀ)⁻¹`; NaN where the
/// information matrix is singular.
pub(crate) fn opg_std_errors(scores: &[f64], k: usize) -> Vec<f64> {
    let mut info = nalgebra::DMatrix::<f64>::zeros(k, k);
    for s in scores.chunks_exact(k) {
        let v = nalgebra::DVector::from_column_slice(s);
        info += &v * v.transpose();
    }
    match info.try_inverse() {
        Some(inv) => (0..k).map(|i| if inv[(i, i)] >= 0.0 { inv[(i, i)].sqrt() } else { f64::NAN }).collect(),
        None => vec![f64::NAN; k],
    }
}
