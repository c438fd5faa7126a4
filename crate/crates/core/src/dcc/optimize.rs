//! Quasi-Newton minimisation and the constraint-free parameter maps.

use serde::{Deserialize, Serialize};

pub const GRAD_TOL: f64 = 1e-6;
pub const MAX_ITER: usize = 500;
/// A stalled line search still counts as converged below this gradient norm.
const STALL_TOL: f64 = 1e-4;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;
const MAX_STEP: f64 = 5.0;
/// Total persistence is scaled into [0, PERSISTENCE_CAP] so it stays below one
/// even when the logistic saturates in floating point.
pub const PERSISTENCE_CAP: f64 = 1.0 - 1e-8;
const LOG_SCALE_BOUND: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub evaluations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Minimises `f` from `x0` with BFGS and Armijo backtracking.
///
/// `f` returns `None` for points where the objective is undefined; the line
/// search treats them as rejected trial steps.
pub fn bfgs<F>(mut f: F, x0: &[f64]) -> (Vec<f64>, f64, Convergence)
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let k = x0.len();
    let mut x = x0.to_vec();
    let mut evaluations = 1;
    let (mut fx, mut g) = f(&x).expect("starting point must be feasible");
    let mut h = identity(k);
    let mut fresh = true;
    let mut iterations = 0;
    loop {
        let gn = norm(&g);
        if gn < GRAD_TOL || iterations >= MAX_ITER {
            let converged = gn < GRAD_TOL;
            return (x, fx, Convergence { iterations, evaluations, grad_norm: gn, converged });
        }
        iterations += 1;
        let mut p: Vec<f64> = (0..k).map(|i| -(0..k).map(|j| h[i * k + j] * g[j]).sum::<f64>()).collect();
        let mut slope = dot(&p, &g);
        if slope >= 0.0 {
            h = identity(k);
            p = g.iter().map(|v| -v).collect();
            slope = -gn * gn;
        }
        let pn = norm(&p);
        let mut t = if pn > MAX_STEP { MAX_STEP / pn } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + t * b).collect();
            evaluations += 1;
            if let Some((ft, gt)) = f(&trial) {
                if ft.is_finite() && ft <= fx + ARMIJO_C1 * t * slope && gt.iter().all(|v| v.is_finite()) {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            if gn < STALL_TOL {
                return (x, fx, Convergence { iterations, evaluations, grad_norm: gn, converged: true });
            }
            if fresh {
                return (x, fx, Convergence { iterations, evaluations, grad_norm: gn, converged: false });
            }
            h = identity(k);
            fresh = true;
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if fresh {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
            }
            update_inverse_hessian(&mut h, &s, &y, sy);
            fresh = false;
        }
        x = xn;
        fx = fnew;
        g = gnew;
    }
}

fn update_inverse_hessian(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let k = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..k).map(|i| (0..k).map(|j| h[i * k + j] * y[j]).sum()).collect();
    let yhy = dot(y, &hy);
    for i in 0..k {
        for j in 0..k {
            h[i * k + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
        }
    }
}

fn identity(k: usize) -> Vec<f64> {
    let mut m = vec![0.0; k * k];
    (0..k).for_each(|i| m[i * k + i] = 1.0);
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Maps `m` raw values to `m` non-negative coefficients summing to less than
/// one: `raw[0]` sets the total through a scaled logistic, the rest are
/// softmax shares against an implicit zero. Returns the coefficients and the
/// row-major Jacobian `d coef[i] / d raw[l]`.
pub fn persistence_coefficients(raw: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = raw.len();
    assert!(m >= 1);
    let l = logistic(raw[0]);
    let total = PERSISTENCE_CAP * l;
    let d_total = PERSISTENCE_CAP * l * (1.0 - l);
    let mut z: Vec<f64> = raw[1..].to_vec();
    z.push(0.0);
    let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - zmax).exp()).collect();
    let sum: f64 = e.iter().sum();
    let w: Vec<f64> = e.iter().map(|v| v / sum).collect();
    let coef: Vec<f64> = w.iter().map(|wi| total * wi).collect();
    let mut jac = vec![0.0; m * m];
    for i in 0..m {
        jac[i * m] = d_total * w[i];
        for l in 0..m - 1 {
            let delta = if i == l { 1.0 } else { 0.0 };
            jac[i * m + 1 + l] = total * w[i] * (delta - w[l]);
        }
    }
    (coef, jac)
}

/// Inverse of [`persistence_coefficients`] for strictly positive inputs.
pub fn persistence_raw(coef: &[f64]) -> Vec<f64> {
    let total: f64 = coef.iter().sum();
    let p = (total / PERSISTENCE_CAP).clamp(1e-12, 1.0 - 1e-12);
    let last = *coef.last().expect("at least one coefficient");
    let mut raw = vec![(p / (1.0 - p)).ln()];
    raw.extend(coef[..coef.len() - 1].iter().map(|c| (c / last).ln()));
    raw
}

/// Positive scale `base * exp(raw)` with the exponent bounded, and its
/// derivative with respect to `raw`.
pub fn log_scale(base: f64, raw: f64) -> (f64, f64) {
    let r = raw.clamp(-LOG_SCALE_BOUND, LOG_SCALE_BOUND);
    let v = base * r.exp();
    (v, if raw.abs() < LOG_SCALE_BOUND { v } else { 0.0 })
}
