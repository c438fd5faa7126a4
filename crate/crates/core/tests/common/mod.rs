//! Fixtures and independent oracles shared by the integration targets.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use chrono::NaiveDate;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn white(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn dates(n: usize) -> Vec<NaiveDate> {
    NaiveDate::from_ymd_opt(2000, 1, 3).unwrap().iter_days().take(n).collect()
}

/// Morlet mother wavelet written out from its definition.
pub fn morlet_oracle(eta: f64, omega0: f64) -> Complex64 {
    let envelope = PI.powf(-0.25) * (-eta * eta / 2.0).exp();
    Complex64::new(envelope * (omega0 * eta).cos(), envelope * (omega0 * eta).sin())
}

/// Direct summation of the discretized transform on the de-meaned series:
/// W(u, s) = Σ_t x_t · dt/√s · conj(ψ((t − u) dt / s)).
pub fn direct_cwt(x: &[f64], scale: f64, dt: f64, omega0: f64) -> Vec<Complex64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    (0..n)
        .map(|u| {
            (0..n)
                .map(|t| {
                    let eta = (t as f64 - u as f64) * dt / scale;
                    (x[t] - mean) * dt / scale.sqrt() * morlet_oracle(eta, omega0).conj()
                })
                .sum()
        })
        .collect()
}

/// Central finite-difference gradient of `f` at `p` with per-coordinate
/// steps `h`.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, p: &[f64], h: &[f64]) -> Vec<f64> {
    (0..p.len())
        .map(|i| {
            let mut up = p.to_vec();
            let mut dn = p.to_vec();
            up[i] += h[i];
            dn[i] -= h[i];
            (f(&up) - f(&dn)) / (2.0 * h[i])
        })
        .collect()
}

/// Largest componentwise gap relative to the largest gradient component.
pub fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Sum of sinusoids at periods 16, 37 and 128.
pub fn band_limited(n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| {
            let t = t as f64;
            (2.0 * PI * t / 16.0).sin()
                + 0.7 * (2.0 * PI * t / 37.0 + 1.0).sin()
                + 0.5 * (2.0 * PI * t / 128.0 + 0.3).sin()
        })
        .collect()
}

/// Two series sharing a unit-variance period-`period` sinusoid, each with
/// independent unit-variance noise.
pub fn common_cycle(n: usize, period: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let a = 2f64.sqrt();
    let (nx, ny) = (white(n, seed), white(n, seed + 1_000_000));
    let s: Vec<f64> = (0..n).map(|t| a * (2.0 * PI * t as f64 / period).sin()).collect();
    (s.iter().zip(&nx).map(|(s, e)| s + e).collect(), s.iter().zip(&ny).map(|(s, e)| s + e).collect())
}

/// Writes a price CSV whose log returns are exactly `returns`.
pub fn write_prices(path: &Path, labels: &[&str], returns: &[Vec<f64>]) {
    let n = returns[0].len() + 1;
    let mut out = format!("date,{}\n", labels.join(","));
    let mut level = vec![100.0f64; labels.len()];
    for (t, d) in dates(n).iter().enumerate() {
        if t > 0 {
            for (l, r) in level.iter_mut().zip(returns) {
                *l *= r[t - 1].exp();
            }
        }
        let cells: Vec<String> = level.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), cells.join(",")));
    }
    std::fs::write(path, out).unwrap();
}
