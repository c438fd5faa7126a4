//! Two-stage DCC-GARCH estimation.
//!
//! Stage one fits a univariate GARCH to each return series; stage two fits
//! the correlation recursion to the standardized residuals. Both stages
//! optimise over unconstrained coordinates so every proposal is feasible.

mod correlation;
mod garch;
mod optimize;
mod simulate;

pub use correlation::{dcc_loglik, dcc_params_from_raw, evaluate_dcc, fit_dcc, DccFit, DccParams};
pub use garch::{
    fit_garch, fit_garch11, fit_garch_values, garch_loglik, garch_params_from_raw, garch_variance, Garch11Fit,
    GarchFit, GarchOrder, GarchParams, MIN_OBSERVATIONS,
};
pub use optimize::{Convergence, GRAD_TOL, MAX_ITER};
pub use simulate::{simulate_dcc, simulate_garch, DccSample};

use std::fmt::Write as _;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::comovement::{CorrelationTrack, TrackMethod};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metadata::Metadata;
use crate::timeseries::ReturnSeries;

/// Joint fit of several aligned return series.
#[derive(Debug, Clone, PartialEq)]
pub struct DccGarchFit {
    pub labels: Vec<String>,
    pub timestamps: Vec<NaiveDate>,
    pub garch: Vec<GarchFit>,
    pub dcc: DccFit,
    /// Full Gaussian log-likelihood: the univariate terms plus the
    /// correlation stage.
    pub loglik: f64,
}

impl DccGarchFit {
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn track(&self, i: usize, j: usize) -> Result<CorrelationTrack> {
        dcc_correlation_track(&self.dcc, i, j, &self.timestamps)
    }
}

pub fn fit_dcc_garch(series: &[ReturnSeries], order: GarchOrder) -> Result<DccGarchFit> {
    if series.len() < 2 {
        return Err(Error::InvalidInput(format!("DCC needs at least two series, got {}", series.len())));
    }
    for s in &series[1..] {
        series[0].check_aligned(s)?;
    }
    let garch: Vec<GarchFit> = series.par_iter().map(|s| fit_garch(s, order)).collect::<Result<_>>()?;
    let t = series[0].len();
    let k = series.len();
    let mut eta = Vec::with_capacity(t * k);
    for r in 0..t {
        eta.extend(garch.iter().map(|g| g.std_residuals[r]));
    }
    let dcc = fit_dcc(&Matrix::from_vec(t, k, eta))?;
    let loglik = garch.iter().map(|g| g.loglik).sum::<f64>() + dcc.loglik;
    Ok(DccGarchFit {
        labels: series.iter().map(|s| s.label().to_string()).collect(),
        timestamps: series[0].timestamps().to_vec(),
        garch,
        dcc,
        loglik,
    })
}

/// The (i, j) entry of every conditional correlation matrix.
pub fn dcc_correlation_track(fit: &DccFit, i: usize, j: usize, timestamps: &[NaiveDate]) -> Result<CorrelationTrack> {
    let n = fit.num_series();
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange(format!("series ({i}, {j}) with {n} series fitted")));
    }
    if timestamps.len() != fit.len() {
        return Err(Error::LengthMismatch { left: timestamps.len(), right: fit.len() });
    }
    let values = fit.correlations.iter().map(|r| r[(i, j)].clamp(-1.0, 1.0)).collect();
    CorrelationTrack::new(timestamps.to_vec(), values, TrackMethod::Dcc)
}

fn param_names(order: GarchOrder) -> Vec<String> {
    let mut names = vec!["omega".to_string()];
    let suffix = |i: usize, n: usize| if n == 1 { String::new() } else { (i + 1).to_string() };
    names.extend((0..order.arch).map(|i| format!("alpha{}", suffix(i, order.arch))));
    names.extend((0..order.garch).map(|i| format!("beta{}", suffix(i, order.garch))));
    names
}

/// Human-readable parameter table.
pub fn fit_report_text(fit: &DccGarchFit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "DCC-GARCH fit, {} series, {} observations", fit.labels.len(), fit.dcc.len());
    let _ = writeln!(out);
    for g in &fit.garch {
        let _ = writeln!(out, "{}  (mean {:.6e}, log-likelihood {:.4})", g.label, g.mean, g.loglik);
        for (name, (v, se)) in param_names(g.params.order()).iter().zip(g.params.to_vec().iter().zip(&g.std_errors)) {
            let _ = writeln!(out, "  {name:<8} {v:>14.8} ({se:.8})");
        }
        let c = &g.convergence;
        let _ = writeln!(out, "  iterations {}, gradient norm {:.3e}", c.iterations, c.grad_norm);
    }
    let d = &fit.dcc;
    let _ = writeln!(out);
    let _ = writeln!(out, "correlation stage");
    let _ = writeln!(out, "  {:<8} {:>14.8} ({:.8})", "alpha", d.alpha, d.std_errors[0]);
    let _ = writeln!(out, "  {:<8} {:>14.8} ({:.8})", "beta", d.beta, d.std_errors[1]);
    if let Some(c) = &d.convergence {
        let _ = writeln!(out, "  iterations {}, gradient norm {:.3e}", c.iterations, c.grad_norm);
    }
    let _ = writeln!(out, "  log-likelihood {:.4}", d.loglik);
    let _ = writeln!(out);
    let _ = writeln!(out, "total log-likelihood {:.4}", fit.loglik);
    out
}

/// Machine-readable `key=value` lines, preceded by a metadata header.
pub fn fit_report_kv(fit: &DccGarchFit, meta: &Metadata) -> String {
    let mut out = meta.render();
    let mut kv = |k: String, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("series".into(), fit.labels.join(","));
    kv("observations".into(), fit.dcc.len().to_string());
    for g in &fit.garch {
        for (name, (v, se)) in param_names(g.params.order()).iter().zip(g.params.to_vec().iter().zip(&g.std_errors)) {
            kv(format!("garch.{}.{name}", g.label), v.to_string());
            kv(format!("garch.{}.{name}.se", g.label), se.to_string());
        }
        kv(format!("garch.{}.mean", g.label), g.mean.to_string());
        kv(format!("garch.{}.loglik", g.label), g.loglik.to_string());
        kv(format!("garch.{}.iterations", g.label), g.convergence.iterations.to_string());
        kv(format!("garch.{}.grad_norm", g.label), g.convergence.grad_norm.to_string());
    }
    let d = &fit.dcc;
    kv("dcc.alpha".into(), d.alpha.to_string());
    kv("dcc.alpha.se".into(), d.std_errors[0].to_string());
    kv("dcc.beta".into(), d.beta.to_string());
    kv("dcc.beta.se".into(), d.std_errors[1].to_string());
    kv("dcc.loglik".into(), d.loglik.to_string());
    if let Some(c) = &d.convergence {
        kv("dcc.iterations".into(), c.iterations.to_string());
        kv("dcc.grad_norm".into(), c.grad_norm.to_string());
    }
    kv("loglik".into(), fit.loglik.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(seed: u64) -> Vec<ReturnSeries> {
        let g = GarchParams::garch11(0.05, 0.06, 0.9).unwrap();
        let qbar = Matrix::from_rows(vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        let s = simulate_dcc(&[g.clone(), g], 0.05, 0.9, &qbar, 1500, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        ["a", "b"]
            .iter()
            .enumerate()
            .map(|(i, l)| ReturnSeries::from_values(*l, s.returns.column(i)).unwrap())
            .collect()
    }

    #[test]
    fn pipeline_and_reports() {
        let fit = fit_dcc_garch(&sample(1), GarchOrder::default()).unwrap();
        assert!(fit.dcc.alpha + fit.dcc.beta < 1.0);
        let track = fit.track(0, 1).unwrap();
        assert_eq!(track.len(), 1500);
        assert!(fit.track(0, 0).unwrap().values.iter().all(|v| *v == 1.0));
        assert!(fit.track(0, 2).is_err());
        let text = fit_report_text(&fit);
        assert!(text.contains("alpha") && text.contains("total log-likelihood"));
        let kv = fit_report_kv(&fit, &Metadata::new().with("seed", 1));
        assert!(kv.starts_with("# seed: 1\n"));
        let alpha: f64 = kv.lines().find_map(|l| l.strip_prefix("dcc.alpha=")).unwrap().parse().unwrap();
        assert_eq!(alpha, fit.dcc.alpha);
    }

    #[test]
    fn misaligned_series_rejected() {
        let mut s = sample(2);
        s[1] = ReturnSeries::from_values("b", s[1].values()[1..].to_vec()).unwrap();
        assert!(fit_dcc_garch(&s, GarchOrder::default()).is_err());
    }
}
