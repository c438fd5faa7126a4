//! Command-line workflow: layered configuration and the `describe`,
//! `coherence` and `compare` commands.
//!
//! Settings are merged from built-in defaults, the output-directory
//! environment variable, an optional TOML file and command-line flags, in
//! that order. The merged configuration is written next to the outputs and
//! embedded in every data file, minus the settings that only affect
//! execution (thread count, output directory).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherence::{wavelet_coherence, CoherenceField, SmootherSpec};
use crate::comovement::{
    save_track_csv, track_summary, wtc_correlation_track, CorrelationTrack, TrackMethod, TrackOptions,
};
use crate::cwt::{MorletParams, ScaleGrid};
use crate::dcc::{fit_dcc_garch, fit_report_kv, fit_report_text, DccGarchFit, GarchOrder};
use crate::error::{Error, Result};
use crate::metadata::Metadata;
use crate::render::{
    render_coherence, render_comparison, save_coherence_sidecar, save_png, smoothed_tracks, Colormap, PlotSpec,
};
use crate::significance::{fit_ar1, significance_test, SignificanceResult};
use crate::timeseries::{
    describe, log_returns, pearson, read_price_csv, Denominator, DescriptiveStats, ReturnSeries, StatsConfig,
};

pub const OUT_ENV: &str = "WAVECORR_OUT";
pub const CONFIG_FILE: &str = "config.toml";
/// Sampling interval of daily data, in days.
const DT: f64 = 1.0;

/// One layer of settings; unset fields fall through to lower layers.
#[derive(Debug, Clone, Default, PartialEq, clap::Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    /// Price CSV: a date column followed by one column per series.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Series pairs as `a:b`, comma separated; all pairs when omitted.
    #[arg(long, value_delimiter = ',')]
    pub pairs: Option<Vec<String>>,
    /// Smallest wavelet scale, in days.
    #[arg(long)]
    pub s0: Option<f64>,
    /// Scale spacing in octaves.
    #[arg(long)]
    pub dj: Option<f64>,
    /// Longest Fourier period analysed and averaged into the track, in days.
    #[arg(long)]
    pub max_period: Option<f64>,
    /// Morlet central angular frequency.
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Time smoothing width as a multiple of the scale.
    #[arg(long)]
    pub time_sigma: Option<f64>,
    /// Scale smoothing window in octaves.
    #[arg(long)]
    pub scale_width: Option<f64>,
    /// Number of red-noise surrogate pairs.
    #[arg(long)]
    pub surrogates: Option<usize>,
    /// Seed for the surrogate random streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Average points inside the cone of influence into the track.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub include_coi: Option<bool>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Number of squared-return lags in each univariate GARCH.
    #[arg(long)]
    pub garch_arch: Option<usize>,
    /// Number of variance lags in each univariate GARCH.
    #[arg(long)]
    pub garch_garch: Option<usize>,
    /// Moving-average window for comparison plots.
    #[arg(long)]
    pub window: Option<usize>,
    /// Heatmap colormap: jet or grayscale.
    #[arg(long)]
    pub colormap: Option<String>,
    /// Pixel spacing of phase arrows.
    #[arg(long)]
    pub arrow_stride: Option<u32>,
    /// Divide the variance by n instead of n − 1 in descriptive statistics.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub population_sd: Option<bool>,
    /// Report kurtosis minus three.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub excess_kurtosis: Option<bool>,
}

macro_rules! merge_fields {
    ($base:expr, $over:expr, $($f:ident),*) => {
        $( if $over.$f.is_some() { $base.$f = $over.$f.clone(); } )*
    };
}

impl ConfigLayer {
    pub fn defaults() -> Self {
        Self {
            input: None,
            pairs: None,
            s0: Some(2.0),
            dj: Some(1.0 / 12.0),
            max_period: Some(256.0),
            omega0: Some(6.0),
            time_sigma: Some(SmootherSpec::default().time_sigma),
            scale_width: Some(SmootherSpec::default().scale_width),
            surrogates: Some(crate::significance::DEFAULT_SURROGATES),
            seed: Some(1),
            include_coi: Some(true),
            out: Some(PathBuf::from("wavecorr-out")),
            threads: Some(0),
            garch_arch: Some(1),
            garch_garch: Some(1),
            window: Some(50),
            colormap: Some("jet".into()),
            arrow_stride: Some(PlotSpec::default().arrow_stride),
            population_sd: Some(false),
            excess_kurtosis: Some(false),
        }
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::InvalidInput(format!("config file {}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(mut self, over: &ConfigLayer) -> Self {
        merge_fields!(
            self,
            over,
            input,
            pairs,
            s0,
            dj,
            max_period,
            omega0,
            time_sigma,
            scale_width,
            surrogates,
            seed,
            include_coi,
            out,
            threads,
            garch_arch,
            garch_garch,
            window,
            colormap,
            arrow_stride,
            population_sd,
            excess_kurtosis
        );
        self
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub pairs: Vec<(String, String)>,
    pub s0: f64,
    pub dj: f64,
    pub max_period: f64,
    pub omega0: f64,
    pub smoother: SmootherSpec,
    pub surrogates: usize,
    pub seed: u64,
    pub include_coi: bool,
    pub out: PathBuf,
    pub threads: usize,
    pub garch: GarchOrder,
    pub window: usize,
    pub plot: PlotSpec,
    pub stats: StatsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::resolve(&[]).expect("defaults are valid")
    }
}

impl RunConfig {
    /// Merges `layers` (lowest precedence first) over the defaults and
    /// validates the result.
    pub fn resolve(layers: &[&ConfigLayer]) -> Result<Self> {
        let l = layers.iter().fold(ConfigLayer::defaults(), |acc, l| acc.merge(l));
        let pairs = l
            .pairs
            .unwrap_or_default()
            .iter()
            .map(|p| {
                p.split_once(':')
                    .filter(|(a, b)| !a.is_empty() && !b.is_empty())
                    .map(|(a, b)| (a.to_string(), b.to_string()))
                    .ok_or_else(|| Error::InvalidInput(format!("pair '{p}' is not of the form a:b")))
            })
            .collect::<Result<Vec<_>>>()?;
        let cfg = Self {
            input: l.input,
            pairs,
            s0: l.s0.unwrap_or_default(),
            dj: l.dj.unwrap_or_default(),
            max_period: l.max_period.unwrap_or_default(),
            omega0: l.omega0.unwrap_or_default(),
            smoother: SmootherSpec {
                time_sigma: l.time_sigma.unwrap_or_default(),
                scale_width: l.scale_width.unwrap_or_default(),
            },
            surrogates: l.surrogates.unwrap_or_default(),
            seed: l.seed.unwrap_or_default(),
            include_coi: l.include_coi.unwrap_or_default(),
            out: l.out.unwrap_or_default(),
            threads: l.threads.unwrap_or_default(),
            garch: GarchOrder { arch: l.garch_arch.unwrap_or_default(), garch: l.garch_garch.unwrap_or_default() },
            window: l.window.unwrap_or_default(),
            plot: PlotSpec {
                colormap: Colormap::parse(l.colormap.as_deref().unwrap_or_default())?,
                arrow_stride: l.arrow_stride.unwrap_or_default(),
                ..PlotSpec::default()
            },
            stats: StatsConfig {
                denominator: if l.population_sd.unwrap_or_default() {
                    Denominator::Population
                } else {
                    Denominator::Sample
                },
                excess_kurtosis: l.excess_kurtosis.unwrap_or_default(),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return bad(format!("s0 must be positive, got {}", self.s0));
        }
        if !(self.dj > 0.0 && self.dj <= 1.0) {
            return bad(format!("dj must lie in (0, 1], got {}", self.dj));
        }
        if !(self.max_period > self.s0 && self.max_period.is_finite()) {
            return bad(format!("max period must exceed s0, got {}", self.max_period));
        }
        MorletParams::new(self.omega0)?;
        self.smoother.validate()?;
        if self.surrogates < crate::significance::MIN_SURROGATES {
            return bad(format!(
                "at least {} surrogates are required, got {}",
                crate::significance::MIN_SURROGATES,
                self.surrogates
            ));
        }
        self.garch.validate()?;
        if self.window == 0 {
            return bad("moving-average window must be positive".into());
        }
        self.plot.validate()
    }

    /// The configuration as a complete layer, which also parses back as a
    /// config file.
    pub fn to_layer(&self) -> ConfigLayer {
        ConfigLayer {
            input: self.input.clone(),
            pairs: Some(self.pairs.iter().map(|(a, b)| format!("{a}:{b}")).collect()),
            s0: Some(self.s0),
            dj: Some(self.dj),
            max_period: Some(self.max_period),
            omega0: Some(self.omega0),
            time_sigma: Some(self.smoother.time_sigma),
            scale_width: Some(self.smoother.scale_width),
            surrogates: Some(self.surrogates),
            seed: Some(self.seed),
            include_coi: Some(self.include_coi),
            out: Some(self.out.clone()),
            threads: Some(self.threads),
            garch_arch: Some(self.garch.arch),
            garch_garch: Some(self.garch.garch),
            window: Some(self.window),
            colormap: Some(
                match self.plot.colormap {
                    Colormap::Jet => "jet",
                    Colormap::Grayscale => "grayscale",
                }
                .into(),
            ),
            arrow_stride: Some(self.plot.arrow_stride),
            population_sd: Some(self.stats.denominator == Denominator::Population),
            excess_kurtosis: Some(self.stats.excess_kurtosis),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_layer()).expect("configuration serializes")
    }

    /// Header entries recording every setting that can change a result.
    pub fn metadata(&self) -> Metadata {
        let mut meta = Metadata::new().with("tool", concat!("wavecorr ", env!("CARGO_PKG_VERSION")));
        let table: toml::Table = toml::from_str(&self.to_toml()).expect("round trip of own output");
        for (k, v) in &table {
            if k != "out" && k != "threads" {
                meta.set(format!("config.{k}"), v);
            }
        }
        meta
    }

    pub fn scale_grid(&self, n: usize) -> Result<ScaleGrid> {
        ScaleGrid::covering(self.s0, self.dj, self.max_period, n, DT, MorletParams::new(self.omega0)?)
    }

    pub fn track_options(&self) -> TrackOptions {
        TrackOptions { max_period: self.max_period, include_coi: self.include_coi }
    }
}

/// Reads the configured price file and converts it to log returns.
pub fn load_returns(cfg: &RunConfig) -> Result<Vec<ReturnSeries>> {
    let input = cfg.input.as_deref().ok_or_else(|| Error::InvalidInput("no input file given (--input)".into()))?;
    let prices = read_price_csv(input)?;
    let mut seen = BTreeSet::new();
    if let Some(dup) = prices.iter().find(|p| !seen.insert(p.label())) {
        return Err(Error::InvalidInput(format!("duplicate series label '{}'", dup.label())));
    }
    prices.iter().map(log_returns).collect()
}

/// Index pairs for the configured labels, or every unordered pair.
pub fn resolve_pairs(cfg: &RunConfig, series: &[ReturnSeries]) -> Result<Vec<(usize, usize)>> {
    if cfg.pairs.is_empty() {
        if series.len() < 2 {
            return Err(Error::InvalidInput(format!("need at least two series, found {}", series.len())));
        }
        return Ok((0..series.len()).flat_map(|i| (i + 1..series.len()).map(move |j| (i, j))).collect());
    }
    let find = |label: &str| {
        series
            .iter()
            .position(|s| s.label() == label)
            .ok_or_else(|| Error::InvalidInput(format!("unknown series '{label}'")))
    };
    cfg.pairs.iter().map(|(a, b)| Ok((find(a)?, find(b)?))).collect()
}

fn file_stem(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

fn pair_stem(a: &str, b: &str) -> String {
    format!("{}__{}", file_stem(a), file_stem(b))
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(CONFIG_FILE);
    std::fs::write(&path, cfg.to_toml())?;
    Ok(path)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Descriptive statistics of every series' log returns, as an aligned
/// text table and a CSV. Returns the files written.
pub fn cmd_describe(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let series = load_returns(cfg)?;
    let stats: Vec<(String, DescriptiveStats)> =
        series.iter().map(|s| Ok((s.label().to_string(), describe(s, cfg.stats)?))).collect::<Result<_>>()?;
    let mut files = vec![prepare_out(cfg)?];
    let meta = cfg.metadata().with("observations", series.first().map_or(0, |s| s.len()));

    let mut csv = meta.render();
    csv.push_str("series,mean,st_dev,skewness,kurtosis,min,max\n");
    for (label, s) in &stats {
        let _ = writeln!(
            csv,
            "{label},{},{},{},{},{},{}",
            s.mean,
            s.st_dev,
            fmt_opt(s.skewness),
            fmt_opt(s.kurtosis),
            s.min,
            s.max
        );
    }
    let path = cfg.out.join("describe.csv");
    std::fs::write(&path, csv)?;
    files.push(path);

    let path = cfg.out.join("describe.txt");
    std::fs::write(&path, meta.render() + &describe_table(&stats))?;
    files.push(path);
    Ok(files)
}

pub fn describe_table(stats: &[(String, DescriptiveStats)]) -> String {
    let width = stats.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(6);
    let mut out = format!(
        "{:<width$} {:>12} {:>12} {:>10} {:>10} {:>12} {:>12}\n",
        "series", "mean", "st.dev", "skewness", "kurtosis", "min", "max"
    );
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"));
    for (label, s) in stats {
        let _ = writeln!(
            out,
            "{label:<width$} {:>12.6} {:>12.6} {:>10} {:>10} {:>12.6} {:>12.6}",
            s.mean,
            s.st_dev,
            opt(s.skewness),
            opt(s.kurtosis),
            s.min,
            s.max
        );
    }
    out
}

/// Coherence, significance and correlation track for one pair.
#[derive(Debug, Clone)]
pub struct PairAnalysis {
    pub field: CoherenceField,
    pub significance: SignificanceResult,
    pub track: CorrelationTrack,
    pub meta: Metadata,
}

pub fn analyze_pair(cfg: &RunConfig, a: &ReturnSeries, b: &ReturnSeries) -> Result<PairAnalysis> {
    a.check_aligned(b)?;
    let grid = cfg.scale_grid(a.len())?;
    let mut field = wavelet_coherence(a.values(), b.values(), &grid, &cfg.smoother)?;
    let (mx, my) = (fit_ar1(a.values())?, fit_ar1(b.values())?);
    let significance = significance_test(&field, &mx, &my, cfg.surrogates, cfg.seed)?;
    field.set_sig_mask(significance.mask.clone())?;
    let track = wtc_correlation_track(&field, &significance, a.timestamps(), &cfg.track_options())?;
    let meta = cfg
        .metadata()
        .with("pair", format!("{}:{}", a.label(), b.label()))
        .with("surrogate_seed", cfg.seed)
        .with("surrogates", cfg.surrogates)
        .with("ar1.x.phi", mx.phi())
        .with("ar1.x.sigma", mx.sigma())
        .with("ar1.y.phi", my.phi())
        .with("ar1.y.sigma", my.sigma())
        .with("significant_fraction_outside_coi", significance.fraction_outside_coi(&field))
        .with("r2_clipped", field.clipped())
        .with("r2_guarded", field.guarded());
    Ok(PairAnalysis { field, significance, track, meta })
}

fn analyze_pairs(cfg: &RunConfig, series: &[ReturnSeries], pairs: &[(usize, usize)]) -> Result<Vec<PairAnalysis>> {
    pairs.par_iter().map(|&(i, j)| analyze_pair(cfg, &series[i], &series[j])).collect()
}

/// Per pair: coherence sidecar, heatmap and WTC track. Returns the files
/// written.
pub fn cmd_coherence(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let series = load_returns(cfg)?;
    let pairs = resolve_pairs(cfg, &series)?;
    let results = analyze_pairs(cfg, &series, &pairs)?;
    let mut files = vec![prepare_out(cfg)?];
    for (&(i, j), r) in pairs.iter().zip(&results) {
        let stem = pair_stem(series[i].label(), series[j].label());
        let path = cfg.out.join(format!("coherence_{stem}.txt"));
        save_coherence_sidecar(
            &path,
            &r.field,
            series[i].timestamps(),
            Some(&r.significance.threshold_by_scale),
            &r.meta,
        )?;
        files.push(path);
        let path = cfg.out.join(format!("coherence_{stem}.png"));
        save_png(&render_coherence(&r.field, &cfg.plot)?, &path)?;
        files.push(path);
        let path = cfg.out.join(format!("track_wtc_{stem}.csv"));
        save_track_csv(&path, &r.track, &r.meta)?;
        files.push(path);
    }
    Ok(files)
}

/// Mean and standard deviation of one method's track for a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackStats {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub a: String,
    pub b: String,
    pub unconditional: f64,
    /// `None` when the DCC fit failed.
    pub dcc: Option<TrackStats>,
    pub wtc: TrackStats,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub rows: Vec<CompareRow>,
    pub files: Vec<PathBuf>,
    /// Why the DCC fit failed, if it did.
    pub dcc_error: Option<String>,
    /// Exit status the run should end with.
    pub exit_code: i32,
}

fn stats_of(track: &CorrelationTrack) -> Result<TrackStats> {
    let (mean, sd) = track_summary(track)?;
    Ok(TrackStats { mean, sd })
}

/// Unconditional, DCC and WTC correlation summaries for each pair, with
/// comparison plots. A failed DCC fit is reported in the outcome and the
/// table; the other methods are still computed.
pub fn cmd_compare(cfg: &RunConfig) -> Result<CompareOutcome> {
    let series = load_returns(cfg)?;
    let pairs = resolve_pairs(cfg, &series)?;
    let used: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect::<BTreeSet<_>>().into_iter().collect();
    let dcc: Option<Result<DccGarchFit>> = (used.len() >= 2).then(|| {
        let subset: Vec<ReturnSeries> = used.iter().map(|&i| series[i].clone()).collect();
        fit_dcc_garch(&subset, cfg.garch)
    });
    let (dcc_fit, dcc_error, exit_code) = match dcc {
        Some(Ok(fit)) => (Some(fit), None, 0),
        Some(Err(e)) => (None, Some(e.to_string()), e.exit_code()),
        None => (None, None, 0),
    };
    let analyses = analyze_pairs(cfg, &series, &pairs)?;

    let mut files = vec![prepare_out(cfg)?];
    let base_meta = cfg.metadata();
    if let Some(fit) = &dcc_fit {
        let path = cfg.out.join("dcc_fit.txt");
        std::fs::write(&path, base_meta.render() + &fit_report_text(fit))?;
        files.push(path);
        let path = cfg.out.join("dcc_fit.kv");
        std::fs::write(&path, fit_report_kv(fit, &base_meta))?;
        files.push(path);
    }

    let mut rows = Vec::with_capacity(pairs.len());
    for (&(i, j), wtc) in pairs.iter().zip(&analyses) {
        let (a, b) = (&series[i], &series[j]);
        let stem = pair_stem(a.label(), b.label());
        let unconditional = if i == j { 1.0 } else { pearson(a.values(), b.values())? };
        let dcc_track = match &dcc_fit {
            Some(fit) => {
                let (fi, fj) = (fit.index_of(a.label()), fit.index_of(b.label()));
                Some(fit.track(fi.expect("fitted series"), fj.expect("fitted series"))?)
            }
            None if i == j => {
                Some(CorrelationTrack::new(a.timestamps().to_vec(), vec![1.0; a.len()], TrackMethod::Dcc)?)
            }
            None => None,
        };
        let meta = wtc.meta.clone();
        let path = cfg.out.join(format!("track_wtc_{stem}.csv"));
        save_track_csv(&path, &wtc.track, &meta)?;
        files.push(path);
        let mut tracks = vec![wtc.track.clone()];
        if let Some(t) = &dcc_track {
            let path = cfg.out.join(format!("track_dcc_{stem}.csv"));
            save_track_csv(&path, t, &base_meta.clone().with("pair", format!("{}:{}", a.label(), b.label())))?;
            files.push(path);
            tracks.push(t.clone());
        }
        let path = cfg.out.join(format!("compare_{stem}.csv"));
        std::fs::write(&path, comparison_csv(&tracks, cfg.window, &meta)?)?;
        files.push(path);
        let path = cfg.out.join(format!("compare_{stem}.png"));
        save_png(&render_comparison(&tracks, cfg.window, &cfg.plot)?, &path)?;
        files.push(path);
        rows.push(CompareRow {
            a: a.label().to_string(),
            b: b.label().to_string(),
            unconditional,
            dcc: dcc_track.as_ref().map(stats_of).transpose()?,
            wtc: stats_of(&wtc.track)?,
        });
    }

    let mut csv = base_meta.clone();
    if let Some(e) = &dcc_error {
        csv.set("dcc_error", e);
    }
    let mut text = csv.render();
    text.push_str("a,b,method,mean,sd\n");
    for r in &rows {
        let _ = writeln!(text, "{},{},unconditional,{},", r.a, r.b, r.unconditional);
        match r.dcc {
            Some(s) => {
                let _ = writeln!(text, "{},{},dcc,{},{}", r.a, r.b, s.mean, s.sd);
            }
            None => {
                let _ = writeln!(text, "{},{},dcc,NA,NA", r.a, r.b);
            }
        }
        let _ = writeln!(text, "{},{},wtc,{},{}", r.a, r.b, r.wtc.mean, r.wtc.sd);
    }
    let path = cfg.out.join("compare.csv");
    std::fs::write(&path, text)?;
    files.push(path);
    let path = cfg.out.join("compare.txt");
    std::fs::write(&path, csv.render() + &compare_table(&rows, dcc_error.as_deref()))?;
    files.push(path);
    Ok(CompareOutcome { rows, files, dcc_error, exit_code })
}

fn comparison_csv(tracks: &[CorrelationTrack], window: usize, meta: &Metadata) -> Result<String> {
    let (dates, smoothed): (Vec<NaiveDate>, Vec<Vec<f64>>) = smoothed_tracks(tracks, window)?;
    let mut out = meta.clone().with("moving_average_window", window.min(tracks[0].len())).render();
    out.push_str("date");
    for t in tracks {
        let _ = write!(out, ",{}", t.method.as_str());
    }
    out.push('\n');
    for (k, d) in dates.iter().enumerate() {
        out.push_str(&d.format("%Y-%m-%d").to_string());
        for s in &smoothed {
            let _ = write!(out, ",{}", s[k]);
        }
        out.push('\n');
    }
    Ok(out)
}

/// Lower-triangular table in the layout of a correlation matrix: one block
/// of three rows (unconditional, DCC, WTC) per series, one column per
/// series, with standard deviations in parentheses.
pub fn compare_table(rows: &[CompareRow], dcc_error: Option<&str>) -> String {
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        for l in [r.a.as_str(), r.b.as_str()] {
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
    }
    let find = |x: &str, y: &str| rows.iter().find(|r| (r.a == x && r.b == y) || (r.a == y && r.b == x));
    let cell = 18;
    let lead = labels.iter().map(|l| l.len()).max().unwrap_or(0).max(15) + 2;
    let mut out = format!("{:lead$}", "");
    for l in &labels {
        let _ = write!(out, "{l:>cell$}");
    }
    out.push('\n');
    for (ri, row_label) in labels.iter().enumerate() {
        let cols = &labels[..ri + 1];
        if !cols.iter().any(|c| find(row_label, c).is_some()) {
            continue;
        }
        let _ = writeln!(out, "{row_label}");
        for method in ["Unconditional", "DCC", "WTC"] {
            let _ = write!(out, "  {method:<w$}", w = lead - 2);
            for c in cols {
                let text = match find(row_label, c) {
                    None => String::new(),
                    Some(r) => match method {
                        "Unconditional" => format!("{:.3}", r.unconditional),
                        "DCC" => r.dcc.map_or("NA".into(), |s| format!("{:.3} ({:.3})", s.mean, s.sd)),
                        _ => format!("{:.3} ({:.3})", r.wtc.mean, r.wtc.sd),
                    },
                };
                let _ = write!(out, "{text:>cell$}");
            }
            out.push('\n');
        }
    }
    if let Some(e) = dcc_error {
        let _ = writeln!(out, "\nDCC fit failed: {e}");
    }
    out
}
