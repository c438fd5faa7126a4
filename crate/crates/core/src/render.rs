//! Heatmaps, comparison plots and the data sidecars behind them.
//!
//! A coherence sidecar is plain text: a `# key: value` header followed by
//! `[scales]`, `[r2]`, `[phase]`, optional `[mask]`, and `[coi]` blocks.
//! Matrix blocks have one row per time point and one column per scale.
//! Floats are written in shortest round-trip form, so re-reading a sidecar
//! reproduces every value bit for bit, and images are a pure function of the
//! sidecar contents and the [`PlotSpec`].

use std::f64::consts::FRAC_PI_2;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::coherence::{CoherenceField, SmootherSpec};
use crate::comovement::{CorrelationTrack, TrackMethod};
use crate::cwt::{MorletParams, ScaleGrid};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metadata::Metadata;
use crate::timeseries::moving_average;

const MARGIN: u32 = 24;
const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const BLACK: Rgb<u8> = Rgb([0, 0, 0]);
const GRID_GRAY: Rgb<u8> = Rgb([210, 210, 210]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Colormap {
    /// Blue through cyan, yellow and red: cold for low coherence, warm for high.
    Jet,
    Grayscale,
}

impl Colormap {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "jet" => Ok(Colormap::Jet),
            "grayscale" | "gray" => Ok(Colormap::Grayscale),
            other => Err(Error::InvalidInput(format!("unknown colormap '{other}'"))),
        }
    }

    pub fn color(&self, v: f64) -> Rgb<u8> {
        let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
        match self {
            Colormap::Jet => {
                let ch = |c: f64| to_u8((1.5 - (4.0 * v - c).abs()).clamp(0.0, 1.0));
                Rgb([ch(3.0), ch(2.0), ch(1.0)])
            }
            Colormap::Grayscale => {
                let g = to_u8(1.0 - v);
                Rgb([g, g, g])
            }
        }
    }
}

fn to_u8(v: f64) -> u8 {
    (v * 255.0).round() as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub colormap: Colormap,
    /// Pixel spacing between phase arrows.
    pub arrow_stride: u32,
    pub width: u32,
    pub height: u32,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self { colormap: Colormap::Jet, arrow_stride: 24, width: 960, height: 400 }
    }
}

impl PlotSpec {
    pub fn validate(&self) -> Result<()> {
        if self.arrow_stride < 1 {
            return Err(Error::InvalidInput("arrow stride must be at least 1".into()));
        }
        if self.width < 16 || self.height < 16 {
            return Err(Error::InvalidInput("plot area must be at least 16 x 16 pixels".into()));
        }
        Ok(())
    }
}

/// Heatmap of squared coherence: time left to right, log2 period growing
/// downward. Edge-affected cells are dimmed and bounded by a black line,
/// significant regions are outlined, and arrows show phase (right in phase,
/// up when the first series leads by a quarter cycle).
pub fn render_coherence(field: &CoherenceField, spec: &PlotSpec) -> Result<RgbImage> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let n = field.n();
    let grid = field.grid();
    let nj = grid.len();
    let col = |x: u32| ((x as u64 * n as u64) / w as u64) as usize;
    let row = |y: u32| {
        if nj == 1 || h == 1 {
            0
        } else {
            ((y as f64 / (h - 1) as f64) * (nj - 1) as f64).round() as usize
        }
    };
    let inside = |x: u32, y: u32| field.coi().contains(col(x), grid.scales()[row(y)]);
    let significant = |x: u32, y: u32| field.sig_mask().is_some_and(|m| m[(row(y), col(x))]);

    let mut img = RgbImage::from_pixel(w + 2 * MARGIN, h + 2 * MARGIN, WHITE);
    for y in 0..h {
        for x in 0..w {
            let mut c = spec.colormap.color(field.r2()[(row(y), col(x))]);
            if !inside(x, y) {
                c = Rgb(c.0.map(|v| ((v as u16 + 255) / 2) as u8));
            }
            img.put_pixel(MARGIN + x, MARGIN + y, c);
        }
    }
    for y in 0..h {
        for x in 0..w {
            let right = x + 1 < w;
            let down = y + 1 < h;
            let coi_edge = (right && inside(x, y) != inside(x + 1, y)) || (down && inside(x, y) != inside(x, y + 1));
            let sig_edge = (right && significant(x, y) != significant(x + 1, y))
                || (down && significant(x, y) != significant(x, y + 1));
            if coi_edge || sig_edge {
                img.put_pixel(MARGIN + x, MARGIN + y, BLACK);
            }
        }
    }

    let stride = spec.arrow_stride;
    let half = stride / 2;
    let len = (stride as f64 * 0.4).max(2.0);
    let mut y = half;
    while y < h {
        let mut x = half;
        while x < w {
            if significant(x, y) && inside(x, y) {
                let phi = field.phase()[(row(y), col(x))];
                draw_arrow(&mut img, (MARGIN + x) as f64, (MARGIN + y) as f64, phi, len);
            }
            x += stride;
        }
        y += stride;
    }

    draw_frame(&mut img, w, h);
    let periods = grid.fourier_periods();
    let (lo, hi) = (periods[0].log2(), periods[nj - 1].log2());
    if hi > lo {
        let mut p = lo.ceil();
        while p <= hi {
            let y = MARGIN as f64 + (p - lo) / (hi - lo) * (h - 1) as f64;
            for dx in 0..6 {
                put(&mut img, (MARGIN - 6 + dx) as i64, y.round() as i64, BLACK);
            }
            p += 1.0;
        }
    }
    Ok(img)
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

fn draw_line(img: &mut RgbImage, (x0, y0): (f64, f64), (x1, y1): (f64, f64), c: Rgb<u8>, dash: Option<u32>) {
    let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as u32;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let (x, y) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        if dash.is_some_and(|d| (x.round() as u32 / d) % 2 == 1) {
            continue;
        }
        put(img, x.round() as i64, y.round() as i64, c);
    }
}

fn draw_arrow(img: &mut RgbImage, cx: f64, cy: f64, phi: f64, len: f64) {
    // screen y grows downward, so a positive angle points up
    let (dx, dy) = (phi.cos(), -phi.sin());
    let tail = (cx - dx * len / 2.0, cy - dy * len / 2.0);
    let tip = (cx + dx * len / 2.0, cy + dy * len / 2.0);
    draw_line(img, tail, tip, BLACK, None);
    let head = len * 0.35;
    for turn in [FRAC_PI_2 * 1.5, -FRAC_PI_2 * 1.5] {
        let a = (-dy).atan2(dx) + turn;
        draw_line(img, tip, (tip.0 + head * a.cos(), tip.1 - head * a.sin()), BLACK, None);
    }
}

fn draw_frame(img: &mut RgbImage, w: u32, h: u32) {
    for x in MARGIN - 1..=MARGIN + w {
        img.put_pixel(x, MARGIN - 1, BLACK);
        img.put_pixel(x, MARGIN + h, BLACK);
    }
    for y in MARGIN - 1..=MARGIN + h {
        img.put_pixel(MARGIN - 1, y, BLACK);
        img.put_pixel(MARGIN + w, y, BLACK);
    }
}

/// Style used for a track in the comparison plot.
fn track_style(method: TrackMethod) -> (Rgb<u8>, Option<u32>) {
    match method {
        TrackMethod::Wtc => (BLACK, None),
        TrackMethod::Dcc => (Rgb([200, 30, 30]), Some(6)),
        TrackMethod::Unconditional => (Rgb([110, 110, 110]), Some(2)),
    }
}

/// Moving averages of each track, aligned to the last date of each window.
pub fn smoothed_tracks(tracks: &[CorrelationTrack], window: usize) -> Result<(Vec<NaiveDate>, Vec<Vec<f64>>)> {
    let first = tracks.first().ok_or_else(|| Error::InvalidInput("no tracks to compare".into()))?;
    if first.is_empty() {
        return Err(Error::InvalidInput("empty correlation track".into()));
    }
    if let Some(t) = tracks.iter().find(|t| t.timestamps != first.timestamps) {
        return Err(Error::InvalidInput(format!("tracks are not aligned ({} and {} points)", first.len(), t.len())));
    }
    let window = window.min(first.len()).max(1);
    let smoothed = tracks.iter().map(|t| moving_average(&t.values, window)).collect::<Result<Vec<_>>>()?;
    Ok((first.timestamps[window - 1..].to_vec(), smoothed))
}

/// Line plot of moving-averaged tracks on a common vertical scale that
/// always includes [0, 1]. WTC is solid black, DCC dashed, unconditional
/// dotted.
pub fn render_comparison(tracks: &[CorrelationTrack], window: usize, spec: &PlotSpec) -> Result<RgbImage> {
    spec.validate()?;
    let (_, smoothed) = smoothed_tracks(tracks, window)?;
    let (w, h) = (spec.width, spec.height);
    let lo = smoothed.iter().flatten().cloned().fold(0.0f64, f64::min).max(-1.0);
    let hi = 1.0;
    let mut img = RgbImage::from_pixel(w + 2 * MARGIN, h + 2 * MARGIN, WHITE);
    let to_y = |v: f64| MARGIN as f64 + (hi - v) / (hi - lo) * (h - 1) as f64;
    for level in [0.0, 0.25, 0.5, 0.75, 1.0] {
        if level >= lo {
            draw_line(&mut img, (MARGIN as f64, to_y(level)), ((MARGIN + w - 1) as f64, to_y(level)), GRID_GRAY, None);
        }
    }
    for (track, values) in tracks.iter().zip(&smoothed) {
        let (c, dash) = track_style(track.method);
        let m = values.len();
        let to_x = |i: usize| MARGIN as f64 + if m > 1 { i as f64 / (m - 1) as f64 * (w - 1) as f64 } else { 0.0 };
        if m == 1 {
            put(&mut img, to_x(0).round() as i64, to_y(values[0]).round() as i64, c);
        }
        for i in 1..m {
            draw_line(&mut img, (to_x(i - 1), to_y(values[i - 1])), (to_x(i), to_y(values[i])), c, dash);
        }
    }
    draw_frame(&mut img, w, h);
    Ok(img)
}

pub fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png).map_err(|e| Error::Image(format!("{}: {e}", path.display())))
}

/// A coherence field together with the dates and metadata it was stored with.
#[derive(Debug, Clone)]
pub struct CoherenceSidecar {
    pub meta: Metadata,
    pub timestamps: Vec<NaiveDate>,
    pub field: CoherenceField,
    pub thresholds: Option<Vec<f64>>,
}

fn grid_metadata(field: &CoherenceField) -> Metadata {
    let g = field.grid();
    let sm = field.smoother();
    Metadata::new()
        .with("grid.s0", g.s0())
        .with("grid.dj", g.dj())
        .with("grid.dt", g.dt())
        .with("grid.num_scales", g.len())
        .with("grid.omega0", g.params().omega0())
        .with("smoother.time_sigma", sm.time_sigma)
        .with("smoother.scale_width", sm.scale_width)
        .with("n", field.n())
}

pub fn write_coherence_sidecar<W: Write>(
    out: W,
    field: &CoherenceField,
    timestamps: &[NaiveDate],
    thresholds: Option<&[f64]>,
    meta: &Metadata,
) -> Result<()> {
    let n = field.n();
    if timestamps.len() != n {
        return Err(Error::LengthMismatch { left: timestamps.len(), right: n });
    }
    if thresholds.is_some_and(|t| t.len() != field.grid().len()) {
        return Err(Error::InvalidInput("one threshold per scale is required".into()));
    }
    let mut out = std::io::BufWriter::new(out);
    let mut header = meta.clone();
    header.extend(&grid_metadata(field));
    out.write_all(header.render().as_bytes())?;
    let grid = field.grid();
    writeln!(out, "[scales]")?;
    writeln!(out, "index,scale,period,threshold")?;
    for j in 0..grid.len() {
        let thr = thresholds.map_or(String::new(), |t| t[j].to_string());
        writeln!(out, "{j},{},{},{thr}", grid.scales()[j], grid.fourier_periods()[j])?;
    }
    let header_row: String = grid.scales().iter().map(|s| format!(",{s}")).collect();
    let dates: Vec<String> = timestamps.iter().map(|d| d.format("%Y-%m-%d").to_string()).collect();
    let mut block = |name: &str, value: &dyn Fn(usize, usize) -> String| -> std::io::Result<()> {
        writeln!(out, "[{name}]")?;
        writeln!(out, "date{header_row}")?;
        for (u, d) in dates.iter().enumerate() {
            out.write_all(d.as_bytes())?;
            for j in 0..grid.len() {
                write!(out, ",{}", value(j, u))?;
            }
            writeln!(out)?;
        }
        Ok(())
    };
    block("r2", &|j, u| field.r2()[(j, u)].to_string())?;
    block("phase", &|j, u| field.phase()[(j, u)].to_string())?;
    if let Some(mask) = field.sig_mask() {
        block("mask", &|j, u| u8::from(mask[(j, u)]).to_string())?;
    }
    writeln!(out, "[coi]")?;
    writeln!(out, "date,max_scale")?;
    for (d, b) in dates.iter().zip(field.coi().boundary()) {
        writeln!(out, "{d},{b}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_coherence_sidecar(
    path: &Path,
    field: &CoherenceField,
    timestamps: &[NaiveDate],
    thresholds: Option<&[f64]>,
    meta: &Metadata,
) -> Result<()> {
    let mut buf = Vec::new();
    write_coherence_sidecar(&mut buf, field, timestamps, thresholds, meta)?;
    std::fs::write(path, buf)?;
    Ok(())
}

fn meta_num<T: std::str::FromStr>(meta: &Metadata, key: &str) -> Result<T> {
    let raw = meta.get(key).ok_or_else(|| Error::Sidecar(format!("missing header key '{key}'")))?;
    raw.parse().map_err(|_| Error::Sidecar(format!("header key '{key}' has unparsable value '{raw}'")))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Sidecar(format!("bad number '{s}'")))
}

pub fn read_coherence_sidecar<R: Read>(input: R) -> Result<CoherenceSidecar> {
    let mut lines = BufReader::new(input).lines();
    let (meta, first) = Metadata::parse_header(&mut lines)?;
    let grid = ScaleGrid::new(
        meta_num(&meta, "grid.s0")?,
        meta_num(&meta, "grid.dj")?,
        meta_num(&meta, "grid.num_scales")?,
        meta_num(&meta, "grid.dt")?,
        MorletParams::new(meta_num(&meta, "grid.omega0")?)?,
    )?;
    let smoother = SmootherSpec {
        time_sigma: meta_num(&meta, "smoother.time_sigma")?,
        scale_width: meta_num(&meta, "smoother.scale_width")?,
    };
    let n: usize = meta_num(&meta, "n")?;
    let nj = grid.len();

    let mut sections: Vec<(String, Vec<String>)> = Vec::new();
    for line in first.into_iter().map(Ok).chain(lines) {
        let line = line?;
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            sections.push((name.to_string(), Vec::new()));
        } else if !line.is_empty() {
            let (_, body) =
                sections.last_mut().ok_or_else(|| Error::Sidecar(format!("data before first section: '{line}'")))?;
            body.push(line);
        }
    }
    let section = |name: &str| sections.iter().find(|(s, _)| s == name).map(|(_, b)| b.as_slice());

    let scales = section("scales").ok_or_else(|| Error::Sidecar("missing [scales] block".into()))?;
    if scales.len() != nj + 1 {
        return Err(Error::Sidecar(format!("[scales] has {} rows, expected {nj}", scales.len().saturating_sub(1))));
    }
    let mut thresholds = Vec::with_capacity(nj);
    for (j, row) in scales[1..].iter().enumerate() {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 4 {
            return Err(Error::Sidecar(format!("bad [scales] row '{row}'")));
        }
        if parse_f64(cells[1])?.to_bits() != grid.scales()[j].to_bits() {
            return Err(Error::Sidecar(format!("scale {j} disagrees with the header grid")));
        }
        if !cells[3].is_empty() {
            thresholds.push(parse_f64(cells[3])?);
        }
    }
    let thresholds = match thresholds.len() {
        0 => None,
        k if k == nj => Some(thresholds),
        _ => return Err(Error::Sidecar("thresholds given for only some scales".into())),
    };

    let mut timestamps = Vec::with_capacity(n);
    let mut matrix = |name: &str, dates: bool| -> Result<Option<Matrix<f64>>> {
        let Some(body) = section(name) else { return Ok(None) };
        if body.len() != n + 1 {
            return Err(Error::Sidecar(format!("[{name}] has {} rows, expected {n}", body.len().saturating_sub(1))));
        }
        let mut m = Matrix::filled(nj, n, 0.0);
        for (u, row) in body[1..].iter().enumerate() {
            let mut cells = row.split(',');
            let d = cells.next().unwrap_or_default();
            if dates {
                timestamps.push(
                    NaiveDate::parse_from_str(d, "%Y-%m-%d")
                        .map_err(|e| Error::Sidecar(format!("bad date '{d}': {e}")))?,
                );
            }
            let mut count = 0;
            for (j, c) in cells.enumerate() {
                if j >= nj {
                    return Err(Error::Sidecar(format!("[{name}] row {u} has too many columns")));
                }
                m[(j, u)] = parse_f64(c)?;
                count += 1;
            }
            if count != nj {
                return Err(Error::Sidecar(format!("[{name}] row {u} has {count} columns, expected {nj}")));
            }
        }
        Ok(Some(m))
    };
    let r2 = matrix("r2", true)?.ok_or_else(|| Error::Sidecar("missing [r2] block".into()))?;
    let phase = matrix("phase", false)?.ok_or_else(|| Error::Sidecar("missing [phase] block".into()))?;
    let mask = matrix("mask", false)?.map(|m| m.map(|v| v != 0.0));
    let field = CoherenceField::from_parts(r2, phase, grid, smoother, mask)?;
    Ok(CoherenceSidecar { meta, timestamps, field, thresholds })
}

pub fn load_coherence_sidecar(path: &Path) -> Result<CoherenceSidecar> {
    read_coherence_sidecar(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::wavelet_coherence;
    use crate::cwt::default_scale_grid;
    use crate::significance::{fit_ar1, significance_test};

    fn dates(n: usize) -> Vec<NaiveDate> {
        NaiveDate::from_ymd_opt(2001, 1, 1).unwrap().iter_days().take(n).collect()
    }

    fn fixture(n: usize) -> CoherenceField {
        let x: Vec<f64> = (0..n).map(|t| (t as f64 * 0.2).sin() + (t as f64 * 0.031).cos()).collect();
        let y: Vec<f64> = (0..n).map(|t| (t as f64 * 0.2 + 0.5).sin() + ((t * t) as f64 * 0.001).sin()).collect();
        let grid = default_scale_grid(n, 1.0).unwrap();
        wavelet_coherence(&x, &y, &grid, &SmootherSpec::default()).unwrap()
    }

    #[test]
    fn jet_runs_cold_to_warm() {
        let lo = Colormap::Jet.color(0.0);
        let hi = Colormap::Jet.color(1.0);
        assert!(lo.0[2] > lo.0[0] && hi.0[0] > hi.0[2]);
        assert_eq!(Colormap::Grayscale.color(0.0), WHITE);
    }

    #[test]
    fn sidecar_round_trip_is_bit_exact() {
        let mut field = fixture(200);
        let x: Vec<f64> = (0..200).map(|t| (t as f64).sin()).collect();
        let m = fit_ar1(&x).unwrap();
        let sig = significance_test(&field, &m, &m, 100, 1).unwrap();
        field.set_sig_mask(sig.mask.clone()).unwrap();
        let mut buf = Vec::new();
        let meta = Metadata::new().with("pair", "a,b");
        write_coherence_sidecar(&mut buf, &field, &dates(200), Some(&sig.threshold_by_scale), &meta).unwrap();
        let back = read_coherence_sidecar(buf.as_slice()).unwrap();
        assert_eq!(back.timestamps, dates(200));
        assert_eq!(back.meta.get("pair"), Some("a,b"));
        assert_eq!(back.thresholds.as_deref(), Some(sig.threshold_by_scale.as_slice()));
        let bits = |m: &Matrix<f64>| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(back.field.r2()), bits(field.r2()));
        assert_eq!(bits(back.field.phase()), bits(field.phase()));
        assert_eq!(back.field.sig_mask(), field.sig_mask());
        assert_eq!(back.field.grid().scales(), field.grid().scales());

        let spec = PlotSpec { width: 200, height: 80, ..PlotSpec::default() };
        let a = render_coherence(&field, &spec).unwrap();
        let b = render_coherence(&back.field, &spec).unwrap();
        assert_eq!(a.as_raw(), b.as_raw());
    }

    #[test]
    fn truncated_sidecar_is_rejected() {
        let field = fixture(100);
        let mut buf = Vec::new();
        write_coherence_sidecar(&mut buf, &field, &dates(100), None, &Metadata::new()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut = &text[..text.find("[phase]").unwrap() - 40];
        assert!(read_coherence_sidecar(cut.as_bytes()).is_err());
        assert!(write_coherence_sidecar(Vec::new(), &field, &dates(99), None, &Metadata::new()).is_err());
    }

    #[test]
    fn self_coherence_arrows_point_right() {
        let n = 256;
        let x: Vec<f64> = (0..n).map(|t| (t as f64 * 0.3).sin() + (t as f64 * 0.05).cos()).collect();
        let grid = default_scale_grid(n, 1.0).unwrap();
        let mut field = wavelet_coherence(&x, &x, &grid, &SmootherSpec::default()).unwrap();
        field.set_sig_mask(Matrix::filled(grid.len(), n, true)).unwrap();
        let spec = PlotSpec { width: 128, height: 64, arrow_stride: 32, colormap: Colormap::Jet };
        let img = render_coherence(&field, &spec).unwrap();
        // arrow centres sit at 16 + 32k; (48, 16) is well inside the cone
        let (cx, cy) = (MARGIN + 48, MARGIN + 16);
        let right_tip = img.get_pixel(cx + 6, cy);
        let left_tail = img.get_pixel(cx - 6, cy);
        assert_eq!(*right_tip, BLACK);
        assert_eq!(*left_tail, BLACK);
        assert_eq!(*img.get_pixel(cx, cy - 5), Colormap::Jet.color(1.0));
    }

    #[test]
    fn comparison_of_constant_tracks() {
        let d = dates(120);
        let a = CorrelationTrack::new(d.clone(), vec![0.25; 120], TrackMethod::Wtc).unwrap();
        let b = CorrelationTrack::new(d.clone(), vec![0.75; 120], TrackMethod::Dcc).unwrap();
        let spec = PlotSpec { width: 100, height: 101, ..PlotSpec::default() };
        let img = render_comparison(&[a.clone(), b], 50, &spec).unwrap();
        // range [0, 1] over 101 rows: 0.25 sits on row 75, 0.75 on row 25
        assert_eq!(*img.get_pixel(MARGIN + 10, MARGIN + 75), BLACK);
        assert_eq!(*img.get_pixel(MARGIN + 2, MARGIN + 25), track_style(TrackMethod::Dcc).0);
        let (dates_out, sm) = smoothed_tracks(&[a], 50).unwrap();
        assert_eq!(dates_out.len(), 71);
        assert!(sm[0].iter().all(|v| (v - 0.25).abs() < 1e-15));
        assert!(render_comparison(&[], 50, &spec).is_err());
    }
}
