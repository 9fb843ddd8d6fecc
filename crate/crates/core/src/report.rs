//! Curve data, its CSV form and a dependency-free SVG line chart.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    pub value: f64,
    pub std_error: f64,
}

/// One curve. `series` groups curves of the same run, `label` names the
/// curve in legends.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub series: String,
    pub label: String,
    pub points: Vec<CurvePoint>,
}

impl CurveSeries {
    pub fn new(series: impl Into<String>, label: impl Into<String>) -> Self {
        Self { series: series.into(), label: label.into(), points: Vec::new() }
    }

    /// Appends a point; `n` must exceed the previous one.
    pub fn push(&mut self, n: usize, value: f64, std_error: f64) -> Result<()> {
        if let Some(last) = self.points.last() {
            if n <= last.n {
                return Err(Error::InvalidParameter(format!("curve {}: n={n} after n={}", self.label, last.n)));
            }
        }
        self.points.push(CurvePoint { n, value, std_error });
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn value_at(&self, n: usize) -> Option<f64> {
        self.points.iter().find(|p| p.n == n).map(|p| p.value)
    }
}

const CSV_HEADER: [&str; 5] = ["series", "label", "n", "value", "std_error"];

/// Values are printed with 17 significant digits so that parsing gives
/// back the same bits.
pub fn write_curves_csv<W: Write>(curves: &[CurveSeries], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for c in curves {
        for p in &c.points {
            w.write_record([
                c.series.clone(),
                c.label.clone(),
                p.n.to_string(),
                format!("{:.16e}", p.value),
                format!("{:.16e}", p.std_error),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn curves_to_csv_string(curves: &[CurveSeries]) -> Result<String> {
    let mut buf = Vec::new();
    write_curves_csv(curves, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

/// Rows with the same (series, label) pair, in order of first appearance,
/// form one curve.
pub fn read_curves_csv<R: Read>(reader: R) -> Result<Vec<CurveSeries>> {
    let mut r = csv::Reader::from_reader(reader);
    if r.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::Parse("curve csv header must be series,label,n,value,std_error".into()));
    }
    let mut out: Vec<CurveSeries> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| Error::Parse(format!("bad number {:?}", &rec[i]))) };
        let n: usize = rec[2].parse().map_err(|_| Error::Parse(format!("bad n {:?}", &rec[2])))?;
        let (value, se) = (num(3)?, num(4)?);
        let pos = out.iter().position(|c| c.series == rec[0] && c.label == rec[1]);
        let curve = match pos {
            Some(i) => &mut out[i],
            None => {
                out.push(CurveSeries::new(&rec[0], &rec[1]));
                out.last_mut().expect("just pushed")
            }
        };
        curve.push(n, value, se)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxesConfig {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub width: f64,
    pub height: f64,
}

impl Default for AxesConfig {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: "n".into(),
            y_label: "value".into(),
            log_x: true,
            log_y: true,
            width: 720.0,
            height: 480.0,
        }
    }
}

const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 200.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Affine map from data (after an optional log10) to pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMap {
    pub log: bool,
    pub lo: f64,
    pub hi: f64,
    pub pixel_lo: f64,
    pub pixel_hi: f64,
}

impl AxisMap {
    fn fit(values: impl Iterator<Item = f64>, log: bool, pixel_lo: f64, pixel_hi: f64) -> Self {
        let t: Vec<f64> = values.map(|v| if log { v.log10() } else { v }).collect();
        let mut lo = t.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { log, lo, hi, pixel_lo, pixel_hi }
    }

    pub fn pixel(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        self.pixel_lo + (t - self.lo) / (self.hi - self.lo) * (self.pixel_hi - self.pixel_lo)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn drawable(v: f64, log: bool) -> bool {
    v.is_finite() && (!log || v > 0.0)
}

/// Pixel maps for the points that can be drawn (positive on log axes).
pub fn axis_maps(curves: &[CurveSeries], axes: &AxesConfig) -> Result<(AxisMap, AxisMap)> {
    let pts: Vec<(f64, f64)> = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| (p.n as f64, p.value)))
        .filter(|&(x, y)| drawable(x, axes.log_x) && drawable(y, axes.log_y))
        .collect();
    if pts.is_empty() {
        return Err(Error::InvalidParameter("nothing to plot".into()));
    }
    let x = AxisMap::fit(pts.iter().map(|p| p.0), axes.log_x, MARGIN_LEFT, axes.width - MARGIN_RIGHT);
    let y = AxisMap::fit(pts.iter().map(|p| p.1), axes.log_y, axes.height - MARGIN_BOTTOM, MARGIN_TOP);
    Ok((x, y))
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.round() as i64)
    } else {
        format!("{v:.3}")
    }
}

/// Self-contained SVG: one polyline with markers per curve and a legend.
/// Points that cannot be placed (non-positive on a log axis, non-finite)
/// are skipped.
pub fn emit_svg(curves: &[CurveSeries], axes: &AxesConfig) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::InvalidParameter("no series to plot".into()));
    }
    let (xm, ym) = axis_maps(curves, axes)?;
    let (w, h) = (axes.width, axes.height);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN_LEFT, w - MARGIN_RIGHT, h - MARGIN_BOTTOM, MARGIN_TOP);
    let _ = writeln!(s, r#"<rect class="frame" x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    for (map, horizontal) in [(xm, true), (ym, false)] {
        let ticks: Vec<f64> = if map.log {
            (map.lo.ceil() as i64..=map.hi.floor() as i64).map(|k| k as f64).collect()
        } else {
            (0..=4).map(|i| map.lo + (map.hi - map.lo) * i as f64 / 4.0).collect()
        };
        for t in ticks {
            let p = map.pixel_lo + (t - map.lo) / (map.hi - map.lo) * (map.pixel_hi - map.pixel_lo);
            if horizontal {
                let _ = writeln!(s, r#"<line x1="{p:.2}" y1="{y0}" x2="{p:.2}" y2="{}" stroke="black"/><text x="{p:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + 5.0, y0 + 18.0, tick_label(t, map.log));
            } else {
                let _ = writeln!(s, r#"<line x1="{}" y1="{p:.2}" x2="{x0}" y2="{p:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 5.0, x0 - 8.0, p + 4.0, tick_label(t, map.log));
            }
        }
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, h - 15.0, escape(&axes.x_label));
    let _ = writeln!(s, r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#, (y0 + y1) / 2.0, escape(&axes.y_label));
    if !axes.title.is_empty() {
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, (x0 + x1) / 2.0, escape(&axes.title));
    }
    for (k, c) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = c
            .points
            .iter()
            .filter(|p| drawable(p.n as f64, axes.log_x) && drawable(p.value, axes.log_y))
            .map(|p| (xm.pixel(p.n as f64), ym.pixel(p.value)))
            .collect();
        let coords = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, r#"<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>"#);
        for (x, y) in &pts {
            let _ = writeln!(s, r#"<circle class="marker" cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
        }
        let ly = y1 + 10.0 + 20.0 * k as f64;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#, x1 + 10.0, x1 + 30.0, x1 + 35.0, ly + 4.0, escape(&c.label));
    }
    s.push_str("</svg>\n");
    Ok(s)
}
