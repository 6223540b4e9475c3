//! CSV and SVG emission and the per-run record.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 12 significant digits, fixed scientific layout.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        format!("{v}")
    }
}

fn render(c: &Cell) -> String {
    match c {
        Cell::Num(v) => fmt_num(*v),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

pub fn csv_string(header: &[&str], rows: &[Vec<Cell>]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Invalid("refusing to write a table without rows".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != header.len()) {
        return Err(Error::Dimension(format!("row with {} cells under a {}-column header", r.len(), header.len())));
    }
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.iter().map(render).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let text = csv_string(header, rows)?;
    write_file(path, &text)
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

pub struct Axis {
    pub label: String,
    pub log: bool,
}

impl Axis {
    pub fn log(label: &str) -> Self {
        Self { label: label.into(), log: true }
    }

    pub fn linear(label: &str) -> Self {
        Self { label: label.into(), log: false }
    }

    fn map(&self, v: f64) -> f64 {
        if self.log {
            v.log10()
        } else {
            v
        }
    }
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0).max(1e-300) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0).max(1e-300) * (H - 2.0 * PAD)
    }
}

fn span(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Tick positions in plot coordinates (log10 for log axes) with labels.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let decades: Vec<f64> = (lo.ceil() as i64..=hi.floor() as i64).map(|d| d as f64).collect();
        if decades.len() >= 2 {
            let stride = decades.len().div_ceil(8);
            return decades.iter().step_by(stride).map(|&d| (d, format!("1e{d}"))).collect();
        }
    }
    (0..=4)
        .map(|k| {
            let v = lo + (hi - lo) * k as f64 / 4.0;
            let shown = if log { 10f64.powf(v) } else { v };
            (v, format!("{shown:.3}"))
        })
        .map(|(v, l)| if l.len() > 8 { (v, format!("{:.2e}", if log { 10f64.powf(v) } else { v })) } else { (v, l) })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(out: &mut String, f: &Frame, xa: &Axis, ya: &Axis, title: &str) {
    let _ = writeln!(
        out,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for (x, label) in ticks(f.x0, f.x1, xa.log) {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{label}</text>"#, f.px(x), H - PAD + 16.0);
    }
    for (y, label) in ticks(f.y0, f.y1, ya.log) {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{label}</text>"#, PAD - 6.0, f.py(y) + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#, W / 2.0, H - 15.0, escape(&xa.label));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(&ya.label)
    );
    let _ = writeln!(out, r#"<text x="{:.1}" y="30" font-size="15" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
}

/// Self-contained line plot of labelled series.
pub fn svg_lines(title: &str, xa: &Axis, ya: &Axis, series: &[(String, Vec<(f64, f64)>)]) -> Result<String> {
    if series.iter().all(|s| s.1.is_empty()) {
        return Err(Error::Invalid("nothing to plot".into()));
    }
    let pts = || series.iter().flat_map(|s| s.1.iter());
    let (x0, x1) = span(pts().map(|p| xa.map(p.0)));
    let (y0, y1) = span(pts().map(|p| ya.map(p.1)));
    let f = Frame { x0, x1, y0, y1 };
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    axes(&mut out, &f, xa, ya, title);
    for (k, (label, p)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = p
            .iter()
            .filter(|q| xa.map(q.0).is_finite() && ya.map(q.1).is_finite())
            .map(|q| format!("{:.2},{:.2}", f.px(xa.map(q.0)), f.py(ya.map(q.1))))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, path.join(" "));
        for q in &path {
            let (x, y) = q.split_once(',').expect("formatted pair");
            let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">{}</text>"#,
            W - PAD - 150.0,
            PAD + 16.0 + 15.0 * k as f64,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Heat map of `values[i][j]` at `(xs[j], ys[i])` with a colour bar range in the title.
pub fn svg_heatmap(title: &str, xa: &Axis, ya: &Axis, xs: &[f64], ys: &[f64], values: &[Vec<f64>]) -> Result<String> {
    if xs.is_empty() || ys.is_empty() || values.len() != ys.len() || values.iter().any(|r| r.len() != xs.len()) {
        return Err(Error::Dimension("heat map needs a full grid of values".into()));
    }
    let (x0, x1) = span(xs.iter().map(|&x| xa.map(x)));
    let (y0, y1) = span(ys.iter().map(|&y| ya.map(y)));
    let (v0, v1) = span(values.iter().flatten().copied());
    let cell = |s: &[f64], k: usize, map: &dyn Fn(f64) -> f64| {
        let c = map(s[k]);
        let lo = if k > 0 { 0.5 * (c + map(s[k - 1])) } else { c - 0.5 * (map(s.get(1).copied().unwrap_or(s[k])) - c).abs().max(1e-3) };
        let hi = if k + 1 < s.len() { 0.5 * (c + map(s[k + 1])) } else { c + 0.5 * (c - map(s[k.saturating_sub(1)])).abs().max(1e-3) };
        (lo, hi)
    };
    let (xl, _) = cell(xs, 0, &|v| xa.map(v));
    let (_, xh) = cell(xs, xs.len() - 1, &|v| xa.map(v));
    let (yl, _) = cell(ys, 0, &|v| ya.map(v));
    let (_, yh) = cell(ys, ys.len() - 1, &|v| ya.map(v));
    let f = Frame { x0: xl.min(x0), x1: xh.max(x1), y0: yl.min(y0), y1: yh.max(y1) };
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    for (i, row) in values.iter().enumerate() {
        let (ya0, ya1) = cell(ys, i, &|v| ya.map(v));
        for (j, &v) in row.iter().enumerate() {
            let (xa0, xa1) = cell(xs, j, &|v| xa.map(v));
            let s = ((v - v0) / (v1 - v0)).clamp(0.0, 1.0);
            let (r, g, b) = ((255.0 * s) as u8, (90.0 + 80.0 * (1.0 - (2.0 * s - 1.0).abs())) as u8, (255.0 * (1.0 - s)) as u8);
            let _ = writeln!(
                out,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#{r:02x}{g:02x}{b:02x}"><title>{}</title></rect>"##,
                f.px(xa0),
                f.py(ya1),
                f.px(xa1) - f.px(xa0),
                f.py(ya0) - f.py(ya1),
                fmt_num(v)
            );
        }
    }
    let title = format!("{title} [{} .. {}]", fmt_num(v0), fmt_num(v1));
    axes(&mut out, &f, xa, ya, &title);
    out.push_str("</svg>\n");
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    LowConfidence,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct OpRecord {
    pub name: String,
    pub status: Status,
    pub seconds: f64,
    /// Error kind or summary line.
    pub detail: String,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub version: String,
    pub operations: Vec<OpRecord>,
}

impl RunRecord {
    pub fn new(config_text: &str) -> Self {
        Self { config_hash: config_hash(config_text), version: env!("CARGO_PKG_VERSION").into(), operations: Vec::new() }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("run.json");
        write_file(&path, &(serde_json::to_string_pretty(self)? + "\n"))?;
        Ok(path)
    }
}

/// SHA-256 of the canonical config text, hex encoded.
pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_csv() {
        let s = csv_string(&["a", "b"], &[vec![Cell::Num(1.0 / 3.0), Cell::Int(4)]]).unwrap();
        assert_eq!(s, "a,b\n3.33333333333e-1,4\n");
        assert!(csv_string(&["a"], &[]).is_err());
    }

    #[test]
    fn twelve_digits_round_trip() {
        for v in [std::f64::consts::PI, -1.0e-7 / 3.0, 12345.678901234] {
            let back: f64 = fmt_num(v).parse().unwrap();
            assert!((back - v).abs() <= 5e-12 * v.abs());
        }
    }

    #[test]
    fn svg_is_self_contained() {
        let s = svg_lines("t", &Axis::log("rho"), &Axis::log("omega"), &[("c".into(), vec![(1e-2, 0.1), (1.0, 1.0)])]).unwrap();
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(!s.contains("href"));
    }
}
