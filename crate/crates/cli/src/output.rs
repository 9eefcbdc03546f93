//! CSV tables, SVG plots and atomic file writes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rug::Float;

/// Shortest text that parses back to the same double.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Extended-precision value at 30 significant digits.
pub fn wide(x: &Float) -> String {
    format!("{x:.30e}")
}

pub fn flag(b: bool) -> String {
    b.to_string()
}

/// Variant name of an error enum, used as the tag in failure rows.
pub fn tag<E: std::fmt::Debug>(e: &E) -> String {
    let text = format!("{e:?}");
    text.split(|c: char| !c.is_alphanumeric() && c != '_').next().unwrap_or_default().to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    /// Column names with units in brackets.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// First record `config_sha256,<hash>`, then the column header, then the rows.
    pub fn to_csv(&self, hash: &str) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        w.write_record(["config_sha256", hash]).expect("in-memory write");
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let file = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp: PathBuf = dir.join(format!(".{file}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

pub struct Plot {
    pub name: String,
    pub svg: String,
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn frame(title: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>
"#,
        W / 2.0,
        escape(title)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Polylines of `(x, y)` points, one per labelled series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = frame(title);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (v, anchor, y) in [(y0, "end", sy(y0)), (y1, "end", sy(y1))] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y:.2}" font-family="sans-serif" font-size="10" text-anchor="{anchor}">{v:.3}</text>"#,
            PAD - 4.0
        );
    }
    for (v, x) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{v}</text>"#,
            H - PAD + 14.0
        );
    }
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> =
            pts.iter().filter(|p| p.1.is_finite()).map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ =
            writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            PAD + 8.0,
            PAD + 16.0 + 14.0 * i as f64,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Points in the plane with reference circles about the origin.
pub fn scatter(title: &str, points: &[Complex64], circles: &[(String, f64)]) -> String {
    let extent = points.iter().map(|z| z.norm()).chain(circles.iter().map(|c| c.1)).fold(1.0, f64::max) * 1.05;
    let scale = (H - 2.0 * PAD) / (2.0 * extent);
    let (cx, cy) = (W / 2.0, H / 2.0 + 8.0);
    let mut s = frame(title);
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{cy}" x2="{}" y2="{cy}" stroke="lightgray"/>"#,
        cx - extent * scale,
        cx + extent * scale
    );
    let _ = writeln!(
        s,
        r#"<line x1="{cx}" y1="{}" x2="{cx}" y2="{}" stroke="lightgray"/>"#,
        cy - extent * scale,
        cy + extent * scale
    );
    for (i, (label, r)) in circles.iter().enumerate() {
        let color = PALETTE[(i + 1) % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<circle cx="{cx}" cy="{cy}" r="{:.2}" fill="none" stroke="{color}" stroke-dasharray="4 3"/>"#,
            r * scale
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{} = {r:.4}</text>"#,
            PAD,
            PAD + 14.0 * i as f64,
            escape(label)
        );
    }
    for z in points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}"/>"#,
            cx + z.re * scale,
            cy - z.im * scale,
            PALETTE[0]
        );
    }
    s.push_str("</svg>\n");
    s
}
