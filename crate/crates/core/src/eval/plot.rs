//! Precision/recall curves as CSV and a standalone SVG chart.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::metrics::PrCurve;
use crate::error::{Error, Result};

const SIZE: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Writes `<stem>.csv` and `<stem>.svg`; returns both paths.
pub fn emit_pr_plot(curves: &[(String, PrCurve)], stem: &Path) -> Result<(PathBuf, PathBuf)> {
    if curves.is_empty() {
        return Err(Error::config("no curves to plot"));
    }
    let csv_path = stem.with_extension("csv");
    let svg_path = stem.with_extension("svg");
    write(&csv_path, &pr_csv(curves)?)?;
    write(&svg_path, &pr_svg(curves))?;
    Ok((csv_path, svg_path))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One row per point: `name,threshold,precision,recall,f1`.
pub fn pr_csv(curves: &[(String, PrCurve)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::format(format!("writing PR table: {e}"));
    w.write_record(["name", "threshold", "precision", "recall", "f1"]).map_err(fail)?;
    for (name, curve) in curves {
        for p in &curve.points {
            w.write_record([
                name.clone(),
                p.threshold.to_string(),
                p.precision.to_string(),
                p.recall.to_string(),
                p.f1.to_string(),
            ])
            .map_err(fail)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::format(format!("writing PR table: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn pr_svg(curves: &[(String, PrCurve)]) -> String {
    let total = SIZE + 2.0 * MARGIN;
    let px = |r: f64| MARGIN + r * SIZE;
    let py = |p: f64| MARGIN + (1.0 - p) * SIZE;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{total}" height="{total}" fill="white"/>"#);
    for k in 0..=10 {
        let v = k as f64 / 10.0;
        let _ = writeln!(
            s,
            r##"<line x1="{x}" y1="{t}" x2="{x}" y2="{b}" stroke="#ddd"/><line x1="{l}" y1="{y}" x2="{r}" y2="{y}" stroke="#ddd"/>"##,
            x = px(v),
            y = py(v),
            t = py(1.0),
            b = py(0.0),
            l = px(0.0),
            r = px(1.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{ty}" text-anchor="middle">{v:.1}</text><text x="{tx}" y="{y}" text-anchor="end" dominant-baseline="middle">{v:.1}</text>"#,
            x = px(v),
            ty = py(0.0) + 16.0,
            tx = px(0.0) - 6.0,
            y = py(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">Recall</text>"#,
        px(0.5),
        total - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{y}" text-anchor="middle" transform="rotate(-90 14 {y})">Precision</text>"#,
        y = py(0.5)
    );
    for (i, (name, curve)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = curve
            .points
            .iter()
            .filter(|p| p.precision > 0.0 || p.recall > 0.0)
            .map(|p| format!("{:.2},{:.2}", px(p.recall), py(p.precision)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN + 18.0 + 18.0 * i as f64;
        let lx = px(0.05);
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{ly}" dominant-baseline="middle">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
