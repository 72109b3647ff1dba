//! Self-contained SVG scatter plots with error bars and, on log-log axes, a
//! fitted-slope annotation.

use std::fmt::Write as _;
use std::path::Path;

use hdclt::stats::{fit_loglog, LineFit};
use serde::{Deserialize, Serialize};

use crate::error::{RunnerError, RunnerResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    LogLog,
    Linear,
}

/// One plotted point with its standard error (0 for none).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    pub se: f64,
}

/// What was drawn; `fit` is the log-log least-squares line when available.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotInfo {
    pub points: usize,
    pub fit: Option<LineFit>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// Writes the SVG; an empty series is rejected before any file is created.
pub fn emit_plot(
    series: &[PlotPoint],
    kind: PlotKind,
    title: &str,
    x_label: &str,
    y_label: &str,
    path: &Path,
) -> RunnerResult<PlotInfo> {
    if series.is_empty() {
        return Err(RunnerError::EmptySeries);
    }
    let loglog = kind == PlotKind::LogLog;
    let usable: Vec<PlotPoint> = series
        .iter()
        .copied()
        .filter(|p| p.x.is_finite() && p.y.is_finite() && (!loglog || (p.x > 0.0 && p.y > 0.0)))
        .collect();
    let tx = |v: f64| if loglog { v.log10() } else { v };
    let fit = if loglog && usable.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = usable.iter().map(|p| (p.x, p.y)).unzip();
        fit_loglog(&x, &y, None)
    } else {
        None
    };

    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &usable {
        x0 = x0.min(tx(p.x));
        x1 = x1.max(tx(p.x));
        let lo = if loglog && p.y - p.se <= 0.0 { p.y } else { p.y - p.se };
        y0 = y0.min(tx(lo));
        y1 = y1.max(tx(p.y + p.se));
    }
    if usable.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
        (lo - 0.08 * span, hi + 0.08 * span)
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let sx = |v: f64| LEFT + (tx(v) - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let sy = |v: f64| H - BOTTOM - (tx(v) - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    let (ax0, ax1, ay0, ay1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(svg, r#"<path d="M{ax0},{ay0} L{ax0},{ay1} L{ax1},{ay1}" stroke="black" fill="none"/>"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (gx, gy) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (ax0 + f * (ax1 - ax0), ay1 - f * (ay1 - ay0));
        let lx = if loglog { 10f64.powf(gx) } else { gx };
        let ly = if loglog { 10f64.powf(gy) } else { gy };
        let _ = writeln!(svg, r#"<text x="{px}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#, ay1 + 16.0, tick(lx));
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#, ax0 - 6.0, py + 4.0, tick(ly));
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#, (ax0 + ax1) / 2.0, H - 18.0, escape(x_label));
    let _ = writeln!(svg, r#"<text x="18" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#, (ay0 + ay1) / 2.0, (ay0 + ay1) / 2.0, escape(y_label));

    for p in &usable {
        let (cx, cy) = (sx(p.x), sy(p.y));
        if p.se > 0.0 {
            let lo = if loglog && p.y - p.se <= 0.0 { p.y } else { p.y - p.se };
            let _ = writeln!(svg, r#"<line x1="{cx}" y1="{}" x2="{cx}" y2="{}" stroke="gray"/>"#, sy(lo), sy(p.y + p.se));
        }
        let _ = writeln!(svg, r#"<circle class="marker" cx="{cx}" cy="{cy}" r="4" fill="steelblue"/>"#);
    }
    if let Some(f) = fit {
        let (xa, xb) = (usable.iter().map(|p| p.x).fold(f64::INFINITY, f64::min), usable.iter().map(|p| p.x).fold(0.0, f64::max));
        let line = |x: f64| (f.intercept + f.slope * x.ln()).exp();
        let _ = writeln!(svg, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="firebrick" stroke-dasharray="5,4"/>"#, sx(xa), sy(line(xa)), sx(xb), sy(line(xb)));
        let _ = writeln!(
            svg,
            r#"<text class="slope" x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="end" data-slope="{:e}">slope = {:.4} ± {:.4}</text>"#,
            ax1 - 4.0,
            ay0 + 14.0,
            f.slope,
            f.slope,
            if f.slope_se.is_finite() { f.slope_se } else { 0.0 }
        );
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| RunnerError::io(path, e))?;
    Ok(PlotInfo { points: usable.len(), fit })
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
