//! Minimal SVG line plots: polylines, markers with error bars, axis ticks.

use std::fmt::Write as _;

use crate::curve_file::CurveRow;

/// Written into every SVG so outputs from different builds can be told apart.
pub const GENERATOR: &str = concat!("homsim ", env!("CARGO_PKG_VERSION"));

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Solid,
    Dashed,
    /// Circles with vertical error bars.
    Markers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub style: Style,
    /// (x, y, y error)
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Tick positions at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

impl Plot {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y, e) in &s.points {
                b.0 = b.0.min(x);
                b.1 = b.1.max(x);
                b.2 = b.2.min(y - e);
                b.3 = b.3.max(y + e);
            }
        }
        if !b.0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        if b.1 <= b.0 {
            b.1 = b.0 + 1.0;
        }
        if b.3 <= b.2 {
            b.3 = b.2 + 1.0;
        }
        b.3 *= 1.05;
        b
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut o = String::new();
        let _ = writeln!(
            o,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(o, "<!-- generator: {GENERATOR} -->");
        let _ = writeln!(o, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            o,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            o,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for t in ticks(x0, x1, 8) {
            let x = sx(t);
            let _ = writeln!(
                o,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 19.0,
                label(t)
            );
        }
        for t in ticks(y0, y1, 6) {
            let y = sy(t);
            let _ = writeln!(
                o,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0,
                label(t)
            );
        }
        let _ = writeln!(
            o,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            o,
            r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (k, s) in self.series.iter().enumerate() {
            match s.style {
                Style::Solid | Style::Dashed => {
                    let pts: Vec<String> =
                        s.points.iter().map(|&(x, y, _)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                    let dash = if s.style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let _ = writeln!(
                        o,
                        r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                        s.color,
                        pts.join(" ")
                    );
                }
                Style::Markers => {
                    for &(x, y, e) in &s.points {
                        let (cx, cy) = (sx(x), sy(y));
                        if e > 0.0 {
                            let _ = writeln!(
                                o,
                                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{}"/>"#,
                                sy(y - e),
                                sy(y + e),
                                s.color
                            );
                        }
                        let _ = writeln!(
                            o,
                            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="none" stroke="{}"/>"#,
                            s.color
                        );
                    }
                }
            }
            let ly = TOP + 10.0 + 18.0 * k as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let _ = writeln!(
                o,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                s.color,
                lx + 26.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        o.push_str("</svg>\n");
        o
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

fn series_of(rows: &[CurveRow], style: Style, suffix: &str) -> Vec<Series> {
    let pick: [(&str, fn(&CurveRow) -> (f64, f64)); 3] = [
        ("P(2,0)", |r| (r.p20, r.p20_err)),
        ("P(0,2)", |r| (r.p02, r.p02_err)),
        ("P(1,1)", |r| (r.p11, r.p11_err)),
    ];
    pick.iter()
        .zip(COLORS)
        .map(|((name, f), color)| Series {
            label: format!("{name}{suffix}"),
            color,
            style,
            points: rows
                .iter()
                .map(|r| {
                    let (y, e) = f(r);
                    (r.tau_fs, y, e)
                })
                .collect(),
        })
        .collect()
}

/// Coincidence probabilities against delay. Theory rows are drawn dashed,
/// measured rows as markers with error bars.
pub fn coincidence_plot(title: &str, theory: Option<&[CurveRow]>, measured: Option<&[CurveRow]>) -> String {
    let mut series = Vec::new();
    if let Some(rows) = theory {
        let suffix = if measured.is_some() { " theory" } else { "" };
        series.extend(series_of(rows, Style::Dashed, suffix));
    }
    if let Some(rows) = measured {
        series.extend(series_of(rows, Style::Markers, ""));
    }
    Plot {
        title: title.to_string(),
        x_label: "delay τ (fs)".to_string(),
        y_label: "coincidence probability".to_string(),
        series,
    }
    .render()
}
