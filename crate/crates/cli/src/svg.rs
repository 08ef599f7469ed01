//! Minimal SVG line charts: stacked panels of polylines with axes and legends.

use std::fmt::Write;

const WIDTH: f64 = 900.0;
const PANEL_HEIGHT: f64 = 220.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 30.0;
const TICKS: usize = 5;

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#393b79", "#637939",
];

pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
    pub dashed: bool,
}

impl Series {
    pub fn solid(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
            dashed: false,
        }
    }

    pub fn dashed(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
            dashed: true,
        }
    }
}

pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + hi.abs()) {
        let pad = 0.5 * (1.0 + hi.abs()) * 1e-3;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Renders panels sharing the time axis `t`.
pub fn chart(title: &str, t: &[f64], panels: &[Panel]) -> String {
    let height = 40.0 + panels.len() as f64 * PANEL_HEIGHT;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let (t0, t1) = match (t.first(), t.last()) {
        (Some(a), Some(b)) if b > a => (*a, *b),
        _ => (0.0, 1.0),
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    for (p, panel) in panels.iter().enumerate() {
        let top = 40.0 + p as f64 * PANEL_HEIGHT + MARGIN_TOP;
        let (lo, hi) = extent(panel.series.iter().flat_map(|s| s.values.iter().copied()));
        let sx = |x: f64| MARGIN_LEFT + (x - t0) / (t1 - t0) * plot_w;
        let sy = |y: f64| top + plot_h - (y - lo) / (hi - lo) * plot_h;

        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN_LEFT}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN_LEFT}" y="{}" font-size="12">{}</text>"#,
            top - 6.0,
            escape(&panel.title)
        );
        for i in 0..=TICKS {
            let frac = i as f64 / TICKS as f64;
            let yv = lo + frac * (hi - lo);
            let y = sy(yv);
            let _ = writeln!(
                out,
                r##"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3e}</text>"##,
                MARGIN_LEFT + plot_w,
                MARGIN_LEFT - 4.0,
                y + 4.0
            );
            let tv = t0 + frac * (t1 - t0);
            let x = sx(tv);
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{tv:.1}</text>"#,
                top + plot_h + 14.0
            );
        }
        if lo < 0.0 && hi > 0.0 {
            let y0 = sy(0.0);
            let _ = writeln!(
                out,
                r##"<line x1="{MARGIN_LEFT}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="#999"/>"##,
                MARGIN_LEFT + plot_w
            );
        }

        for (s, series) in panel.series.iter().enumerate() {
            let color = PALETTE[s % PALETTE.len()];
            let mut points = String::new();
            for (x, y) in t.iter().zip(&series.values) {
                if y.is_finite() {
                    let _ = write!(points, "{:.2},{:.2} ", sx(*x), sy(*y));
                }
            }
            let dash = if series.dashed {
                r#" stroke-dasharray="6,3""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.2"{dash} points="{}"/>"#,
                points.trim_end()
            );
            let ly = top + 12.0 + s as f64 * 14.0;
            let lx = MARGIN_LEFT + plot_w + 10.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx}" y1="{:.2}" x2="{}" y2="{:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{ly:.2}">{}</text>"#,
                ly - 4.0,
                lx + 18.0,
                ly - 4.0,
                lx + 22.0,
                escape(&series.label)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
