//! Minimal deterministic line charts.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChartStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Clip values to `[-y_clip, y_clip]`; escaping tails are cut here.
    pub y_clip: Option<f64>,
    /// Draw a horizontal reference line at y = 0.
    pub zero_line: bool,
}

/// Renders the series as a standalone SVG 1.1 document with an 800×500
/// viewBox. Non-finite points split a polyline.
pub fn emit_svg(series: &[Series], style: &ChartStyle) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Domain("nothing to plot".into()));
    }
    let clip = |y: f64| match style.y_clip {
        Some(c) if y.is_finite() => y.clamp(-c, c),
        _ => y,
    };
    let finite = series
        .iter()
        .flat_map(|s| s.points.iter())
        .map(|&(x, y)| (x, clip(y)))
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return Err(Error::Domain("no finite points to plot".into()));
    }
    if style.zero_line {
        y0 = y0.min(0.0);
        y1 = y1.max(0.0);
    }
    let (x0, x1) = widen(x0, x1);
    let (y0, y1) = widen(y0, y1);
    let x_ticks = nice_ticks(x0, x1, 6);
    let y_ticks = nice_ticks(y0, y1, 6);
    let (x0, x1) = (x0.min(x_ticks[0]), x1.max(*x_ticks.last().unwrap()));
    let (y0, y1) = (y0.min(y_ticks[0]), y1.max(*y_ticks.last().unwrap()));

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    if !style.title.is_empty() {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
            MARGIN_LEFT + plot_w / 2.0,
            escape(&style.title)
        );
    }

    out.push_str("<g stroke=\"#cccccc\" stroke-width=\"0.5\">\n");
    for &t in &x_ticks {
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\"/>",
            sx(t),
            MARGIN_TOP,
            sx(t),
            MARGIN_TOP + plot_h
        );
    }
    for &t in &y_ticks {
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\"/>",
            MARGIN_LEFT,
            sy(t),
            MARGIN_LEFT + plot_w,
            sy(t)
        );
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN_LEFT:.2}\" y=\"{MARGIN_TOP:.2}\" width=\"{plot_w:.2}\" height=\"{plot_h:.2}\" fill=\"none\" stroke=\"black\"/>"
    );
    if style.zero_line {
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"0.8\" stroke-dasharray=\"2,2\"/>",
            MARGIN_LEFT,
            sy(0.0),
            MARGIN_LEFT + plot_w,
            sy(0.0)
        );
    }

    out.push_str("<g font-family=\"sans-serif\" font-size=\"11\">\n");
    for &t in &x_ticks {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            sx(t),
            MARGIN_TOP + plot_h + 16.0,
            tick_label(t)
        );
    }
    for &t in &y_ticks {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            MARGIN_LEFT - 6.0,
            sy(t) + 4.0,
            tick_label(t)
        );
    }
    if !style.x_label.is_empty() {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 12.0,
            escape(&style.x_label)
        );
    }
    if !style.y_label.is_empty() {
        let _ = writeln!(
            out,
            "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{}</text>",
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&style.y_label)
        );
    }
    out.push_str("</g>\n");

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if s.dashed { " stroke-dasharray=\"6,4\"" } else { "" };
        for run in s
            .points
            .split(|&(x, y)| !(x.is_finite() && clip(y).is_finite()))
            .filter(|r| !r.is_empty())
        {
            let mut pts = String::new();
            for (j, &(x, y)) in run.iter().enumerate() {
                if j > 0 {
                    pts.push(' ');
                }
                let _ = write!(pts, "{:.2},{:.2}", sx(x), sy(clip(y)));
            }
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash} points=\"{pts}\"/>"
            );
        }
        let ly = MARGIN_TOP + 12.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>",
            lx + 24.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            lx + 30.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Ticks at 1, 2 or 5 times a power of ten covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).floor() as i64;
    let last = (hi / step).ceil() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let v = if v.abs() < 1e-12 { 0.0 } else { v };
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(v: f64) -> Vec<(f64, f64)> {
        (0..=10).map(|i| (i as f64, v)).collect()
    }

    #[test]
    fn two_constant_series() {
        let svg = emit_svg(
            &[Series::new("a", flat(1.0)), Series::new("r", flat(-1.0)).dashed()],
            &ChartStyle::default(),
        )
        .unwrap();
        assert!(svg.contains("viewBox=\"0 0 800 500\""));
        let lines: Vec<&str> = svg.lines().filter(|l| l.starts_with("<polyline")).collect();
        assert_eq!(lines.len(), 2);
        for l in lines {
            let pts = l.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
            let ys: Vec<&str> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
            assert!(ys.windows(2).all(|w| w[0] == w[1]), "not horizontal: {l}");
        }
        assert!(svg.contains(">a</text>") && svg.contains(">r</text>"));
    }

    #[test]
    fn deterministic() {
        let s = [Series::new("x", (0..50).map(|i| (i as f64 * 0.1, (i as f64).sin())).collect())];
        let style = ChartStyle {
            title: "t <1>".into(),
            ..Default::default()
        };
        assert_eq!(emit_svg(&s, &style).unwrap(), emit_svg(&s, &style).unwrap());
        assert!(emit_svg(&s, &style).unwrap().contains("t &lt;1&gt;"));
    }

    #[test]
    fn empty_is_error() {
        assert!(emit_svg(&[], &ChartStyle::default()).is_err());
        assert!(emit_svg(&[Series::new("e", vec![])], &ChartStyle::default()).is_err());
    }

    #[test]
    fn gaps_split_polylines() {
        let pts = vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN), (3.0, 1.0), (4.0, 0.0)];
        let svg = emit_svg(&[Series::new("g", pts)], &ChartStyle::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(-0.093, 0.31, 6);
        assert!(t[0] <= -0.093 && *t.last().unwrap() >= 0.31);
        assert_eq!(tick_label(0.1 + 0.2), "0.3");
        assert_eq!(tick_label(-2.0), "-2");
    }
}
