//! Hand-written SVG output.
//!
//! Every coordinate is printed with two decimals, so identical inputs give
//! byte-identical documents.

use std::fmt::Write;

use crate::data::Accuracy;
use crate::error::{Error, Result};
use crate::fit::LinearFit;
use crate::prediction::{DominanceMatrix, ScatterPoint};
use crate::robustness::{identity_line_er, BinnedCurve};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 55.0;

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Human-friendly tick label: integers print bare, others up to 3 decimals.
fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Ticks at 1/2/5 × 10^k covering `[lo, hi]`, about five of them.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if span.is_nan() || span <= 0.0 {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

/// Data-to-pixel mapping for a rectangular plot area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Self { x: widen(x), y: widen(y) }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn point(&self, x: f64, y: f64) -> String {
        format!("{},{}", num(self.px(x)), num(self.py(y)))
    }

    fn axes(&self, svg: &mut String, x_label: &str, y_label: &str) {
        let (x0, x1) = (self.px(self.x.0), self.px(self.x.1));
        let (y0, y1) = (self.py(self.y.0), self.py(self.y.1));
        let _ = writeln!(svg, r##"<g class="axes" stroke="#444" stroke-width="1" fill="none">"##);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, num(x0), num(y0), num(x1), num(y0));
        let _ = writeln!(svg, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, num(x0), num(y0), num(x0), num(y1));
        svg.push_str("</g>\n");
        let _ = writeln!(svg, r##"<g class="ticks" font-family="sans-serif" font-size="11" fill="#222">"##);
        for t in ticks(self.x.0, self.x.1) {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                num(self.px(t)),
                num(y0 + 16.0),
                tick_label(t)
            );
        }
        for t in ticks(self.y.0, self.y.1) {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                num(x0 - 6.0),
                num(self.py(t) + 4.0),
                tick_label(t)
            );
        }
        svg.push_str("</g>\n");
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            num((x0 + x1) / 2.0),
            num(HEIGHT - 12.0),
            escape(x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 {} {})">{}</text>"#,
            num(18.0),
            num((y0 + y1) / 2.0),
            num(18.0),
            num((y0 + y1) / 2.0),
            escape(y_label)
        );
    }
}

fn open(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(title));
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
}

#[derive(Debug, Clone, Default)]
pub struct ErOverlays {
    /// Draw the ER of the `y = x` line under this fit.
    pub identity_fit: Option<LinearFit>,
    pub zero_line: bool,
    pub title: Option<String>,
}

const IDENTITY_SAMPLES: usize = 200;

/// ER (%) against ID accuracy (%) for the non-empty bins of `curve`, with a
/// ±1 std band.
pub fn plot_er_curve(curve: &BinnedCurve, overlays: &ErOverlays) -> Result<String> {
    let pts: Vec<(f64, f64, f64)> = curve
        .non_empty()
        .map(|(i, b)| {
            let mean = b.mean.expect("non-empty bin has a mean");
            (100.0 * curve.bin_center(i), 100.0 * mean, 100.0 * b.std.unwrap_or(0.0))
        })
        .collect();
    if pts.is_empty() {
        return Err(Error::Empty("cannot plot a curve with no non-empty bins".into()));
    }
    let x_range = (
        100.0 * curve.bin_edges[0],
        100.0 * curve.bin_edges[curve.bin_edges.len() - 1],
    );

    let identity: Vec<(f64, f64)> = match &overlays.identity_fit {
        Some(fit) => (0..IDENTITY_SAMPLES)
            .filter_map(|k| {
                let x = (x_range.0 + (x_range.1 - x_range.0) * k as f64 / (IDENTITY_SAMPLES - 1) as f64) / 100.0;
                let a = Accuracy::new(x).ok().filter(|a| a.is_interior())?;
                identity_line_er(fit, a).ok().map(|er| (100.0 * x, 100.0 * er))
            })
            .collect(),
        None => Vec::new(),
    };

    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for &(_, m, s) in &pts {
        y_lo = y_lo.min(m - s);
        y_hi = y_hi.max(m + s);
    }
    for &(_, y) in &identity {
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if overlays.zero_line {
        y_lo = y_lo.min(0.0);
        y_hi = y_hi.max(0.0);
    }
    let pad = 0.05 * (y_hi - y_lo).max(1e-9);
    let frame = Frame::new(x_range, (y_lo - pad, y_hi + pad));

    let mut svg = String::new();
    open(&mut svg, overlays.title.as_deref().unwrap_or("Effective robustness"));
    frame.axes(&mut svg, "ID accuracy (%)", "Effective robustness (%)");

    if overlays.zero_line {
        let _ = writeln!(
            svg,
            r##"<line class="zero" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#888" stroke-dasharray="4 3"/>"##,
            num(frame.px(frame.x.0)),
            num(frame.px(frame.x.1)),
            y = num(frame.py(0.0))
        );
    }
    if pts.len() > 1 {
        let upper = pts.iter().map(|&(x, m, s)| frame.point(x, m + s));
        let lower = pts.iter().rev().map(|&(x, m, s)| frame.point(x, m - s));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            svg,
            r##"<polygon class="band" points="{}" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>"##,
            band.join(" ")
        );
    }
    if identity.len() > 1 {
        let line: Vec<String> = identity.iter().map(|&(x, y)| frame.point(x, y)).collect();
        let _ = writeln!(
            svg,
            r##"<polyline class="identity" points="{}" fill="none" stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 3"/>"##,
            line.join(" ")
        );
    }
    if pts.len() > 1 {
        let line: Vec<String> = pts.iter().map(|&(x, m, _)| frame.point(x, m)).collect();
        let _ = writeln!(
            svg,
            r##"<polyline class="mean" points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
            line.join(" ")
        );
    }
    svg.push_str(r##"<g class="markers" fill="#1f77b4">"##);
    svg.push('\n');
    for &(x, m, _) in &pts {
        let _ = writeln!(svg, r#"<circle cx="{}" cy="{}" r="2.5"/>"#, num(frame.px(x)), num(frame.py(m)));
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

// Abridged viridis stops, dark to light.
const RAMP: [(f64, [u8; 3]); 5] = [
    (0.0, [68, 1, 84]),
    (0.25, [59, 82, 139]),
    (0.5, [33, 145, 140]),
    (0.75, [94, 201, 98]),
    (1.0, [253, 231, 37]),
];

/// Monotone dark-to-light colour for `t` in `[0, 1]`.
pub fn ramp_color(t: f64) -> String {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let k = RAMP.iter().position(|(s, _)| *s >= t).unwrap_or(RAMP.len() - 1).max(1);
    let ((s0, c0), (s1, c1)) = (RAMP[k - 1], RAMP[k]);
    let f = (t - s0) / (s1 - s0);
    let mix = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(c0[0], c1[0]), mix(c0[1], c1[1]), mix(c0[2], c1[2]))
}

/// Row labels are drawn only up to this many models.
const HEATMAP_LABEL_LIMIT: usize = 24;

/// Heatmap of a dominance matrix in its stored (ascending accuracy) order;
/// colours span `[0, max value]`.
pub fn plot_heatmap(dm: &DominanceMatrix) -> String {
    let n = dm.n();
    let vmax = dm.values.iter().cloned().fold(0.0, f64::max);
    let vmax = if vmax > 0.0 { vmax } else { 1.0 };
    let side = (HEIGHT - TOP - BOTTOM).min(WIDTH - LEFT - 120.0);
    let cell = side / n.max(1) as f64;

    let mut svg = String::new();
    open(&mut svg, "Dominance probability");
    let _ = writeln!(svg, r#"<g class="cells" shape-rendering="crispEdges">"#);
    for r in 0..n {
        for c in 0..n {
            let v = dm.get(r, c);
            let _ = writeln!(
                svg,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"><title>{} / {}: {}</title></rect>"#,
                num(LEFT + c as f64 * cell),
                num(TOP + r as f64 * cell),
                num(cell),
                num(cell),
                ramp_color(v / vmax),
                escape(&dm.models[r]),
                escape(&dm.models[c]),
                num(v),
            );
        }
    }
    svg.push_str("</g>\n");
    if n <= HEATMAP_LABEL_LIMIT {
        let _ = writeln!(svg, r##"<g class="labels" font-family="sans-serif" font-size="10" fill="#222">"##);
        for (r, id) in dm.models.iter().enumerate() {
            let short: String = id.chars().take(12).collect();
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                num(LEFT - 4.0),
                num(TOP + (r as f64 + 0.5) * cell + 3.5),
                escape(&short)
            );
        }
        svg.push_str("</g>\n");
    }
    // Legend bar.
    let bar_x = LEFT + side + 30.0;
    let steps = 20;
    let _ = writeln!(svg, r#"<g class="legend" shape-rendering="crispEdges">"#);
    for k in 0..steps {
        let t = 1.0 - k as f64 / (steps - 1) as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="14" height="{}" fill="{}"/>"#,
            num(bar_x),
            num(TOP + k as f64 * side / steps as f64),
            num(side / steps as f64),
            ramp_color(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
        num(bar_x + 20.0),
        num(TOP + 10.0),
        num(vmax)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">0.00</text>"#,
        num(bar_x + 20.0),
        num(TOP + side)
    );
    svg.push_str("</g>\n");
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">models by ascending accuracy</text>"#,
        num(LEFT + side / 2.0),
        num(TOP + side + 24.0)
    );
    svg.push_str("</svg>\n");
    svg
}

/// Dominance probability against accuracy difference (%); pairs involving a
/// focus model are drawn in a second colour.
pub fn plot_scatter(points: &[ScatterPoint]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::Empty("no scatter points".into()));
    }
    let xs = points.iter().map(|p| 100.0 * p.accuracy_difference);
    let x_hi = xs.clone().fold(0.0, f64::max);
    let y_hi = points.iter().map(|p| p.probability).fold(0.0, f64::max);
    let frame = Frame::new((0.0, x_hi.max(1.0) * 1.05), (0.0, y_hi.max(0.01) * 1.05));
    let mut svg = String::new();
    open(&mut svg, "Dominance probability vs accuracy difference");
    frame.axes(&mut svg, "Accuracy difference (%)", "Dominance probability");
    for focus in [false, true] {
        let colour = if focus { "#d62728" } else { "#1f77b4" };
        let _ = writeln!(svg, r#"<g class="{}" fill="{colour}">"#, if focus { "focus" } else { "pairs" });
        for p in points.iter().filter(|p| p.involves_focus == focus) {
            let _ = writeln!(
                svg,
                r#"<circle cx="{}" cy="{}" r="2.5"/>"#,
                num(frame.px(100.0 * p.accuracy_difference)),
                num(frame.py(p.probability))
            );
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
