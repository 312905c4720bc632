use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT_SINGLE: f64 = 30.0;
const MARGIN_RIGHT_DUAL: f64 = 90.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#000000", "#d62728", "#1f4fd8", "#2ca02c", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum YAxis {
    #[default]
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub axis: YAxis,
}

impl PlotSeries {
    pub fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            x,
            y,
            axis: YAxis::Left,
        }
    }

    pub fn on_right_axis(mut self) -> Self {
        self.axis = YAxis::Right;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub y2_label: String,
}

/// Axis range rounded out to 1-2-5 steps, with its tick positions.
#[derive(Debug, Clone, PartialEq)]
struct Ticks {
    lo: f64,
    hi: f64,
    step: f64,
    values: Vec<f64>,
}

fn nice_ticks(mut lo: f64, mut hi: f64, target: usize) -> Ticks {
    if hi <= lo {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        lo -= pad;
        hi += pad;
    }
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|f| f * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).floor();
    let last = (hi / step).ceil();
    let values = (0..=(last - first) as i64)
        .map(|k| (first + k as f64) * step)
        .collect();
    Ticks {
        lo: first * step,
        hi: last * step,
        step,
        values,
    }
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    // Avoid "-0" for ticks that round to zero.
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Renders a line plot as a self-contained SVG document.
///
/// Each series becomes one polyline; series marked [`YAxis::Right`] are
/// scaled against a second axis on the right. Output depends only on the
/// input, so identical input gives identical bytes.
pub fn render_plot_svg(series: &[PlotSeries], options: &PlotOptions) -> Result<String> {
    let Some(first) = series.first() else {
        return Err(Error::InvalidArgument(
            "a plot needs at least one series".into(),
        ));
    };
    let n = first.x.len();
    for s in series {
        if s.x.len() != n || s.y.len() != n {
            return Err(Error::InvalidArgument(format!(
                "series `{}` has {} x and {} y values, expected {n}",
                s.label,
                s.x.len(),
                s.y.len()
            )));
        }
        if s.x.iter().chain(&s.y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "series `{}` contains non-finite values",
                s.label
            )));
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument("series are empty".into()));
    }

    let dual = series.iter().any(|s| s.axis == YAxis::Right);
    let right = if dual {
        MARGIN_RIGHT_DUAL
    } else {
        MARGIN_RIGHT_SINGLE
    };
    let (x0, x1) = (MARGIN_LEFT, WIDTH - right);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);

    let (xl, xh) = range(series.iter().flat_map(|s| s.x.iter().copied()));
    let xt = nice_ticks(xl, xh, 8);
    let axis_ticks = |axis: YAxis| {
        let (lo, hi) = range(
            series
                .iter()
                .filter(|s| s.axis == axis)
                .flat_map(|s| s.y.iter().copied()),
        );
        if lo.is_finite() {
            Some(nice_ticks(lo, hi, 6))
        } else {
            None
        }
    };
    let left_ticks = axis_ticks(YAxis::Left);
    let right_ticks = axis_ticks(YAxis::Right);

    let px = |x: f64| x0 + (x - xt.lo) / (xt.hi - xt.lo) * (x1 - x0);
    let py = |y: f64, t: &Ticks| y0 - (y - t.lo) / (t.hi - t.lo) * (y0 - y1);

    let mut out = String::new();
    let w = &mut out;
    writeln!(w, r##"<?xml version="1.0" encoding="UTF-8"?>"##).unwrap();
    writeln!(
        w,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"##
    )
    .unwrap();
    writeln!(
        w,
        r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
    )
    .unwrap();
    if !options.title.is_empty() {
        writeln!(
            w,
            r##"<text x="{:.2}" y="28" text-anchor="middle" font-size="15">{}</text>"##,
            (x0 + x1) / 2.0,
            escape(&options.title)
        )
        .unwrap();
    }

    // Frame and x ticks.
    writeln!(
        w,
        r##"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000000"/>"##,
        x1 - x0,
        y0 - y1
    )
    .unwrap();
    for &v in &xt.values {
        let x = px(v);
        writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/>"##,
            y0 + 5.0
        )
        .unwrap();
        writeln!(
            w,
            r##"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            y0 + 19.0,
            tick_label(v, xt.step)
        )
        .unwrap();
    }
    if !options.x_label.is_empty() {
        writeln!(
            w,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            (x0 + x1) / 2.0,
            HEIGHT - 15.0,
            escape(&options.x_label)
        )
        .unwrap();
    }

    // Y axes.
    let mut y_axis = |t: &Ticks, x: f64, outward: f64, label: &str| {
        for &v in &t.values {
            let y = py(v, t);
            writeln!(
                w,
                r##"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000000"/>"##,
                x + outward * 5.0
            )
            .unwrap();
            let anchor = if outward < 0.0 { "end" } else { "start" };
            writeln!(
                w,
                r##"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"##,
                x + outward * 8.0,
                y + 4.0,
                tick_label(v, t.step)
            )
            .unwrap();
        }
        if !label.is_empty() {
            let lx = x + outward * 70.0;
            let ly = (y0 + y1) / 2.0;
            writeln!(
                w,
                r##"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"##,
                escape(label)
            )
            .unwrap();
        }
    };
    if let Some(t) = &left_ticks {
        y_axis(t, x0, -1.0, &options.y_label);
    }
    if let Some(t) = &right_ticks {
        y_axis(t, x1, 1.0, &options.y2_label);
    }

    // Data.
    for (k, s) in series.iter().enumerate() {
        let t = match s.axis {
            YAxis::Left => left_ticks.as_ref(),
            YAxis::Right => right_ticks.as_ref(),
        }
        .expect("axis has at least this series");
        let mut points = String::with_capacity(s.x.len() * 16);
        for (i, (&x, &y)) in s.x.iter().zip(&s.y).enumerate() {
            if i > 0 {
                points.push(' ');
            }
            write!(points, "{:.2},{:.2}", px(x), py(y, t)).unwrap();
        }
        writeln!(
            w,
            r##"<polyline fill="none" stroke="{}" stroke-width="1" points="{points}"/>"##,
            PALETTE[k % PALETTE.len()]
        )
        .unwrap();
    }

    // Legend, top-right inside the frame.
    let lx = x1 - 190.0;
    let mut ly = y1 + 10.0;
    writeln!(
        w,
        r##"<rect x="{lx:.2}" y="{ly:.2}" width="180" height="{:.2}" fill="#ffffff" fill-opacity="0.85" stroke="#888888"/>"##,
        8.0 + 18.0 * series.len() as f64
    )
    .unwrap();
    for (k, s) in series.iter().enumerate() {
        ly += 18.0;
        writeln!(
            w,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/>"##,
            lx + 8.0,
            ly - 4.0,
            lx + 32.0,
            ly - 4.0,
            PALETTE[k % PALETTE.len()]
        )
        .unwrap();
        let suffix = if dual && s.axis == YAxis::Right {
            " (right)"
        } else {
            ""
        };
        writeln!(
            w,
            r##"<text x="{:.2}" y="{ly:.2}">{}{suffix}</text>"##,
            lx + 40.0,
            escape(&s.label)
        )
        .unwrap();
    }
    writeln!(w, "</svg>").unwrap();
    Ok(out)
}

/// Writes [`render_plot_svg`] output to `path`.
pub fn emit_plot_svg(series: &[PlotSeries], options: &PlotOptions, path: &Path) -> Result<()> {
    let svg = render_plot_svg(series, options)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
