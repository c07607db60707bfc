//! Minimal SVG plot of survival curves on a logarithmic `y` axis.
//!
//! Output depends only on the data, so it is reproducible byte for byte.

use std::fmt::Write as _;

pub const BLACK: &str = "#000000";
pub const BLUE: &str = "#1f5fbf";
pub const RED: &str = "#c0392b";

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Points,
}

/// Values indexed by `n`; non-positive and non-finite entries are skipped.
#[derive(Debug, Clone)]
pub struct Series<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
    pub color: &'static str,
    pub style: Style,
}

impl<'a> Series<'a> {
    pub fn line(label: &'a str, values: &'a [f64], color: &'static str) -> Self {
        Self { label, values, color, style: Style::Line }
    }

    pub fn dashed(label: &'a str, values: &'a [f64], color: &'static str) -> Self {
        Self { label, values, color, style: Style::Dashed }
    }

    pub fn points(label: &'a str, values: &'a [f64], color: &'static str) -> Self {
        Self { label, values, color, style: Style::Points }
    }
}

fn usable(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

pub fn render(title: &str, series: &[Series<'_>]) -> String {
    let n_max = series.iter().map(|s| s.values.len()).max().unwrap_or(1).saturating_sub(1).max(1);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &v in s.values.iter().filter(|v| usable(**v)) {
            lo = lo.min(v.log10());
            hi = hi.max(v.log10());
        }
    }
    if !lo.is_finite() {
        (lo, hi) = (-1.0, 0.0);
    }
    let (lo, hi) = (lo.floor().max(-300.0), hi.ceil().max(lo.floor() + 1.0));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |n: usize| LEFT + pw * n as f64 / n_max as f64;
    let y = |v: f64| TOP + ph * (hi - v.log10().max(lo)) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#888888"/>"##
    );

    // decades on y, at most about ten labels
    let decades = (hi - lo) as i64;
    let step = (decades / 10).max(1);
    let mut d = lo as i64;
    while d <= hi as i64 {
        let yy = y(10f64.powi(d as i32));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            yy + 4.0
        );
        d += step;
    }
    for k in 0..=5 {
        let n = n_max * k / 5;
        let xx = x(n);
        let _ = writeln!(
            s,
            r#"<text x="{xx:.2}" y="{:.2}" text-anchor="middle">{n}</text>"#,
            TOP + ph + 18.0
        );
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n</text>"#, LEFT + pw / 2.0, HEIGHT - 10.0);

    for (k, ser) in series.iter().enumerate() {
        match ser.style {
            Style::Points => {
                for (n, &v) in ser.values.iter().enumerate().filter(|(_, v)| usable(**v)) {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="{}"/>"#, x(n), y(v), ser.color);
                }
            }
            Style::Line | Style::Dashed => {
                let dash = if ser.style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                // break the polyline wherever a value is missing
                let mut run: Vec<String> = Vec::new();
                let flush = |run: &mut Vec<String>, s: &mut String| {
                    if run.len() > 1 {
                        let _ = writeln!(
                            s,
                            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                            ser.color,
                            run.join(" ")
                        );
                    }
                    run.clear();
                };
                for (n, &v) in ser.values.iter().enumerate() {
                    if usable(v) {
                        run.push(format!("{:.2},{:.2}", x(n), y(v)));
                    } else {
                        flush(&mut run, &mut s);
                    }
                }
                flush(&mut run, &mut s);
            }
        }
        let ly = TOP + 16.0 + 16.0 * k as f64;
        let lx = LEFT + pw - 120.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            ser.color,
            lx + 26.0,
            escape(ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps_split_polylines() {
        let v = [1.0, 0.5, f64::NAN, 0.1, 0.05];
        let out = render("t", &[Series::line("a", &v, BLACK)]);
        assert_eq!(out.matches("<polyline").count(), 2);
        assert_eq!(out, render("t", &[Series::line("a", &v, BLACK)]));
    }

    #[test]
    fn empty_data_still_renders() {
        let out = render("t", &[Series::points("a", &[0.0, 0.0], BLUE)]);
        assert!(out.ends_with("</svg>\n"));
    }
}
