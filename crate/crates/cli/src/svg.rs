//! Minimal deterministic SVG line charts.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// A polyline; `None` values break the line.
#[derive(Debug, Clone)]
pub struct Line {
    pub label: String,
    pub values: Vec<Option<f64>>,
    pub dashed: bool,
}

impl Line {
    pub fn new(label: impl Into<String>, values: &[f64]) -> Self {
        Self {
            label: label.into(),
            values: values.iter().map(|v| v.is_finite().then_some(*v)).collect(),
            dashed: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_labels: Vec<String>,
    pub lines: Vec<Line>,
    /// Shaded `(lower, upper)` region.
    pub band: Option<(Vec<f64>, Vec<f64>)>,
    /// Dashed vertical rule at this x index.
    pub divider: Option<usize>,
    /// Dashed horizontal reference value.
    pub reference: Option<f64>,
}

struct Frame {
    n: usize,
    lo: f64,
    hi: f64,
}

impl Frame {
    fn x(&self, i: f64) -> f64 {
        let span = (self.n.max(2) - 1) as f64;
        LEFT + i / span * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        TOP + (self.hi - v) / (self.hi - self.lo) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Chart {
    pub fn new(title: impl Into<String>, x_labels: Vec<String>) -> Self {
        Self {
            title: title.into(),
            x_labels,
            ..Default::default()
        }
    }

    fn frame(&self) -> Frame {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut see = |v: f64| {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        };
        for l in &self.lines {
            l.values.iter().flatten().for_each(|v| see(*v));
        }
        if let Some((a, b)) = &self.band {
            a.iter().chain(b).for_each(|v| see(*v));
        }
        if let Some(r) = self.reference {
            see(r);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if lo > 0.0 && lo < 0.5 * hi {
            lo = 0.0;
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        Frame {
            n: self
                .x_labels
                .len()
                .max(self.lines.iter().map(|l| l.values.len()).max().unwrap_or(0)),
            lo,
            hi,
        }
    }

    pub fn render(&self) -> String {
        let f = self.frame();
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(
            s,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        self.axes(&mut s, &f);
        if let Some((lo, hi)) = &self.band {
            let mut pts: Vec<String> = lo
                .iter()
                .enumerate()
                .map(|(i, v)| format!("{:.2},{:.2}", f.x(i as f64), f.y(*v)))
                .collect();
            pts.extend(
                hi.iter()
                    .enumerate()
                    .rev()
                    .map(|(i, v)| format!("{:.2},{:.2}", f.x(i as f64), f.y(*v))),
            );
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.25" stroke="none"/>"#,
                pts.join(" "),
                PALETTE[0]
            );
        }
        if let Some(r) = self.reference {
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" x2="{:.2}" y1="{y:.2}" y2="{y:.2}" stroke="#555" stroke-dasharray="6 4"/>"##,
                WIDTH - RIGHT,
                y = f.y(r)
            );
        }
        if let Some(d) = self.divider {
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" x2="{x:.2}" y1="{TOP}" y2="{:.2}" stroke="#333" stroke-dasharray="3 3"/>"##,
                HEIGHT - BOTTOM,
                x = f.x(d as f64)
            );
        }
        for (k, line) in self.lines.iter().enumerate() {
            let colour = PALETTE[k % PALETTE.len()];
            let dash = if line.dashed {
                r#" stroke-dasharray="5 3""#
            } else {
                ""
            };
            for run in segments(&line.values) {
                let pts: Vec<String> = run
                    .iter()
                    .map(|&(i, v)| format!("{:.2},{:.2}", f.x(i as f64), f.y(v)))
                    .collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>"#,
                    pts.join(" ")
                );
            }
            let ly = TOP + 14.0 * (k as f64 + 1.0);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{ly:.1}" fill="{colour}">{}</text>"#,
                LEFT + 10.0,
                escape(&line.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }

    fn axes(&self, s: &mut String, f: &Frame) {
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            s,
            r#"<rect x="{x0}" y="{y0}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y1 - y0
        );
        for k in 0..=4 {
            let v = f.lo + (f.hi - f.lo) * k as f64 / 4.0;
            let y = f.y(v);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 6.0,
                y + 4.0,
                tick_label(v)
            );
        }
        if f.n > 0 && !self.x_labels.is_empty() {
            let ticks = 5.min(self.x_labels.len());
            for k in 0..ticks {
                let i = if ticks == 1 {
                    0
                } else {
                    k * (self.x_labels.len() - 1) / (ticks - 1)
                };
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
                    f.x(i as f64),
                    y1 + 18.0,
                    escape(&self.x_labels[i])
                );
            }
        }
    }
}

fn segments(values: &[Option<f64>]) -> Vec<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match v {
            Some(v) => cur.push((i, *v)),
            None if !cur.is_empty() => out.push(std::mem::take(&mut cur)),
            None => {}
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}
