//! Minimal vector plots written as SVG text.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f4e79", "#c0392b", "#27864a", "#8e44ad", "#d68910", "#555555"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dots,
    Steps,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>, style: Style) -> Self {
        Self {
            name: name.into(),
            points,
            style,
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn num(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&v.abs()) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }
    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.03 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn axes(out: &mut String, f: &Frame, title: &str, xl: &str, yl: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, num(W / 2.0), esc(title));
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num(x1 - x0),
        num(y1 - y0)
    );
    for t in ticks(f.x.0, f.x.1) {
        let p = num(f.px(t));
        let _ = writeln!(out, r#"<line x1="{p}" y1="{y1}" x2="{p}" y2="{}" stroke="black"/>"#, y1 + 5.0);
        let _ = writeln!(out, r#"<text x="{p}" y="{}" text-anchor="middle">{}</text>"#, y1 + 18.0, tick_label(t));
    }
    for t in ticks(f.y.0, f.y.1) {
        let p = num(f.py(t));
        let _ = writeln!(out, r#"<line x1="{}" y1="{p}" x2="{x0}" y2="{p}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{p}" text-anchor="end" dominant-baseline="middle">{}</text>"#, x0 - 8.0, tick_label(t));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num((x0 + x1) / 2.0), H - 12.0, esc(xl));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        num((y0 + y1) / 2.0),
        num((y0 + y1) / 2.0),
        esc(yl)
    );
}

/// Line, dot and step series on shared axes.
pub fn plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let f = Frame {
        x: bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0))),
        y: bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1))),
    };
    let mut out = String::new();
    axes(&mut out, &f, title, x_label, y_label);
    // an unnamed series continues the colour of the named one before it
    let mut group = 0usize;
    for (i, s) in series.iter().enumerate() {
        if i > 0 && !s.name.is_empty() {
            group += 1;
        }
        let colour = PALETTE[group % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).copied().collect();
        match s.style {
            Style::Line | Style::Steps => {
                let mut d = String::new();
                for (k, (x, y)) in pts.iter().enumerate() {
                    let cmd = if k == 0 { 'M' } else if s.style == Style::Steps { 'H' } else { 'L' };
                    if cmd == 'H' {
                        let _ = write!(d, "H{}V{}", num(f.px(*x)), num(f.py(*y)));
                    } else {
                        let _ = write!(d, "{cmd}{},{}", num(f.px(*x)), num(f.py(*y)));
                    }
                }
                let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{colour}" stroke-width="1"/>"#);
            }
            Style::Dots => {
                for (x, y) in &pts {
                    let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="1.5" fill="{colour}"/>"#, num(f.px(*x)), num(f.py(*y)));
                }
            }
        }
        if s.name.is_empty() {
            continue;
        }
        let ly = TOP + 14.0 + 14.0 * group as f64;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end" fill="{colour}">{}</text>"#,
            W - RIGHT - 8.0,
            num(ly),
            esc(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Signed values on a regular `nx × ny` lattice, blue negative, red positive.
pub fn heatmap(title: &str, x: (f64, f64), y: (f64, f64), nx: usize, ny: usize, values: &[f64]) -> String {
    let f = Frame { x, y };
    let mut out = String::new();
    axes(&mut out, &f, title, "x", "p");
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let (cw, ch) = ((W - LEFT - RIGHT) / nx as f64, (H - TOP - BOTTOM) / ny as f64);
    for i in 0..nx {
        for j in 0..ny {
            let v = values[i * ny + j] / scale;
            if v.abs() < 1e-3 {
                continue;
            }
            let a = v.abs().sqrt();
            let fade = |c: f64| (255.0 * (1.0 - a) + c * a).round() as u8;
            let (r, g, b) = if v > 0.0 { (fade(192.0), fade(57.0), fade(43.0)) } else { (fade(31.0), fade(78.0), fade(121.0)) };
            let _ = writeln!(
                out,
                r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
                num(LEFT + i as f64 * cw),
                num(H - BOTTOM - (j + 1) as f64 * ch),
                num(cw + 0.05),
                num(ch + 0.05)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
