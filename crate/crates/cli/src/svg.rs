//! Minimal SVG writer with fixed-precision coordinates, so identical inputs
//! give byte-identical files.

use std::fmt::Write as _;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Linear map from data coordinates to a pixel box. The y axis points up.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl Frame {
    pub fn px(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        self.left + (x - lo) / span(lo, hi) * self.width
    }

    pub fn py(&self, y: f64) -> f64 {
        let (lo, hi) = self.y_range;
        self.top + self.height - (y - lo) / span(lo, hi) * self.height
    }
}

fn span(lo: f64, hi: f64) -> f64 {
    if hi > lo {
        hi - lo
    } else {
        1.0
    }
}

/// Range of `values` padded by 5% on each side.
pub fn padded_range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi <= lo {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

pub struct Svg {
    body: String,
    width: f64,
    height: f64,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn line(
        &mut self,
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        stroke: &str,
        width: f64,
        dash: Option<&str>,
    ) {
        let dash = dash
            .map(|d| format!(" stroke-dasharray=\"{d}\""))
            .unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width:.2}"{dash}/>"#
        );
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}" stroke="{stroke}"/>"#
        );
    }

    pub fn cross(&mut self, cx: f64, cy: f64, r: f64, stroke: &str) {
        self.line(cx - r, cy - r, cx + r, cy + r, stroke, 1.2, None);
        self.line(cx - r, cy + r, cx + r, cy - r, stroke, 1.2, None);
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}" stroke="{stroke}"/>"#
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64) {
        let pts: Vec<String> = points
            .iter()
            .map(|(x, y)| format!("{x:.2},{y:.2}"))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width:.2}"/>"#,
            pts.join(" ")
        );
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size:.1}" font-family="sans-serif" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        );
    }

    /// Frame border plus min/max tick labels on both axes.
    pub fn axes(&mut self, f: &Frame, title: &str) {
        self.rect(f.left, f.top, f.width, f.height, "none", "#444");
        self.text(f.left + f.width / 2.0, f.top - 8.0, 13.0, "middle", title);
        let (x0, x1) = f.x_range;
        let (y0, y1) = f.y_range;
        let below = f.top + f.height + 14.0;
        self.text(f.left, below, 10.0, "start", &format!("{x0:.3}"));
        self.text(f.left + f.width, below, 10.0, "end", &format!("{x1:.3}"));
        self.text(
            f.left - 4.0,
            f.top + f.height,
            10.0,
            "end",
            &format!("{y0:.3}"),
        );
        self.text(f.left - 4.0, f.top + 10.0, 10.0, "end", &format!("{y1:.3}"));
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_maps_corners() {
        let f = Frame {
            left: 10.0,
            top: 20.0,
            width: 100.0,
            height: 50.0,
            x_range: (0.0, 1.0),
            y_range: (-1.0, 1.0),
        };
        assert_eq!(f.px(0.0), 10.0);
        assert_eq!(f.px(1.0), 110.0);
        assert_eq!(f.py(-1.0), 70.0);
        assert_eq!(f.py(1.0), 20.0);
    }

    #[test]
    fn output_is_stable() {
        let mut a = Svg::new(100.0, 100.0);
        a.circle(1.0 / 3.0, 2.0, 1.0, "red", "none");
        a.text(0.0, 0.0, 10.0, "start", "a<b");
        let s = a.finish();
        assert!(s.contains(r#"cx="0.33""#));
        assert!(s.contains("a&lt;b"));
        assert!(s.starts_with("<svg"));
    }

    #[test]
    fn padding() {
        assert_eq!(padded_range([0.0, 10.0]), (-0.5, 10.5));
        assert_eq!(padded_range([2.0]), (1.5, 2.5));
        assert_eq!(padded_range(std::iter::empty()), (0.0, 1.0));
    }
}
