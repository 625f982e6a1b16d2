//! Minimal SVG writer for barcodes and matching overlays.

use std::fmt::Write;

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Svg {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) -> &mut Self {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="{fill}"/>"#
        );
        self
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) -> &mut Self {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{stroke}" stroke-width="{width}"/>"#
        );
        self
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) -> &mut Self {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{r:.3}" fill="{fill}"/>"#
        );
        self
    }

    pub fn hollow_circle(&mut self, cx: f64, cy: f64, r: f64, stroke: &str) -> &mut Self {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{r:.3}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#
        );
        self
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, content: &str) -> &mut Self {
        let escaped = content.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.3}" y="{y:.3}" font-size="{size}" font-family="sans-serif">{escaped}</text>"#
        );
        self
    }

    pub fn finish(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

/// Fixed palette, cycled by index.
pub fn palette(i: usize) -> &'static str {
    const COLORS: [&str; 10] = [
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    ];
    COLORS[i % COLORS.len()]
}
