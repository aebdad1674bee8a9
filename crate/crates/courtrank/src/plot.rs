//! Minimal static SVG emission for the fitted-curve and ROC figures.
//! Deliberately dependency-free: axes, ticks, polylines, and scatter
//! points are all the exports need.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 48.0;

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Scatter markers only when false.
    pub line: bool,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

struct Scale {
    min: f64,
    max: f64,
    lo_px: f64,
    hi_px: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        if (self.max - self.min).abs() < f64::EPSILON {
            return (self.lo_px + self.hi_px) / 2.0;
        }
        self.lo_px + (v - self.min) / (self.max - self.min) * (self.hi_px - self.lo_px)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() {
        (0.0, 1.0)
    } else if min == max {
        (min - 0.5, max + 0.5)
    } else {
        (min, max)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Chart {
    pub fn render(&self) -> String {
        let (x_min, x_max) = bounds(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.0)),
        );
        let (y_min, y_max) = bounds(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1)),
        );
        let x = Scale {
            min: x_min,
            max: x_max,
            lo_px: MARGIN_LEFT,
            hi_px: WIDTH - MARGIN_RIGHT,
        };
        let y = Scale {
            min: y_min,
            max: y_max,
            lo_px: HEIGHT - MARGIN_BOTTOM,
            hi_px: MARGIN_TOP,
        };

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"14\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));

        // Axes.
        svg.push_str(&format!(
            "<line x1=\"{l:.1}\" y1=\"{b:.1}\" x2=\"{r:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n\
             <line x1=\"{l:.1}\" y1=\"{t:.1}\" x2=\"{l:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n",
            l = MARGIN_LEFT,
            r = WIDTH - MARGIN_RIGHT,
            t = MARGIN_TOP,
            b = HEIGHT - MARGIN_BOTTOM,
        ));
        for i in 0..=5 {
            let fx = x.min + (x.max - x.min) * i as f64 / 5.0;
            let fy = y.min + (y.max - y.min) * i as f64 / 5.0;
            let px = x.map(fx);
            let py = y.map(fy);
            svg.push_str(&format!(
                "<line x1=\"{px:.1}\" y1=\"{b:.1}\" x2=\"{px:.1}\" y2=\"{b2:.1}\" stroke=\"black\"/>\n\
                 <text x=\"{px:.1}\" y=\"{ty:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
                 font-size=\"10\">{fx:.2}</text>\n",
                b = HEIGHT - MARGIN_BOTTOM,
                b2 = HEIGHT - MARGIN_BOTTOM + 4.0,
                ty = HEIGHT - MARGIN_BOTTOM + 16.0,
            ));
            svg.push_str(&format!(
                "<line x1=\"{l:.1}\" y1=\"{py:.1}\" x2=\"{l2:.1}\" y2=\"{py:.1}\" stroke=\"black\"/>\n\
                 <text x=\"{tx:.1}\" y=\"{py2:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
                 font-size=\"10\">{fy:.2}</text>\n",
                l = MARGIN_LEFT - 4.0,
                l2 = MARGIN_LEFT,
                tx = MARGIN_LEFT - 6.0,
                py2 = py + 3.0,
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"12\">{}</text>\n",
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        ));
        svg.push_str(&format!(
            "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"12\" transform=\"rotate(-90 16 {mid:.1})\">{}</text>\n",
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            escape(&self.y_label),
            mid = (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        ));

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            if series.line {
                let pts: Vec<String> = series
                    .points
                    .iter()
                    .map(|(px, py)| format!("{:.2},{:.2}", x.map(*px), y.map(*py)))
                    .collect();
                svg.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
                     points=\"{}\"/>\n",
                    pts.join(" ")
                ));
            } else {
                for (px, py) in &series.points {
                    svg.push_str(&format!(
                        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                        x.map(*px),
                        y.map(*py)
                    ));
                }
            }
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
                 fill=\"{color}\">{}</text>\n",
                WIDTH - MARGIN_RIGHT - 160.0,
                MARGIN_TOP + 14.0 * (i as f64 + 1.0),
                escape(&series.label)
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}
