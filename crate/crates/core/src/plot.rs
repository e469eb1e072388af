//! Deterministic SVG rendering: fixed canvas, fixed axis policy, fixed
//! number formatting, so identical data gives identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    #[serde(with = "crate::nullable::vec")]
    pub y: Vec<f64>,
}

/// Everything needed to redraw a figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlotData {
    /// Empirical frequencies on `0, 1, 2, …` with an optional reference pmf.
    Histogram {
        name: String,
        title: String,
        #[serde(with = "crate::nullable::vec")]
        observed: Vec<f64>,
        reference: Option<Vec<f64>>,
    },
    Trend {
        name: String,
        title: String,
        #[serde(with = "crate::nullable::vec")]
        x: Vec<f64>,
        series: Vec<Series>,
    },
    /// Chords `[x0, y0, x1, y1]` in the square `[−half, half]²`.
    Arrangement {
        name: String,
        title: String,
        half: f64,
        chords: Vec<[f64; 4]>,
    },
}

impl PlotData {
    pub fn name(&self) -> &str {
        match self {
            PlotData::Histogram { name, .. } | PlotData::Trend { name, .. } | PlotData::Arrangement { name, .. } => name,
        }
    }

    pub fn render(&self) -> String {
        match self {
            PlotData::Histogram {
                title,
                observed,
                reference,
                ..
            } => histogram_svg(title, observed, reference.as_deref()),
            PlotData::Trend { title, x, series, .. } => trend_svg(title, x, series),
            PlotData::Arrangement { title, half, chords, .. } => arrangement_svg(title, *half, chords),
        }
    }
}

/// Write every plot as `<dir>/<name>.svg`.
pub fn emit_plots(plots: &[PlotData], dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::with_capacity(plots.len());
    for p in plots {
        let path = dir.join(format!("{}.svg", p.name()));
        fs::write(&path, p.render())?;
        out.push(path);
    }
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24.00" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

/// Plot area mapping for data ranges `[x0, x1] × [y0, y1]`.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&self, s: &mut String) {
        let (l, r, b, t) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
        let _ = writeln!(
            s,
            r##"<path d="M{l:.2} {t:.2} L{l:.2} {b:.2} L{r:.2} {b:.2}" stroke="#000000" fill="none"/>"##
        );
        for i in 0..=4 {
            let fx = self.x0 + (self.x1 - self.x0) * i as f64 / 4.0;
            let fy = self.y0 + (self.y1 - self.y0) * i as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
                self.px(fx),
                b + 14.0,
                tick(fx)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
                l - 4.0,
                self.py(fy) + 3.0,
                tick(fy)
            );
        }
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 0.01 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn finite_max(xs: impl Iterator<Item = f64>) -> f64 {
    xs.filter(|x| x.is_finite()).fold(0.0, f64::max)
}

pub fn histogram_svg(title: &str, observed: &[f64], reference: Option<&[f64]>) -> String {
    let mut s = header(title);
    let bins = observed.len().max(reference.map_or(0, <[f64]>::len)).max(1);
    let ymax = finite_max(observed.iter().chain(reference.unwrap_or(&[])).copied());
    let frame = Frame {
        x0: -0.5,
        x1: bins as f64 - 0.5,
        y0: 0.0,
        y1: if ymax > 0.0 { ymax * 1.1 } else { 1.0 },
    };
    frame.axes(&mut s);
    let w = frame.px(1.0) - frame.px(0.0);
    for (k, &p) in observed.iter().enumerate() {
        let (x, y) = (frame.px(k as f64 - 0.4), frame.py(p));
        let _ = writeln!(
            s,
            r##"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}" fill-opacity="0.6"/>"##,
            0.8 * w,
            frame.py(0.0) - y,
            PALETTE[0]
        );
    }
    if let Some(r) = reference {
        let pts: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(k, &p)| format!("{:.2},{:.2}", frame.px(k as f64), frame.py(p)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(s, r#"<path d="M{}" stroke="{}" fill="none" stroke-width="1.5"/>"#, pts.join(" L"), PALETTE[1]);
        }
        for (k, &p) in r.iter().enumerate() {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#, frame.px(k as f64), frame.py(p), PALETTE[1]);
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn trend_svg(title: &str, x: &[f64], series: &[Series]) -> String {
    let mut s = header(title);
    let (x0, x1) = match (x.iter().copied().reduce(f64::min), x.iter().copied().reduce(f64::max)) {
        (Some(a), Some(b)) if b > a => (a, b),
        (Some(a), _) => (a - 1.0, a + 1.0),
        _ => (0.0, 1.0),
    };
    let ymax = finite_max(series.iter().flat_map(|sr| sr.y.iter().copied()));
    let frame = Frame {
        x0,
        x1,
        y0: 0.0,
        y1: if ymax > 0.0 { ymax * 1.1 } else { 1.0 },
    };
    frame.axes(&mut s);
    for (i, sr) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = x
            .iter()
            .zip(&sr.y)
            .filter(|(_, y)| y.is_finite())
            .map(|(&a, &b)| format!("{:.2},{:.2}", frame.px(a), frame.py(b)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(s, r#"<path d="M{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, pts.join(" L"));
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 12.0 * (i as f64 + 1.0),
            escape(&sr.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn arrangement_svg(title: &str, half: f64, chords: &[[f64; 4]]) -> String {
    let mut s = header(title);
    let side = HEIGHT - 2.0 * MARGIN;
    let left = (WIDTH - side) / 2.0;
    let map = |x: f64, y: f64| (left + (x + half) / (2.0 * half) * side, MARGIN + (half - y) / (2.0 * half) * side);
    let _ = writeln!(
        s,
        r##"<rect x="{left:.2}" y="{MARGIN:.2}" width="{side:.2}" height="{side:.2}" stroke="#000000" fill="none"/>"##
    );
    for c in chords {
        let (a, b) = (map(c[0], c[1]), map(c[2], c[3]));
        let _ = writeln!(
            s,
            r#"<polyline points="{:.2},{:.2} {:.2},{:.2}" stroke="{}" fill="none" stroke-width="0.8"/>"#,
            a.0, a.1, b.0, b.1, PALETTE[0]
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_elements(svg: &str, tag: &str) -> usize {
        let doc = roxmltree::Document::parse(svg).expect("valid XML");
        doc.descendants().filter(|n| n.tag_name().name() == tag).count()
    }

    #[test]
    fn empty_histogram_is_axes_only() {
        let svg = histogram_svg("empty", &[], None);
        assert_eq!(count_elements(&svg, "path"), 1);
        assert_eq!(count_elements(&svg, "rect"), 1);
    }

    #[test]
    fn histogram_is_deterministic() {
        let obs = [0.1, 0.3, 0.4, 0.2];
        let r = [0.13, 0.27, 0.27, 0.18, 0.09];
        let a = histogram_svg("counts <N>", &obs, Some(&r));
        assert_eq!(a, histogram_svg("counts <N>", &obs, Some(&r)));
        assert_eq!(count_elements(&a, "circle"), 5);
        assert_eq!(count_elements(&a, "rect"), 1 + 4);
    }

    #[test]
    fn one_polyline_per_chord() {
        let chords: Vec<[f64; 4]> = (0..17).map(|i| [-1.0, i as f64 / 20.0, 1.0, -0.3]).collect();
        let svg = arrangement_svg("snapshot", 1.0, &chords);
        assert_eq!(count_elements(&svg, "polyline"), 17);
    }

    #[test]
    fn trend_handles_single_point_and_nan() {
        let svg = trend_svg(
            "tv",
            &[500.0],
            &[Series {
                label: "a & b".into(),
                y: vec![f64::NAN],
            }],
        );
        assert_eq!(count_elements(&svg, "text") > 0, true);
    }

    #[test]
    fn emit_writes_named_files() {
        let dir = std::env::temp_dir().join(format!("geotess-plot-{}", std::process::id()));
        let plots = vec![PlotData::Histogram {
            name: "h".into(),
            title: "h".into(),
            observed: vec![1.0],
            reference: None,
        }];
        let paths = emit_plots(&plots, &dir).unwrap();
        assert_eq!(paths, vec![dir.join("h.svg")]);
        fs::remove_dir_all(&dir).unwrap();
    }
}
