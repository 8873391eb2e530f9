//! Self-contained SVG plots written as plain text.

use std::fmt::Write as _;

use super::fit::Histogram;
use super::table::Table;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    /// Index into the palette.
    pub color: usize,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            dashed: false,
            color: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn tf(v: f64, log: bool) -> f64 {
    if log {
        if v > 0.0 {
            v.log10()
        } else {
            f64::NAN
        }
    } else {
        v
    }
}

fn tick_label(v: f64, log: bool) -> String {
    let v = if log { 10f64.powf(v) } else { v };
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

/// Renders one panel into a `w × h` box at `(x0, y0)`.
fn render_panel(out: &mut String, panel: &Panel, x0: f64, y0: f64, w: f64, h: f64) {
    let (ml, mr, mt, mb) = (60.0, 10.0, 24.0, 40.0);
    let pw = w - ml - mr;
    let ph = h - mt - mb;
    let pts = || {
        panel
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|&(x, y)| (tf(x, panel.log_x), tf(y, panel.log_y))))
    };
    let (xlo, xhi) = bounds(pts().map(|p| p.0));
    let (ylo, yhi) = bounds(pts().map(|p| p.1));
    let sx = |x: f64| x0 + ml + (x - xlo) / (xhi - xlo) * pw;
    let sy = |y: f64| y0 + mt + ph - (y - ylo) / (yhi - ylo) * ph;

    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#444"/>"##,
        x0 + ml,
        y0 + mt
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
        x0 + ml + pw / 2.0,
        y0 + 16.0,
        escape(&panel.title)
    );
    for i in 0..=4 {
        let fx = xlo + (xhi - xlo) * i as f64 / 4.0;
        let fy = ylo + (yhi - ylo) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
            sx(fx),
            y0 + mt + ph + 14.0,
            tick_label(fx, panel.log_x)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            x0 + ml - 4.0,
            sy(fy) + 3.0,
            tick_label(fy, panel.log_y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
        x0 + ml + pw / 2.0,
        y0 + h - 6.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        x0 + 12.0,
        y0 + mt + ph / 2.0,
        x0 + 12.0,
        y0 + mt + ph / 2.0,
        escape(&panel.y_label)
    );
    for (k, s) in panel.series.iter().enumerate() {
        let color = PALETTE[s.color % PALETTE.len()];
        let mut d = String::new();
        for &(x, y) in &s.points {
            let (x, y) = (tf(x, panel.log_x), tf(y, panel.log_y));
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            let _ = write!(d, "{}{:.2},{:.2}", if d.is_empty() { "M" } else { " L" }, sx(x), sy(y));
        }
        let dash = if s.dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#);
        if s.points.len() == 1 {
            let (x, y) = s.points[0];
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                sx(tf(x, panel.log_x)),
                sy(tf(y, panel.log_y))
            );
        }
        let ly = y0 + mt + 12.0 + 12.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#,
            x0 + ml + 6.0,
            x0 + ml + 22.0,
            x0 + ml + 26.0,
            ly + 3.0,
            escape(&s.name)
        );
    }
}

/// Lays panels out on a grid with `cols` columns.
pub fn panels(panels: &[Panel], cols: usize) -> String {
    let cols = cols.max(1);
    let rows = panels.len().div_ceil(cols).max(1);
    let (w, h) = (420.0, 300.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif">"#,
        w * cols as f64,
        h * rows as f64,
        w * cols as f64,
        h * rows as f64
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, w * (i % cols) as f64, h * (i / cols) as f64, w, h);
    }
    out.push_str("</svg>\n");
    out
}

pub fn line_chart(panel: &Panel) -> String {
    panels(std::slice::from_ref(panel), 1)
}

/// Step outline of a histogram.
pub fn histogram_series(name: &str, hist: &Histogram, color: usize) -> Series {
    let mut points = Vec::with_capacity(2 * hist.density.len() + 2);
    points.push((hist.edges[0], 0.0));
    for (i, &d) in hist.density.iter().enumerate() {
        points.push((hist.edges[i], d));
        points.push((hist.edges[i + 1], d));
    }
    points.push((*hist.edges.last().unwrap(), 0.0));
    Series {
        name: name.to_string(),
        points,
        dashed: false,
        color,
    }
}

/// The four-panel `ā, b̄, r̄₁, r̄₂` evolution plot: one colour per `Δ`, SGD
/// solid and PDE dashed. Expects the `evolution.csv` layout.
pub fn evolution_panels(evo: &Table) -> String {
    let (Some(delta), Some(t), Some(src)) = (evo.column("delta"), evo.column("t"), evo.text_column("source")) else {
        return panels(&[], 2);
    };
    let mut deltas: Vec<f64> = Vec::new();
    for &d in &delta {
        if !deltas.contains(&d) {
            deltas.push(d);
        }
    }
    let coords = ["a", "b", "r1", "r2"];
    let out: Vec<Panel> = coords
        .iter()
        .map(|c| {
            let vals = evo.column(c).unwrap_or_default();
            let mut series = Vec::new();
            for (ci, &d) in deltas.iter().enumerate() {
                for source in ["sgd", "pde"] {
                    let points = (0..evo.len())
                        .filter(|&i| delta[i] == d && src[i] == source)
                        .map(|i| (t[i], vals[i]))
                        .collect();
                    series.push(Series {
                        name: format!("{source} Δ={d}"),
                        points,
                        dashed: source == "pde",
                        color: ci,
                    });
                }
            }
            Panel {
                title: format!("mean {c}"),
                x_label: "t".into(),
                y_label: (*c).into(),
                series,
                ..Panel::default()
            }
        })
        .collect();
    panels(&out, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_well_formed_and_deterministic() {
        let p = Panel {
            title: "a < b".into(),
            series: vec![Series::new("s", vec![(1.0, 2.0), (2.0, 3.0)])],
            ..Panel::default()
        };
        let a = line_chart(&p);
        assert_eq!(a, line_chart(&p));
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert!(a.contains("a &lt; b"));
    }

    #[test]
    fn evolution_plot_has_a_series_per_delta_and_source() {
        let mut t = Table::new(&["delta", "t", "source", "a", "b", "r1", "r2"]);
        for d in [0.2, 0.8] {
            for s in ["sgd", "pde"] {
                t.push(vec![d.into(), 0.0.into(), s.into(), 1.0.into(), 1.0.into(), 0.5.into(), 0.5.into()]);
            }
        }
        let svg = evolution_panels(&t);
        assert_eq!(svg.matches("sgd Δ=0.2").count(), 4);
        assert_eq!(svg.matches("pde Δ=0.8").count(), 4);
    }
}
