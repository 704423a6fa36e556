//! Minimal self-contained SVG charts: scatter/line/bar series on linear axes
//! and a colour-mapped heatmap.

use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Marker {
    Plus,
    Star,
    Cross,
    Dot,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Style {
    Markers(Marker),
    Line,
    /// Bars of the given width centred on each x.
    Bars(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    pub color: &'static str,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, style: Style, color: &'static str) -> Self {
        Self {
            label: label.into(),
            points,
            style,
            color,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub width: f64,
    pub height: f64,
    /// Fixed axis ranges; `None` fits the data.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Roughly `target` round tick positions covering [lo, hi].
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / target as f64;
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

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn data_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        let pad = 0.03 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

impl Chart {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            width: 720.0,
            height: 460.0,
            x_range: None,
            y_range: None,
        }
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn render(&self) -> String {
        let (x0, x1) = self
            .x_range
            .unwrap_or_else(|| data_range(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0))));
        let (y0, y1) = self.y_range.unwrap_or_else(|| {
            let (lo, hi) = data_range(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
            (lo.min(0.0).max(if lo >= 0.0 { 0.0 } else { lo }), hi)
        });
        let pw = self.width - MARGIN_L - MARGIN_R;
        let ph = self.height - MARGIN_T - MARGIN_B;
        let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MARGIN_T + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            self.width / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<defs><clipPath id="plot"><rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}"/></clipPath></defs>"#
        );
        let _ = writeln!(
            s,
            r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
        );
        for t in ticks(x0, x1, 8) {
            let x = sx(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/>"##,
                MARGIN_T + ph,
                MARGIN_T + ph + 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                MARGIN_T + ph + 18.0,
                tick_label(t)
            );
        }
        for t in ticks(y0, y1, 6) {
            let y = sy(t);
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_L}" y2="{y:.2}" stroke="#333"/>"##,
                MARGIN_L - 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN_L - 8.0,
                y + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_L + pw / 2.0,
            self.height - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            MARGIN_T + ph / 2.0,
            MARGIN_T + ph / 2.0,
            escape(&self.y_label)
        );

        let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
        for series in &self.series {
            let c = series.color;
            match &series.style {
                Style::Line => {
                    let pts: Vec<String> = series
                        .points
                        .iter()
                        .filter(|p| p.0.is_finite() && p.1.is_finite())
                        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                        .collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{c}" stroke-width="1.6" points="{}"/>"#,
                        pts.join(" ")
                    );
                }
                Style::Bars(width) => {
                    for &(x, y) in &series.points {
                        let (l, r) = (sx(x - width / 2.0), sx(x + width / 2.0));
                        let (top, base) = (sy(y.max(y0)), sy(y0.max(0.0)));
                        let _ = writeln!(
                            s,
                            r#"<rect x="{l:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{c}" fill-opacity="0.45" stroke="{c}"/>"#,
                            (r - l).max(0.0),
                            (base - top).max(0.0)
                        );
                    }
                }
                Style::Markers(m) => {
                    for &(x, y) in &series.points {
                        if x.is_finite() && y.is_finite() {
                            marker(&mut s, *m, sx(x), sy(y), c);
                        }
                    }
                }
            }
        }
        let _ = writeln!(s, "</g>");

        // legend
        for (i, series) in self.series.iter().enumerate() {
            let lx = MARGIN_L + pw - 190.0;
            let ly = MARGIN_T + 16.0 + 18.0 * i as f64;
            match series.style {
                Style::Markers(m) => marker(&mut s, m, lx + 8.0, ly - 4.0, series.color),
                _ => {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/>"#,
                        lx,
                        ly - 4.0,
                        lx + 16.0,
                        ly - 4.0,
                        series.color
                    );
                }
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#,
                lx + 22.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn marker(s: &mut String, m: Marker, x: f64, y: f64, c: &str) {
    let r = 3.5;
    match m {
        Marker::Plus => {
            let _ = writeln!(
                s,
                r#"<path d="M{:.2} {y:.2}H{:.2}M{x:.2} {:.2}V{:.2}" stroke="{c}"/>"#,
                x - r,
                x + r,
                y - r,
                y + r
            );
        }
        Marker::Cross => {
            let _ = writeln!(
                s,
                r#"<path d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}" stroke="{c}"/>"#,
                x - r,
                y - r,
                x + r,
                y + r,
                x - r,
                y + r,
                x + r,
                y - r
            );
        }
        Marker::Star => {
            marker(s, Marker::Plus, x, y, c);
            marker(s, Marker::Cross, x, y, c);
        }
        Marker::Dot => {
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{c}"/>"#);
        }
    }
}

/// Perceptually ordered colour ramp (dark blue → yellow) for t in [0, 1].
pub fn colormap(t: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let pos = t * (STOPS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(STOPS.len() - 2);
    let f = pos - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Heatmap of `values[iy * nx + ix]` over [x0, x1] × [y0, y1], y upwards.
#[allow(clippy::too_many_arguments)]
pub fn heatmap(
    title: &str,
    legend: &[String],
    values: &[f64],
    nx: usize,
    ny: usize,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
) -> String {
    let size = 480.0;
    let (left, top) = (70.0, 40.0);
    let width = size + left + 130.0;
    let height = size + top + 60.0 + 16.0 * legend.len() as f64;
    let vmax = values.iter().copied().fold(0.0, f64::max);
    let cw = size / nx as f64;
    let ch = size / ny as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        left + size / 2.0,
        escape(title)
    );
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for iy in 0..ny {
        for ix in 0..nx {
            let v = values[iy * nx + ix];
            let (r, g, b) = colormap(if vmax > 0.0 { v / vmax } else { 0.0 });
            let px = left + ix as f64 * cw;
            let py = top + size - (iy + 1) as f64 * ch;
            let _ = writeln!(
                s,
                r##"<rect x="{px:.2}" y="{py:.2}" width="{:.2}" height="{:.2}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{size}" height="{size}" fill="none" stroke="#333"/>"##
    );
    for t in ticks(x0, x1, 6) {
        let x = left + (t - x0) / (x1 - x0) * size;
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            top + size + 16.0,
            tick_label(t)
        );
    }
    for t in ticks(y0, y1, 6) {
        let y = top + size - (t - y0) / (y1 - y0) * size;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">x</text>"#,
        left + size / 2.0,
        top + size + 34.0
    );
    let _ = writeln!(
        s,
        r#"<text x="24" y="{:.1}" text-anchor="middle">y</text>"#,
        top + size / 2.0
    );

    // colour bar
    let bx = left + size + 25.0;
    for i in 0..100 {
        let (r, g, b) = colormap(i as f64 / 99.0);
        let y = top + size - (i + 1) as f64 * size / 100.0;
        let _ = writeln!(
            s,
            r##"<rect x="{bx}" y="{y:.2}" width="18" height="{:.2}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
            size / 100.0 + 0.05
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
        bx + 24.0,
        top + 10.0,
        tick_label(vmax)
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">0</text>"#, bx + 24.0, top + size);
    for (i, line) in legend.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{left}" y="{:.1}">{}</text>"#,
            top + size + 56.0 + 16.0 * i as f64,
            escape(line)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_and_inside() {
        let t = ticks(0.0, 1.0, 5);
        assert_eq!(t, vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert!(ticks(3.0, 3.0, 5).len() == 1);
    }

    #[test]
    fn chart_is_well_formed() {
        let svg = Chart::new("S <vN>", "k", "S")
            .with_series(Series::new(
                "a",
                vec![(0.0, 0.1), (1.0, 0.5)],
                Style::Markers(Marker::Plus),
                "red",
            ))
            .with_series(Series::new("b", vec![(0.0, 0.0), (1.0, 1.0)], Style::Line, "blue"))
            .with_series(Series::new("c", vec![(0.5, 0.3)], Style::Bars(0.1), "gray"))
            .render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("S &lt;vN&gt;"));
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn heatmap_cells_and_legend() {
        let svg = heatmap(
            "P",
            &["k = 3".into()],
            &[0.0, 1.0, 0.5, 0.25],
            2,
            2,
            (-1.0, 1.0),
            (-1.0, 1.0),
        );
        assert_eq!(svg.matches("crispEdges").count(), 1);
        assert!(svg.contains("k = 3"));
        assert_eq!(colormap(0.0), (68, 1, 84));
        assert_eq!(colormap(1.0), (253, 231, 37));
    }
}
