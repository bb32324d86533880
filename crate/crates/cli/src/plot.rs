//! SVG line plots and 8-bit PGM images, written without external tooling.

use std::fmt::Write;

use ndarray::Array2;

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Dashed when true.
    pub dashed: bool,
}

impl Series {
    pub fn new(name: &str, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.to_string(), points, dashed: false }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 30.0, 50.0);

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-2..1e4).contains(&v.abs()) {
        format!("{}", (v * 1e3).round() / 1e3)
    } else {
        format!("{v:.2e}")
    }
}

/// Line plot with five ticks per axis and a legend; output is a pure
/// function of the inputs.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (left, right, top, bottom) = MARGIN;
    let (x0, x1) = extent(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = extent(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let pw = WIDTH - left - right;
    let ph = HEIGHT - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="black"/>"#, top + ph, top + ph + 4.0);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, top + ph + 16.0, tick(xv));
        let _ = writeln!(s, r#"<line x1="{}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="black"/>"#, left - 4.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, left - 6.0, py + 4.0, tick(yv));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">{1}</text>"#,
        top + ph / 2.0,
        escape(y_label)
    );
    for (i, series) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#, pts.join(" "));
        let ly = top + 14.0 + 14.0 * i as f64;
        let lx = left + pw - 150.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash}/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 25.0, ly + 4.0, escape(&series.name));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Binary PGM of `image[[row, col]]` with log compression: values are taken
/// in dB relative to the image maximum and mapped linearly from `floor_db`
/// (black) to `ceiling_db` (white).
pub fn pgm_log(image: &Array2<f64>, floor_db: f64, ceiling_db: f64) -> Vec<u8> {
    let (rows, cols) = image.dim();
    let peak = image.iter().cloned().fold(0.0, f64::max);
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    let span = (ceiling_db - floor_db).max(f64::MIN_POSITIVE);
    out.extend(image.iter().map(|&v| {
        let db = if peak > 0.0 && v > 0.0 { 20.0 * (v / peak).log10() } else { f64::NEG_INFINITY };
        (((db - floor_db) / span).clamp(0.0, 1.0) * 255.0).round() as u8
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_maps_floor_and_ceiling() {
        let img = Array2::from_shape_vec((1, 4), vec![1.0, 0.1, 1e-3, 0.0]).unwrap();
        let out = pgm_log(&img, -40.0, 0.0);
        let header = b"P5\n4 1\n255\n";
        assert_eq!(&out[..header.len()], header);
        assert_eq!(&out[header.len()..], &[255, 128, 0, 0]);
    }

    #[test]
    fn svg_is_deterministic_and_well_formed() {
        let s = [Series::new("a", vec![(0.0, 1.0), (1.0, 2.0)]), Series::new("b<", vec![(0.5, 1.5)]).dashed()];
        let a = line_plot("t", "x", "y", &s);
        assert_eq!(a, line_plot("t", "x", "y", &s));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(a.contains("b&lt;"));
    }
}
