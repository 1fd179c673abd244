//! SVG figures of nodal vector fields.
//!
//! Output is a pure function of the input values, so equal fields give
//! byte-identical files.

use std::fmt::Write as _;

use crate::field::NodalField;
use crate::geometry::Point2;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotStyle {
    /// Node markers colored by field magnitude.
    Magnitude,
    /// Unit-length arrows along the field direction.
    Quiver,
    /// Magnitude heatmap with the quiver drawn on top.
    Both,
}

impl std::str::FromStr for PlotStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnitude" => Ok(PlotStyle::Magnitude),
            "quiver" => Ok(PlotStyle::Quiver),
            "both" => Ok(PlotStyle::Both),
            _ => Err(Error::InvalidParameter(format!(
                "unknown plot style `{s}` (expected magnitude, quiver or both)"
            ))),
        }
    }
}

const SIZE: f64 = 600.0;
const MARGIN: f64 = 40.0;
const LEGEND: f64 = 50.0;

/// Viridis anchor colors at t = 0, 0.25, 0.5, 0.75, 1.
const PALETTE: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Linear color scale on `t` in `[0, 1]`.
pub fn color(t: f64) -> String {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let x = t * (PALETTE.len() - 1) as f64;
    let i = (x.floor() as usize).min(PALETTE.len() - 2);
    let f = x - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|k| (PALETTE[i][k] + f * (PALETTE[i + 1][k] - PALETTE[i][k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn fmt(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

/// Renders `field` at `points` as an SVG document.
pub fn render_svg<T: Real>(
    points: &[Point2<T>],
    field: &NodalField<T>,
    style: PlotStyle,
) -> Result<String> {
    if points.len() != field.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: field.num_nodes(),
        });
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter("nothing to plot".into()));
    }
    let pts: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.x.to_f64_lossy(), p.y.to_f64_lossy()))
        .collect();
    let vals: Vec<(f64, f64)> = (0..field.num_nodes())
        .map(|i| {
            let v = field.at(i);
            (v.x.to_f64_lossy(), v.y.to_f64_lossy())
        })
        .collect();
    let mags: Vec<f64> = vals.iter().map(|v| v.0.hypot(v.1)).collect();

    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &pts {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let span = (xmax - xmin).max(ymax - ymin).max(f64::MIN_POSITIVE);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let to_px = |x: f64, y: f64| {
        (
            MARGIN + (x - xmin) * scale,
            SIZE - MARGIN - (y - ymin) * scale,
        )
    };
    // Typical node spacing sets marker and arrow sizes.
    let spacing = span / (pts.len() as f64).sqrt() * scale;
    let marker = (0.55 * spacing).max(1.0);
    let arrow = 0.8 * spacing;

    let (mmin, mmax) = mags
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &m| (lo.min(m), hi.max(m)));
    let range = mmax - mmin;

    let mut s = String::new();
    let width = SIZE + LEGEND + MARGIN;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = fmt(width),
        h = fmt(SIZE)
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    if matches!(style, PlotStyle::Magnitude | PlotStyle::Both) {
        let _ = writeln!(s, r#"<g id="magnitude" stroke="none">"#);
        for (i, &(x, y)) in pts.iter().enumerate() {
            let t = if range > 0.0 {
                (mags[i] - mmin) / range
            } else {
                0.0
            };
            let (px, py) = to_px(x, y);
            let _ = writeln!(
                s,
                r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
                fmt(px),
                fmt(py),
                fmt(marker),
                color(t)
            );
        }
        let _ = writeln!(s, "</g>");
        // Color bar with min/max annotation.
        let bx = SIZE + 5.0;
        let (top, bottom) = (MARGIN, SIZE - MARGIN);
        let steps = 32;
        let _ = writeln!(s, r#"<g id="colorbar">"#);
        for k in 0..steps {
            let t = 1.0 - k as f64 / (steps - 1) as f64;
            let y0 = top + (bottom - top) * k as f64 / steps as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="15" height="{}" fill="{}"/>"#,
                fmt(bx),
                fmt(y0),
                fmt((bottom - top) / steps as f64 + 0.5),
                color(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" font-family="sans-serif">max {:.4e}</text>"#,
            fmt(bx - 10.0),
            fmt(top - 8.0),
            mmax
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" font-family="sans-serif">min {:.4e}</text>"#,
            fmt(bx - 10.0),
            fmt(bottom + 16.0),
            mmin
        );
        let _ = writeln!(s, "</g>");
    }

    if matches!(style, PlotStyle::Quiver | PlotStyle::Both) {
        let _ = writeln!(
            s,
            r#"<g id="quiver" stroke="black" stroke-width="0.8" fill="none">"#
        );
        for (i, &(x, y)) in pts.iter().enumerate() {
            if !(mags[i] > 0.0) {
                continue;
            }
            let (ux, uy) = (vals[i].0 / mags[i], vals[i].1 / mags[i]);
            let (cx, cy) = to_px(x, y);
            // Screen y points down.
            let (dx, dy) = (ux * arrow, -uy * arrow);
            let (x0, y0) = (cx - 0.5 * dx, cy - 0.5 * dy);
            let (x1, y1) = (cx + 0.5 * dx, cy + 0.5 * dy);
            let head = 0.35 * arrow;
            let (hx, hy) = (dx / arrow * head, dy / arrow * head);
            let (lx, ly) = (x1 - hx - 0.5 * hy, y1 - hy + 0.5 * hx);
            let (rx, ry) = (x1 - hx + 0.5 * hy, y1 - hy - 0.5 * hx);
            let _ = writeln!(
                s,
                r#"<path d="M{} {}L{} {}M{} {}L{} {}L{} {}"/>"#,
                fmt(x0),
                fmt(y0),
                fmt(x1),
                fmt(y1),
                fmt(lx),
                fmt(ly),
                fmt(x1),
                fmt(y1),
                fmt(rx),
                fmt(ry)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}
