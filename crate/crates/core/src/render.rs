//! SVG 1.1 pictures: tessellations by the fundamental polygon, walk orbits
//! and boundary histograms. Output is fully determined by the inputs.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{word_ball, GeneratorSet, GroupError, GroupPreset, Word, DEFAULT_WORD_BUDGET};
use crate::hyperbolic::{geodesic_through, karcher_mean, DiskPoint, GeodesicArc, Isometry};
use crate::walk::BoundarySample;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("word uses generator g{0}, but the group has {1}")]
    UnknownGenerator(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub canvas: u32,
    pub stroke_width: f64,
    pub budget: u64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            canvas: 800,
            stroke_width: 0.6,
            budget: DEFAULT_WORD_BUDGET,
        }
    }
}

/// Maps the unit disk onto a centred disk of radius `fill` half-widths.
struct Frame {
    center: f64,
    scale: f64,
}

impl Frame {
    fn new(canvas: u32, fill: f64) -> Frame {
        let half = canvas as f64 / 2.0;
        Frame {
            center: half,
            scale: half * fill,
        }
    }

    fn xy(&self, z: Complex64) -> (f64, f64) {
        (self.center + self.scale * z.re, self.center - self.scale * z.im)
    }
}

fn header(canvas: u32) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{canvas}\" height=\"{canvas}\" viewBox=\"0 0 {canvas} {canvas}\">\n"
    )
}

fn boundary_circle(frame: &Frame, stroke: f64) -> String {
    format!(
        "<circle class=\"boundary\" cx=\"{:.3}\" cy=\"{:.3}\" r=\"{:.3}\" fill=\"none\" stroke=\"black\" stroke-width=\"{:.3}\"/>\n",
        frame.center, frame.center, frame.scale, stroke
    )
}

/// SVG path data for a geodesic polygon, each side a true circular arc or
/// straight diameter segment.
fn polygon_path(frame: &Frame, vertices: &[DiskPoint]) -> Result<String, GroupError> {
    let n = vertices.len();
    let (x0, y0) = frame.xy(vertices[0].z());
    let mut d = format!("M {x0:.3} {y0:.3}");
    for i in 0..n {
        let (p, q) = (vertices[i], vertices[(i + 1) % n]);
        let (x, y) = frame.xy(q.z());
        match geodesic_through(p, q)? {
            GeodesicArc::Diameter { .. } => write!(d, " L {x:.3} {y:.3}").unwrap(),
            GeodesicArc::Circular { center, radius } => {
                let (cx, cy) = frame.xy(center);
                let (px, py) = frame.xy(p.z());
                let cross = (px - cx) * (y - cy) - (py - cy) * (x - cx);
                let sweep = u8::from(cross > 0.0);
                let r = radius * frame.scale;
                write!(d, " A {r:.3} {r:.3} 0 0 {sweep} {x:.3} {y:.3}").unwrap();
            }
        }
    }
    d.push_str(" Z");
    Ok(d)
}

/// Points equal up to `tol`, found through a hash grid with neighbour cells.
struct PointSet {
    tol: f64,
    cells: HashMap<(i64, i64), Vec<Complex64>>,
}

impl PointSet {
    fn new(tol: f64) -> PointSet {
        PointSet {
            tol,
            cells: HashMap::new(),
        }
    }

    fn cell(&self, z: Complex64) -> (i64, i64) {
        ((z.re / self.tol).floor() as i64, (z.im / self.tol).floor() as i64)
    }

    /// Inserts `z`; false when an equal point was already present.
    fn insert(&mut self, z: Complex64) -> bool {
        let (cx, cy) = self.cell(z);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = self.cells.get(&(cx + dx, cy + dy)) {
                    if v.iter().any(|w| (w - z).norm() < self.tol) {
                        return false;
                    }
                }
            }
        }
        self.cells.entry((cx, cy)).or_default().push(z);
        true
    }
}

#[derive(Debug, Clone)]
pub struct Tessellation {
    pub svg: String,
    pub tile_count: usize,
}

/// Images of the fundamental polygon under every word of length `<= radius`,
/// deduplicated by where they send the polygon's centre. Orientation-
/// reversing images are shaded.
pub fn tessellation_svg(
    preset: &GroupPreset,
    radius: usize,
    options: &RenderOptions,
) -> Result<Tessellation, RenderError> {
    let frame = Frame::new(options.canvas, 0.96);
    let polygon = &preset.polygon;
    let centre = karcher_mean(&polygon.vertices, 1e-14);
    let words = word_ball(&preset.gens, radius, options.budget)?;
    let mut seen = PointSet::new(1e-7);
    let mut tiles: Vec<(bool, String)> = Vec::new();
    for (_, g) in &words {
        if !seen.insert(g.apply(centre).z()) {
            continue;
        }
        let vertices: Vec<DiskPoint> = polygon.vertices.iter().map(|&v| g.apply(v)).collect();
        tiles.push((g.antiholomorphic, polygon_path(&frame, &vertices)?));
    }
    let mut svg = header(options.canvas);
    svg.push_str(&boundary_circle(&frame, options.stroke_width * 2.0));
    writeln!(
        svg,
        "<g class=\"tiles\" stroke=\"#222222\" stroke-width=\"{:.3}\" stroke-linejoin=\"round\">",
        options.stroke_width
    )
    .unwrap();
    for (i, (flip, d)) in tiles.iter().enumerate() {
        let fill = match (i, flip) {
            (0, _) => "#f4a261",
            (_, true) => "#c8d3df",
            (_, false) => "#ffffff",
        };
        writeln!(svg, "<path class=\"tile\" fill=\"{fill}\" d=\"{d}\"/>").unwrap();
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(Tessellation {
        svg,
        tile_count: tiles.len(),
    })
}

/// `x_k = (s_1 ∘ … ∘ s_k)·0` for the letters of `word`, starting with `x_0 = 0`.
pub fn word_orbit(gens: &GeneratorSet, word: &Word) -> Result<Vec<DiskPoint>, RenderError> {
    let mut acc = Isometry::IDENTITY;
    let mut out = vec![DiskPoint::ORIGIN];
    for l in &word.0 {
        let g = gens
            .generators
            .get(l.generator)
            .ok_or(RenderError::UnknownGenerator(l.generator + 1, gens.generators.len()))?;
        let step = if l.inverse { g.map.inverse() } else { g.map };
        acc = acc.compose(&step);
        out.push(acc.apply(DiskPoint::ORIGIN));
    }
    Ok(out)
}

/// Orbit points joined by geodesic segments. `points[0]` is the base point;
/// the others are marked and labelled with their step number.
pub fn orbit_svg(points: &[DiskPoint], options: &RenderOptions) -> Result<String, RenderError> {
    let frame = Frame::new(options.canvas, 0.96);
    let mut svg = header(options.canvas);
    svg.push_str(&boundary_circle(&frame, options.stroke_width * 2.0));
    let mut d = String::new();
    for w in points.windows(2) {
        if d.is_empty() {
            let (x, y) = frame.xy(w[0].z());
            write!(d, "M {x:.3} {y:.3}").unwrap();
        }
        let (x, y) = frame.xy(w[1].z());
        match geodesic_through(w[0], w[1]) {
            Ok(GeodesicArc::Circular { center, radius }) => {
                let (cx, cy) = frame.xy(center);
                let (px, py) = frame.xy(w[0].z());
                let cross = (px - cx) * (y - cy) - (py - cy) * (x - cx);
                let r = radius * frame.scale;
                write!(d, " A {r:.3} {r:.3} 0 0 {} {x:.3} {y:.3}", u8::from(cross > 0.0)).unwrap();
            }
            _ => write!(d, " L {x:.3} {y:.3}").unwrap(),
        }
    }
    if !d.is_empty() {
        writeln!(
            svg,
            "<path class=\"orbit\" fill=\"none\" stroke=\"#1d3557\" stroke-width=\"{:.3}\" d=\"{d}\"/>",
            options.stroke_width * 2.0
        )
        .unwrap();
    }
    let marker = 2.0 + options.stroke_width * 3.0;
    for (k, p) in points.iter().enumerate() {
        let (x, y) = frame.xy(p.z());
        let (class, fill) = if k == 0 { ("base", "#e63946") } else { ("step", "#1d3557") };
        writeln!(
            svg,
            "<circle class=\"{class}\" cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{marker:.3}\" fill=\"{fill}\"/>"
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{:.3}\" y=\"{:.3}\" font-family=\"sans-serif\" font-size=\"12\">x{k}</text>",
            x + marker + 1.0,
            y - marker - 1.0
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Histogram of boundary angles drawn as radial bars outside the disk.
pub fn measure_svg(sample: &BoundarySample, bins: usize, options: &RenderOptions) -> String {
    let frame = Frame::new(options.canvas, 0.7);
    let hist = sample.histogram(bins);
    let peak = hist.iter().cloned().fold(0.0, f64::max);
    let reach = 0.98 / 0.7 - 1.0;
    let mut svg = header(options.canvas);
    svg.push_str(&boundary_circle(&frame, options.stroke_width * 2.0));
    writeln!(svg, "<g class=\"rose\" fill=\"#457b9d\" stroke=\"none\">").unwrap();
    for (j, &h) in hist.iter().enumerate() {
        if h == 0.0 {
            continue;
        }
        let len = 1.0 + reach * h / peak;
        let (t0, t1) = (TAU * j as f64 / bins as f64, TAU * (j + 1) as f64 / bins as f64);
        let corners = [
            Complex64::from_polar(1.0, t0),
            Complex64::from_polar(len, t0),
            Complex64::from_polar(len, t1),
            Complex64::from_polar(1.0, t1),
        ];
        let pts: Vec<String> = corners
            .iter()
            .map(|&z| {
                let (x, y) = frame.xy(z);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        writeln!(svg, "<polygon class=\"bin\" points=\"{}\"/>", pts.join(" ")).unwrap();
    }
    svg.push_str("</g>\n");
    if let Some(w) = &sample.warning {
        writeln!(
            svg,
            "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            w.replace('&', "&amp;").replace('<', "&lt;")
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}
