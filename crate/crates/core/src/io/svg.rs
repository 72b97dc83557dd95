//! Minimal SVG markup for tessellations, residual fields, QQ plots and traces.

use std::fmt::Write as _;

use crate::geometry::{Tessellation, Vec2};
use crate::residuals::{QqEnvelope, ResidualGrid};
use crate::sampler::MonitoringRecord;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Delaunay,
    Voronoi,
}

/// Affine map from a data box onto the drawing area, y pointing up.
struct Frame {
    lo: Vec2,
    hi: Vec2,
}

impl Frame {
    fn new(lo: Vec2, hi: Vec2) -> Self {
        let pad = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = pad(lo.x, hi.x);
        let (y0, y1) = pad(lo.y, hi.y);
        Self { lo: Vec2::new(x0, y0), hi: Vec2::new(x1, y1) }
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        let inner = SIZE - 2.0 * MARGIN;
        (
            MARGIN + inner * (p.x - self.lo.x) / (self.hi.x - self.lo.x),
            SIZE - MARGIN - inner * (p.y - self.lo.y) / (self.hi.y - self.lo.y),
        )
    }

    fn points(&self, pts: impl IntoIterator<Item = Vec2>) -> String {
        let mut s = String::new();
        for p in pts {
            let (x, y) = self.map(p);
            let _ = write!(s, "{x:.2},{y:.2} ");
        }
        s.pop();
        s
    }
}

fn open() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn axes(out: &mut String, frame: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, y0) = frame.map(frame.lo);
    let (x1, y1) = frame.map(frame.hi);
    let _ = writeln!(
        out,
        "<rect x=\"{x0:.2}\" y=\"{y1:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"14\">{xlabel}</text>",
        (x0 + x1) / 2.0,
        SIZE - 15.0
    );
    let _ = writeln!(
        out,
        "<text x=\"15\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 15 {:.2})\">{ylabel}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for (label, x, y, anchor) in [
        (frame.lo.x, x0, y0 + 16.0, "start"),
        (frame.hi.x, x1, y0 + 16.0, "end"),
    ] {
        let _ = writeln!(out, "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\" font-size=\"11\">{label:.3}</text>");
    }
    for (label, y) in [(frame.lo.y, y0), (frame.hi.y, y1)] {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{y:.2}\" text-anchor=\"end\" font-size=\"11\">{label:.3}</text>",
            x0 - 4.0
        );
    }
}

/// Periodic copies of `polygon` that reach into the unit square.
fn copies(polygon: &[Vec2]) -> impl Iterator<Item = Vec<Vec2>> + '_ {
    let (mut lo, mut hi) = (Vec2::new(f64::MAX, f64::MAX), Vec2::new(f64::MIN, f64::MIN));
    for p in polygon {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (-1..=1)
        .flat_map(|i| (-1..=1).map(move |j| Vec2::new(f64::from(i), f64::from(j))))
        .filter(move |s| lo.x + s.x < 1.0 && hi.x + s.x > 0.0 && lo.y + s.y < 1.0 && hi.y + s.y > 0.0)
        .map(|s| polygon.iter().map(|p| Vec2::new(p.x + s.x, p.y + s.y)).collect())
}

/// The torus drawn on the unit square, with points in `marked` filled red.
pub fn tessellation_svg(tess: &Tessellation, layer: Layer, marked: &[usize]) -> String {
    let frame = Frame::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0));
    let mut out = open();
    let (x0, y0) = frame.map(Vec2::new(0.0, 1.0));
    let side = SIZE - 2.0 * MARGIN;
    let _ = writeln!(
        out,
        "<clipPath id=\"torus\"><rect x=\"{x0}\" y=\"{y0}\" width=\"{side}\" height=\"{side}\"/></clipPath>\n\
         <g clip-path=\"url(#torus)\" fill=\"none\" stroke=\"#3060a0\" stroke-width=\"0.8\">"
    );
    let polygons: Vec<Vec<Vec2>> = match layer {
        Layer::Delaunay => tess.triangles().iter().map(|t| t.corners.to_vec()).collect(),
        Layer::Voronoi => tess.cells().iter().map(|c| c.polygon.clone()).collect(),
    };
    for poly in &polygons {
        for copy in copies(poly) {
            let _ = writeln!(out, "<polygon points=\"{}\"/>", frame.points(copy));
        }
    }
    out.push_str("</g>\n");
    let mut is_marked = vec![false; tess.points().len()];
    for &i in marked {
        if let Some(m) = is_marked.get_mut(i) {
            *m = true;
        }
    }
    for (p, marked) in tess.points().iter().zip(is_marked) {
        let (x, y) = frame.map(p.to_vec2());
        let fill = if marked { "#c02020" } else { "black" };
        let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2\" fill=\"{fill}\"/>");
    }
    axes(&mut out, &frame, "x", "y");
    out.push_str("</svg>\n");
    out
}

/// Diverging blue-white-red colour for `t` in `[-1, 1]`.
fn diverging(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let fade = |c: f64| (255.0 - (255.0 - c) * t.abs()).round() as u8;
    let (r, g, b) = if t < 0.0 { (fade(40.0), fade(90.0), fade(200.0)) } else { (fade(200.0), fade(40.0), fade(40.0)) };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Residual field over its window, scaled symmetrically about zero.
pub fn heatmap_svg(grid: &ResidualGrid) -> String {
    let w = &grid.window;
    let frame = Frame::new(Vec2::new(w.lo[0], w.lo[1]), Vec2::new(w.hi[0], w.hi[1]));
    let scale = grid.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = open();
    for row in 0..grid.rows {
        for column in 0..grid.columns {
            let sq = grid.square(column, row);
            let (x0, y1) = frame.map(Vec2::new(sq.lo[0], sq.hi[1]));
            let (x1, y0) = frame.map(Vec2::new(sq.hi[0], sq.lo[1]));
            let t = if scale > 0.0 { grid.value(column, row) / scale } else { 0.0 };
            let _ = writeln!(
                out,
                "<rect x=\"{x0:.2}\" y=\"{y1:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                x1 - x0,
                y0 - y1,
                diverging(t)
            );
        }
    }
    axes(&mut out, &frame, "x", "y");
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"30\" text-anchor=\"middle\" font-size=\"13\">max |residual| = {scale:.4}</text>",
        SIZE / 2.0
    );
    out.push_str("</svg>\n");
    out
}

/// Observed against mean simulated quantiles, with the pointwise band.
pub fn qq_svg(env: &QqEnvelope) -> String {
    let all = env.observed.iter().chain(&env.mean).chain(&env.lo).chain(&env.hi);
    let (lo, hi) = all.fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let frame = Frame::new(Vec2::new(lo, lo), Vec2::new(hi, hi));
    let mut out = open();
    let band: Vec<Vec2> = env
        .mean
        .iter()
        .zip(&env.hi)
        .map(|(&m, &h)| Vec2::new(m, h))
        .chain(env.mean.iter().zip(&env.lo).rev().map(|(&m, &l)| Vec2::new(m, l)))
        .collect();
    let _ = writeln!(out, "<polygon points=\"{}\" fill=\"#d0d8e8\" stroke=\"none\"/>", frame.points(band));
    let _ = writeln!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>",
        frame.points([Vec2::new(lo, lo), Vec2::new(hi, hi)])
    );
    let _ = writeln!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>",
        frame.points(env.mean.iter().zip(&env.observed).map(|(&m, &o)| Vec2::new(m, o)))
    );
    axes(&mut out, &frame, "mean simulated quantile", "observed quantile");
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"30\" text-anchor=\"middle\" font-size=\"13\">outside band {:.3}, p = {:.3}</text>",
        SIZE / 2.0,
        env.observed_outside(),
        env.p_value()
    );
    out.push_str("</svg>\n");
    out
}

/// Population size at the end of each monitoring block.
pub fn trace_svg(trace: &[MonitoringRecord]) -> String {
    let totals = trace.iter().map(|r| r.total as f64);
    let lo = totals.clone().reduce(f64::min).unwrap_or(0.0);
    let hi = totals.reduce(f64::max).unwrap_or(1.0);
    let last = trace.last().map_or(1.0, |r| r.block as f64);
    let frame = Frame::new(Vec2::new(0.0, lo), Vec2::new(last, hi));
    let mut out = open();
    let _ = writeln!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"black\"/>",
        frame.points(trace.iter().map(|r| Vec2::new(r.block as f64, r.total as f64)))
    );
    axes(&mut out, &frame, "block", "points");
    out.push_str("</svg>\n");
    out
}
