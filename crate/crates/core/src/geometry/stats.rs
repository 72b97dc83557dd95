//! Shape statistics of Delaunay triangles and Voronoi cells.

use super::predicates::circumcircle;
use super::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleStats {
    pub min_edge: f64,
    pub circumradius: f64,
    /// Smallest interior angle in radians.
    pub min_angle: f64,
    pub perimeter: f64,
}

impl TriangleStats {
    pub fn from_corners([a, b, c]: [Vec2; 3]) -> Self {
        let ab = a.dist(b);
        let bc = b.dist(c);
        let ca = c.dist(a);
        let angle = |p: Vec2, q: Vec2, r: Vec2| {
            let (u, v) = (q - p, r - p);
            u.cross(v).abs().atan2(u.dot(v))
        };
        let min_angle = angle(a, b, c).min(angle(b, c, a)).min(angle(c, a, b));
        TriangleStats {
            min_edge: ab.min(bc).min(ca),
            circumradius: circumcircle(a, b, c).1,
            min_angle,
            perimeter: ab + bc + ca,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    /// Smallest distance from the nucleus to an edge of the cell.
    pub h_min: f64,
    /// Largest distance from the nucleus to an edge of the cell.
    pub h_max: f64,
    pub volume: f64,
}

impl CellStats {
    /// `polygon` is the counter-clockwise vertex list around `center`.
    ///
    /// Edges of negligible length (coincident Voronoi vertices from
    /// cocircular nuclei) are ignored.
    pub fn from_polygon(center: Vec2, polygon: &[Vec2]) -> Self {
        let n = polygon.len();
        let edge = |i: usize| (polygon[i], polygon[(i + 1) % n]);
        let longest = (0..n).map(|i| edge(i).0.dist(edge(i).1)).fold(0.0, f64::max);
        let mut h_min = f64::INFINITY;
        let mut h_max: f64 = 0.0;
        for i in 0..n {
            let (a, b) = edge(i);
            if a.dist(b) <= 1e-10 * longest {
                continue;
            }
            let h = segment_distance(center, a, b);
            h_min = h_min.min(h);
            h_max = h_max.max(h);
        }
        CellStats {
            h_min,
            h_max,
            volume: polygon_area(polygon),
        }
    }
}

pub fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm2();
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Signed shoelace area (positive for counter-clockwise polygons).
pub fn polygon_area(polygon: &[Vec2]) -> f64 {
    let n = polygon.len();
    0.5 * (0..n)
        .map(|i| polygon[i].cross(polygon[(i + 1) % n]))
        .sum::<f64>()
}

/// Area-weighted centroid of a simple polygon.
pub fn polygon_centroid(polygon: &[Vec2]) -> Vec2 {
    let n = polygon.len();
    let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
    // Shift to the first vertex for accuracy.
    let o = polygon[0];
    for i in 0..n {
        let p = polygon[i] - o;
        let q = polygon[(i + 1) % n] - o;
        let w = p.cross(q);
        a2 += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    if a2 == 0.0 {
        let s = polygon.iter().fold(Vec2::default(), |acc, &p| acc + p);
        return s * (1.0 / n as f64);
    }
    o + Vec2::new(cx / (3.0 * a2), cy / (3.0 * a2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn equilateral_identities() {
        let d = 0.37;
        let t = TriangleStats::from_corners([
            Vec2::new(0.0, 0.0),
            Vec2::new(d, 0.0),
            Vec2::new(d / 2.0, d * 3f64.sqrt() / 2.0),
        ]);
        assert!((t.min_edge - d).abs() < 1e-14);
        assert!((t.circumradius - d / 3f64.sqrt()).abs() < 1e-14);
        assert!((t.min_angle - PI / 3.0).abs() < 1e-14);
        assert!((t.perimeter - 3.0 * d).abs() < 1e-14);
    }

    #[test]
    fn square_cell() {
        let c = Vec2::new(0.25, 0.25);
        let poly = [
            Vec2::new(0.0, 0.0),
            Vec2::new(0.5, 0.0),
            Vec2::new(0.5, 0.5),
            Vec2::new(0.0, 0.5),
        ];
        let s = CellStats::from_polygon(c, &poly);
        assert!((s.h_min - 0.25).abs() < 1e-15);
        assert!((s.h_max - 0.25).abs() < 1e-15);
        assert!((s.volume - 0.25).abs() < 1e-15);
        assert!((s.h_max * s.h_max / s.volume - 0.25).abs() < 1e-14);
    }

    #[test]
    fn regular_hexagon_shape_ratio() {
        let poly: Vec<Vec2> = (0..6)
            .map(|k| {
                let a = PI / 3.0 * k as f64;
                Vec2::new(0.1 * a.cos(), 0.1 * a.sin())
            })
            .collect();
        let s = CellStats::from_polygon(Vec2::default(), &poly);
        let ratio = s.h_max * s.h_max / s.volume;
        assert!((ratio - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn centroid_of_rectangle() {
        let poly = [
            Vec2::new(1.0, 1.0),
            Vec2::new(3.0, 1.0),
            Vec2::new(3.0, 2.0),
            Vec2::new(1.0, 2.0),
        ];
        let c = polygon_centroid(&poly);
        assert!((c.x - 2.0).abs() < 1e-14 && (c.y - 1.5).abs() < 1e-14);
    }
}
