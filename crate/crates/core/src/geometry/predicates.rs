//! Exact orientation and in-circle tests.
//!
//! Signs come from adaptive-precision arithmetic (`robust`). Exact
//! cocircularity is resolved by a symbolic perturbation of the lifted
//! coordinate `|p|^2 + delta(rank)`, where smaller ranks receive larger
//! perturbations. Since copies of a periodic point share a rank, the
//! perturbation is itself periodic and the resulting triangulation stays a
//! valid tessellation of the torus.

use robust::Coord;

use super::Vec2;

fn coord(v: Vec2) -> Coord<f64> {
    Coord { x: v.x, y: v.y }
}

/// Positive when `a, b, c` turn counter-clockwise.
pub fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    robust::orient2d(coord(a), coord(b), coord(c))
}

/// Positive when `d` lies strictly inside the circle through the
/// counter-clockwise triangle `a, b, c`.
pub fn incircle_raw(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    robust::incircle(coord(a), coord(b), coord(c), coord(d))
}

/// Outcome of a perturbed in-circle query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InCircle {
    Inside,
    Outside,
    /// Exactly cocircular and the perturbation could not separate the points
    /// (only possible when ranks repeat, e.g. on tiny periodic configurations).
    Degenerate,
}

/// Perturbed in-circle test. `a, b, c` must be counter-clockwise.
pub fn incircle(
    (a, ra): (Vec2, u64),
    (b, rb): (Vec2, u64),
    (c, rc): (Vec2, u64),
    (d, rd): (Vec2, u64),
) -> InCircle {
    let det = incircle_raw(a, b, c, d);
    if det > 0.0 {
        return InCircle::Inside;
    }
    if det < 0.0 {
        return InCircle::Outside;
    }
    // Partial derivatives of the lifted determinant with respect to each
    // point's lifted coordinate.
    let mut terms = [
        (ra, orient(d, b, c)),
        (rb, orient(a, d, c)),
        (rc, orient(a, b, d)),
        (rd, -orient(a, b, c)),
    ];
    terms.sort_by_key(|t| t.0);
    let mut i = 0;
    while i < 4 {
        let rank = terms[i].0;
        let mut sum = 0.0;
        let mut scale = 0.0f64;
        let mut j = i;
        while j < 4 && terms[j].0 == rank {
            sum += terms[j].1;
            scale = scale.max(terms[j].1.abs());
            j += 1;
        }
        if j - i == 1 {
            if sum > 0.0 {
                return InCircle::Inside;
            }
            if sum < 0.0 {
                return InCircle::Outside;
            }
        } else if sum.abs() > 1e-12 * scale {
            return if sum > 0.0 {
                InCircle::Inside
            } else {
                InCircle::Outside
            };
        }
        i = j;
    }
    InCircle::Degenerate
}

/// Circumcenter and circumradius of a non-degenerate triangle.
pub fn circumcircle(a: Vec2, b: Vec2, c: Vec2) -> (Vec2, f64) {
    let b = b - a;
    let c = c - a;
    let d = 2.0 * b.cross(c);
    let b2 = b.norm2();
    let c2 = c.norm2();
    let ux = (c.y * b2 - b.y * c2) / d;
    let uy = (b.x * c2 - c.x * b2) / d;
    let u = Vec2::new(ux, uy);
    (a + u, u.norm())
}
