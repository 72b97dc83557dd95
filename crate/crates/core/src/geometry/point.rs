use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Stable identifier of a point within a [`PointConfiguration`](super::PointConfiguration).
pub type PointId = u64;

/// A plain planar vector, used for unwrapped (not torus-reduced) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// A point of the unit torus; both coordinates lie in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    x: f64,
    y: f64,
}

/// Coordinates are snapped to multiples of this quantum so that periodic
/// copies `p + k` (|k| <= 2) are exact in floating point.
pub const QUANTUM: f64 = 1.0 / (1u64 << 50) as f64;

/// Reduces a coordinate into `[0, 1)` and snaps it to the [`QUANTUM`] grid.
pub fn wrap_coord(v: f64) -> f64 {
    let r = v - v.floor();
    let q = (r / QUANTUM).round() * QUANTUM;
    if q >= 1.0 {
        0.0
    } else {
        q
    }
}

/// Reduces a finite planar point onto the unit torus.
pub fn wrap_to_torus(x: f64, y: f64) -> Result<Point> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::InvalidInput(format!(
            "non-finite coordinate ({x}, {y})"
        )));
    }
    Ok(Point {
        x: wrap_coord(x),
        y: wrap_coord(y),
    })
}

impl Point {
    /// Builds a torus point, reducing the coordinates modulo 1.
    ///
    /// Panics on non-finite input; use [`wrap_to_torus`] for fallible construction.
    pub fn new(x: f64, y: f64) -> Self {
        wrap_to_torus(x, y).expect("finite coordinates")
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn to_vec2(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Shortest displacement from `self` to `other` on the torus, each component in `[-0.5, 0.5)`.
    pub fn torus_delta(self, other: Point) -> Vec2 {
        Vec2::new(min_image(other.x - self.x), min_image(other.y - self.y))
    }

    pub fn torus_dist(self, other: Point) -> f64 {
        self.torus_delta(other).norm()
    }
}

impl From<Point> for Vec2 {
    fn from(p: Point) -> Vec2 {
        p.to_vec2()
    }
}

/// Minimum-image reduction of a coordinate difference into `[-0.5, 0.5)`.
pub fn min_image(d: f64) -> f64 {
    d - (d + 0.5).floor()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_examples() {
        let p = wrap_to_torus(0.3, 0.7).unwrap();
        assert!((p.x() - 0.3).abs() < 1e-15 && (p.y() - 0.7).abs() < 1e-15);
        let p = wrap_to_torus(1.2, -0.4).unwrap();
        assert!((p.x() - 0.2).abs() < 1e-15 && (p.y() - 0.6).abs() < 1e-15);
        let p = wrap_to_torus(2.0, 1.0).unwrap();
        assert_eq!((p.x(), p.y()), (0.0, 0.0));
    }

    #[test]
    fn wrap_rejects_non_finite() {
        assert!(wrap_to_torus(f64::NAN, 0.0).is_err());
        assert!(wrap_to_torus(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn wrap_tiny_negative_stays_in_range() {
        let p = wrap_to_torus(-1e-18, 0.0).unwrap();
        assert!(p.x() >= 0.0 && p.x() < 1.0);
    }

    #[test]
    fn copies_are_exact() {
        let p = Point::new(0.123456789012345, 0.987654321098765);
        for k in [-2.0, -1.0, 1.0, 2.0] {
            assert_eq!((p.x() + k) - k, p.x());
            assert_eq!((p.y() + k) - k, p.y());
        }
    }

    #[test]
    fn min_image_delta() {
        let a = Point::new(0.95, 0.5);
        let b = Point::new(0.05, 0.5);
        let d = a.torus_delta(b);
        assert!((d.x - 0.1).abs() < 1e-12);
        assert!((a.torus_dist(b) - 0.1).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn wrap_is_idempotent(x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let p = wrap_to_torus(x, y).unwrap();
            proptest::prop_assert!((0.0..1.0).contains(&p.x()) && (0.0..1.0).contains(&p.y()));
            let q = wrap_to_torus(p.x(), p.y()).unwrap();
            proptest::prop_assert_eq!(p, q);
        }
    }
}
