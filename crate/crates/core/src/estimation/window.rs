//! Rectangular observation windows.

use rand::Rng;

use crate::energy::{Interaction, Model};
use crate::error::{Error, Result};
use crate::geometry::local::default_radius;
use crate::geometry::{Kind, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        let inside = |v: f64| (0.0..=1.0).contains(&v);
        if !(lo.iter().chain(&hi).all(|&v| inside(v)) && lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(Error::InvalidInput(format!("bad window {lo:?}..{hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: [0.0; 2], hi: [1.0; 2] }
    }

    pub fn width(&self) -> f64 {
        self.hi[0] - self.lo[0]
    }

    pub fn height(&self) -> f64 {
        self.hi[1] - self.lo[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Half-open containment, so adjacent rectangles do not share points.
    pub fn contains(&self, p: Point) -> bool {
        (self.lo[0]..self.hi[0]).contains(&p.x()) && (self.lo[1]..self.hi[1]).contains(&p.y())
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.lo[0] <= other.lo[0] && self.lo[1] <= other.lo[1] && other.hi[0] <= self.hi[0] && other.hi[1] <= self.hi[1]
    }

    /// The rectangle shrunk by `width` on every side, if anything is left.
    pub fn shrunk(&self, width: f64) -> Option<Rect> {
        let lo = [self.lo[0] + width, self.lo[1] + width];
        let hi = [self.hi[0] - width, self.hi[1] - width];
        (lo[0] < hi[0] && lo[1] < hi[1]).then_some(Rect { lo, hi })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Point {
        Point::new(
            self.lo[0] + self.width() * rng.random::<f64>(),
            self.lo[1] + self.height() * rng.random::<f64>(),
        )
    }
}

/// Data window and the eroded sub-window used for pseudo-likelihood sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationWindow {
    pub outer: Rect,
    pub inner: Rect,
    pub erosion: f64,
}

impl ObservationWindow {
    pub fn new(outer: Rect, erosion: f64) -> Result<Self> {
        if !(erosion >= 0.0) {
            return Err(Error::InvalidInput(format!("erosion must be non-negative, got {erosion}")));
        }
        let inner = outer
            .shrunk(erosion)
            .ok_or_else(|| Error::Inestimable(format!("erosion {erosion} leaves an empty window")))?;
        Ok(Self { outer, inner, erosion })
    }

    pub fn whole() -> Self {
        Self {
            outer: Rect::unit(),
            inner: Rect::unit(),
            erosion: 0.0,
        }
    }
}

/// Erosion matching the reach of local energies: twice the circumradius bound
/// for triangle models, four times the outer-distance bound for cell models,
/// the local patch radius when no such bound is active.
pub fn erosion_width(model: &Model, n: usize) -> f64 {
    if !model.has_hardcore() && !model.has_smooth_part() {
        return 0.0;
    }
    match (model.kind(), model.hardcore.alpha) {
        (Kind::Delaunay, Some(a)) => 2.0 * a,
        (Kind::Voronoi, Some(a)) => 4.0 * a,
        (kind, None) => default_radius(kind, n),
    }
}
