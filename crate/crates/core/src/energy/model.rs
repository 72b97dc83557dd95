use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{CellStats, Kind, PointId, TriangleStats};

/// Which hardcore inequality failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    MinAngle,
    MinEdge,
    Circumradius,
    InnerDistance,
    OuterDistance,
    Shape,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::MinAngle => "smallest angle <= bound",
            Constraint::MinEdge => "shortest edge <= eps",
            Constraint::Circumradius => "circumradius >= alpha",
            Constraint::InnerDistance => "h_min <= eps",
            Constraint::OuterDistance => "h_max >= alpha",
            Constraint::Shape => "h_max^2 >= B * volume",
        })
    }
}

/// The tessellation item a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Item {
    Triangle([PointId; 3]),
    Cell(PointId),
    /// Reported by local evaluation, which does not track ids.
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub constraint: Constraint,
    pub item: Item,
    pub value: f64,
    pub bound: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} vs {})", self.constraint, self.value, self.bound)?;
        match self.item {
            Item::Triangle(ids) => write!(f, " in triangle {ids:?}"),
            Item::Cell(id) => write!(f, " in cell {id}"),
            Item::Local => Ok(()),
        }
    }
}

/// A hardcore verdict without the item, as returned by single-item checks.
pub type Breach = (Constraint, f64, f64);

/// Hardcore parameters. `None` means the constraint is inactive.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HardcoreParams {
    /// Forbid triangles whose smallest angle is at most this (radians).
    pub min_angle: Option<f64>,
    /// Forbid triangles with an edge, or cells with an inner distance, at most this.
    pub eps: Option<f64>,
    /// Forbid triangles with circumradius, or cells with outer distance, at least this.
    pub alpha: Option<f64>,
    /// Forbid cells with `h_max² >= shape · volume`.
    pub shape: Option<f64>,
}

impl HardcoreParams {
    pub fn inactive() -> Self {
        Self::default()
    }

    pub fn is_inactive(&self) -> bool {
        self.min_angle.is_none() && self.eps.is_none() && self.alpha.is_none() && self.shape.is_none()
    }

    /// Enlarges the admissible region by a relative `slack` on every active bound.
    pub fn relaxed(&self, slack: f64) -> Self {
        HardcoreParams {
            min_angle: self.min_angle.map(|a| a * (1.0 - slack)),
            eps: self.eps.map(|e| e * (1.0 - slack)),
            alpha: self.alpha.map(|a| a * (1.0 + slack)),
            shape: self.shape.map(|b| b * (1.0 + slack)),
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

impl fmt::Display for HardcoreParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "min_angle={} eps={} alpha={} shape={}",
            fmt_opt(self.min_angle),
            fmt_opt(self.eps),
            fmt_opt(self.alpha),
            fmt_opt(self.shape)
        )
    }
}

/// A Gibbs interaction on the Delaunay or Voronoi tessellation.
///
/// The energy of a configuration is `theta` times the sum of
/// [`triangle_statistic`](Self::triangle_statistic) over triangles (Delaunay)
/// or [`pair_statistic`](Self::pair_statistic) over neighbouring cell pairs
/// (Voronoi), or infinite if some item breaches the hardcore part. The
/// hardcore verdict never depends on `theta`.
pub trait Interaction: Send + Sync + fmt::Debug {
    fn kind(&self) -> Kind;

    fn triangle_breach(&self, _t: &TriangleStats) -> Option<Breach> {
        None
    }

    fn cell_breach(&self, _c: &CellStats) -> Option<Breach> {
        None
    }

    fn triangle_statistic(&self, _t: &TriangleStats) -> f64 {
        0.0
    }

    fn pair_statistic(&self, _a: &CellStats, _b: &CellStats) -> f64 {
        0.0
    }

    /// Whether the smooth part is identically zero.
    fn has_smooth_part(&self) -> bool;

    fn has_hardcore(&self) -> bool;

    fn smooth_triangle(&self, t: &TriangleStats, theta: f64) -> f64 {
        theta * self.triangle_statistic(t)
    }

    fn smooth_pair(&self, a: &CellStats, b: &CellStats, theta: f64) -> f64 {
        theta * self.pair_statistic(a, b)
    }

    /// A pair is forbidden when either of its cells is.
    fn pair_breach(&self, a: &CellStats, b: &CellStats) -> Option<Breach> {
        self.cell_breach(a).or_else(|| self.cell_breach(b))
    }
}

/// The built-in interactions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// No interaction at all.
    Poisson,
    /// Delaunay triangles with a lower bound on their smallest angle, no smooth part.
    MinAngle,
    /// Delaunay triangles bounded in edge length and circumradius, smooth part the perimeter.
    Perimeter,
    /// Voronoi cells bounded in shape, smooth part `(max/min volume - 1)^exponent` over neighbours.
    VolumeRatio { exponent: f64 },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Poisson => "poisson",
            ModelKind::MinAngle => "min-angle",
            ModelKind::Perimeter => "perimeter",
            ModelKind::VolumeRatio { .. } => "volume-ratio",
        }
    }
}

pub const DEFAULT_VOLUME_EXPONENT: f64 = 0.5;

/// A built-in interaction together with its hardcore parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    pub hardcore: HardcoreParams,
}

fn constraint_error(message: String) -> Error {
    Error::Config {
        location: "model.hardcore".into(),
        message,
    }
}

impl Model {
    /// Validates `hardcore` against the fields `kind` understands.
    pub fn new(kind: ModelKind, hardcore: HardcoreParams) -> Result<Self> {
        let h = hardcore;
        let unused = |name: &str, v: Option<f64>| -> Result<()> {
            match v {
                Some(_) => Err(constraint_error(format!(
                    "{} does not take a {name} bound",
                    kind.name()
                ))),
                None => Ok(()),
            }
        };
        let positive = |name: &str, v: Option<f64>| -> Result<()> {
            match v {
                Some(x) if !(x > 0.0 && x.is_finite()) => {
                    Err(constraint_error(format!("{name} must be positive and finite, got {x}")))
                }
                _ => Ok(()),
            }
        };
        match kind {
            ModelKind::Poisson => {
                unused("min_angle", h.min_angle)?;
                unused("eps", h.eps)?;
                unused("alpha", h.alpha)?;
                unused("shape", h.shape)?;
            }
            ModelKind::MinAngle => {
                unused("eps", h.eps)?;
                unused("alpha", h.alpha)?;
                unused("shape", h.shape)?;
                if let Some(a) = h.min_angle {
                    if !(0.0..PI / 3.0).contains(&a) {
                        return Err(constraint_error(format!(
                            "requires 0 <= min_angle < pi/3, got {a}"
                        )));
                    }
                }
            }
            ModelKind::Perimeter | ModelKind::VolumeRatio { .. } => {
                unused("min_angle", h.min_angle)?;
                positive("eps", h.eps)?;
                positive("alpha", h.alpha)?;
                if let (Some(e), Some(a)) = (h.eps, h.alpha) {
                    if e >= a {
                        return Err(constraint_error(format!(
                            "requires ε < α (got ε = {e}, α = {a})"
                        )));
                    }
                }
                if let ModelKind::VolumeRatio { exponent } = kind {
                    if !(exponent > 0.0 && exponent.is_finite()) {
                        return Err(constraint_error(format!(
                            "exponent must be positive, got {exponent}"
                        )));
                    }
                    if let Some(b) = h.shape {
                        let hexagon = 1.0 / (2.0 * 3f64.sqrt());
                        if !(b > hexagon) {
                            return Err(constraint_error(format!(
                                "requires B > 1/(2√3) ≈ {hexagon:.4}, got {b}"
                            )));
                        }
                    }
                } else {
                    unused("shape", h.shape)?;
                }
            }
        }
        Ok(Model { kind, hardcore })
    }

    pub fn poisson() -> Self {
        Model {
            kind: ModelKind::Poisson,
            hardcore: HardcoreParams::inactive(),
        }
    }

    /// Same interaction with different hardcore parameters (not re-validated).
    pub fn with_hardcore(&self, hardcore: HardcoreParams) -> Self {
        Model {
            kind: self.kind,
            hardcore,
        }
    }

    /// Whether the model takes a smooth parameter.
    pub fn has_theta(&self) -> bool {
        matches!(self.kind, ModelKind::Perimeter | ModelKind::VolumeRatio { .. })
    }
}

impl Interaction for Model {
    fn kind(&self) -> Kind {
        match self.kind {
            ModelKind::VolumeRatio { .. } => Kind::Voronoi,
            _ => Kind::Delaunay,
        }
    }

    fn triangle_breach(&self, t: &TriangleStats) -> Option<Breach> {
        let h = &self.hardcore;
        match self.kind {
            ModelKind::MinAngle => h
                .min_angle
                .filter(|&a| t.min_angle <= a)
                .map(|a| (Constraint::MinAngle, t.min_angle, a)),
            ModelKind::Perimeter => {
                if let Some(e) = h.eps.filter(|&e| t.min_edge <= e) {
                    return Some((Constraint::MinEdge, t.min_edge, e));
                }
                h.alpha
                    .filter(|&a| t.circumradius >= a)
                    .map(|a| (Constraint::Circumradius, t.circumradius, a))
            }
            _ => None,
        }
    }

    fn cell_breach(&self, c: &CellStats) -> Option<Breach> {
        if !matches!(self.kind, ModelKind::VolumeRatio { .. }) {
            return None;
        }
        let h = &self.hardcore;
        if let Some(e) = h.eps.filter(|&e| c.h_min <= e) {
            return Some((Constraint::InnerDistance, c.h_min, e));
        }
        if let Some(a) = h.alpha.filter(|&a| c.h_max >= a) {
            return Some((Constraint::OuterDistance, c.h_max, a));
        }
        let ratio = c.h_max * c.h_max / c.volume;
        h.shape
            .filter(|&b| c.h_max * c.h_max >= b * c.volume)
            .map(|b| (Constraint::Shape, ratio, b))
    }

    fn triangle_statistic(&self, t: &TriangleStats) -> f64 {
        match self.kind {
            ModelKind::Perimeter => t.perimeter,
            _ => 0.0,
        }
    }

    fn pair_statistic(&self, a: &CellStats, b: &CellStats) -> f64 {
        match self.kind {
            ModelKind::VolumeRatio { exponent } => {
                let (lo, hi) = if a.volume <= b.volume {
                    (a.volume, b.volume)
                } else {
                    (b.volume, a.volume)
                };
                (hi / lo - 1.0).max(0.0).powf(exponent)
            }
            _ => 0.0,
        }
    }

    fn has_smooth_part(&self) -> bool {
        self.has_theta()
    }

    fn has_hardcore(&self) -> bool {
        !self.hardcore.is_inactive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(h_min: f64, h_max: f64, volume: f64) -> CellStats {
        CellStats { h_min, h_max, volume }
    }

    #[test]
    fn parameter_validation() {
        let perimeter = |eps, alpha| {
            Model::new(
                ModelKind::Perimeter,
                HardcoreParams { eps, alpha, ..Default::default() },
            )
        };
        let err = perimeter(Some(0.1), Some(0.08)).unwrap_err();
        assert!(err.to_string().contains("requires ε < α"));
        assert!(perimeter(Some(0.01), Some(0.08)).is_ok());
        assert!(perimeter(None, Some(0.08)).is_ok());
        let vr = ModelKind::VolumeRatio { exponent: 0.5 };
        assert!(Model::new(vr, HardcoreParams { shape: Some(0.2), ..Default::default() }).is_err());
        assert!(Model::new(vr, HardcoreParams { shape: Some(0.625), alpha: Some(0.05), ..Default::default() }).is_ok());
        assert!(Model::new(ModelKind::MinAngle, HardcoreParams { min_angle: Some(1.1), ..Default::default() }).is_err());
        assert!(Model::new(ModelKind::Poisson, HardcoreParams { alpha: Some(0.1), ..Default::default() }).is_err());
    }

    #[test]
    fn pair_statistic_is_symmetric_and_zero_on_equal_volumes() {
        let m = Model::new(ModelKind::VolumeRatio { exponent: 0.5 }, HardcoreParams::default()).unwrap();
        let a = cell(0.1, 0.2, 0.03);
        let b = cell(0.1, 0.2, 0.05);
        assert_eq!(m.pair_statistic(&a, &b), m.pair_statistic(&b, &a));
        assert!((m.pair_statistic(&a, &b) - (0.05f64 / 0.03 - 1.0).sqrt()).abs() < 1e-15);
        assert_eq!(m.pair_statistic(&a, &a), 0.0);
        assert_eq!(m.smooth_pair(&a, &a, 3.0), 0.0);
    }

    #[test]
    fn inequality_conventions_are_inclusive() {
        let m = Model::new(
            ModelKind::Perimeter,
            HardcoreParams { eps: Some(0.01), alpha: Some(0.08), ..Default::default() },
        )
        .unwrap();
        let t = |min_edge, circumradius| TriangleStats { min_edge, circumradius, min_angle: 0.5, perimeter: 0.1 };
        assert!(m.triangle_breach(&t(0.01, 0.05)).is_some());
        assert!(m.triangle_breach(&t(0.02, 0.08)).is_some());
        assert!(m.triangle_breach(&t(0.02, 0.0799)).is_none());
        let v = Model::new(
            ModelKind::VolumeRatio { exponent: 0.5 },
            HardcoreParams { shape: Some(0.5), ..Default::default() },
        )
        .unwrap();
        assert_eq!(v.cell_breach(&cell(0.25, 0.5, 0.5)).map(|b| b.0), Some(Constraint::Shape));
        assert_eq!(v.cell_breach(&cell(0.25, 0.5, 0.5000001)), None);
    }
}
