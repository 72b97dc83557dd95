//! Allowed starting configurations.

use crate::energy::{configuration_statistic, Interaction};
use crate::error::{Error, Result};
use crate::geometry::delaunay::PlanarDelaunay;
use crate::geometry::predicates::circumcircle;
use crate::geometry::{lattice_rows, triangular_lattice, CellStats, Kind, PointConfiguration, TriangleStats, Vec2};

pub const MIN_COLUMNS: usize = 2;
pub const MAX_COLUMNS: usize = 2000;

/// Whether every triangle and cell of the `columns`-lattice passes the
/// hardcore part. All lattice points are equivalent, so one star suffices.
fn lattice_admissible(model: &dyn Interaction, columns: usize) -> bool {
    let k = columns as f64;
    let m = lattice_rows(columns) as f64;
    let mut pts = Vec::new();
    for j in -3i32..=3 {
        for i in -3i32..=3 {
            let shift = if j.rem_euclid(2) == 1 { 0.5 } else { 0.0 };
            let rank = ((j + 3) * 7 + (i + 3)) as u64;
            pts.push((Vec2::new((f64::from(i) + shift) / k, f64::from(j) / m), rank));
        }
    }
    let Ok((dt, handles)) = PlanarDelaunay::build(&pts) else {
        return false;
    };
    let center = handles[3 * 7 + 3];
    let star = dt.star(center);
    let o = dt.position(center);
    let mut poly = Vec::with_capacity(star.len());
    for &t in &star {
        let c = dt.corners(t);
        if model.triangle_breach(&TriangleStats::from_corners(c)).is_some() {
            return false;
        }
        poly.push(circumcircle(c[0] - o, c[1] - o, c[2] - o).0);
    }
    match model.kind() {
        Kind::Delaunay => true,
        Kind::Voronoi => model
            .cell_breach(&CellStats::from_polygon(Vec2::default(), &poly))
            .is_none(),
    }
}

/// Column count whose lattice has about `target` points.
pub fn columns_for(target: f64) -> usize {
    ((target.max(4.0) * 3f64.sqrt() / 2.0).sqrt().round() as usize).clamp(MIN_COLUMNS, MAX_COLUMNS)
}

/// A near-equilateral lattice with about `target_count` points that the
/// model allows. Column counts are tried outward from the best match.
pub fn initial_lattice(model: &dyn Interaction, target_count: f64) -> Result<PointConfiguration> {
    let k0 = columns_for(target_count);
    let span = MAX_COLUMNS - MIN_COLUMNS;
    for d in 0..=span {
        for k in [k0.checked_sub(d), k0.checked_add(d)] {
            let Some(k) = k.filter(|k| (MIN_COLUMNS..=MAX_COLUMNS).contains(k)) else {
                continue;
            };
            if d == 0 && k != k0 {
                continue;
            }
            if !lattice_admissible(model, k) {
                continue;
            }
            let config = PointConfiguration::from_points(triangular_lattice(k))?;
            if configuration_statistic(&config, model)?.is_allowed() {
                return Ok(config);
            }
        }
    }
    Err(Error::NoAdmissibleStart {
        k_min: MIN_COLUMNS,
        k_max: MAX_COLUMNS,
    })
}
