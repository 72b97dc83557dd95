use std::fmt;

use super::model::{Interaction, Item, Violation};
use crate::error::Result;
use crate::geometry::local::{self, Change, Diff};
use crate::geometry::{Kind, Point, PointConfiguration, Tessellation};

/// Energy of a configuration: finite, or infinite because of a hardcore breach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyValue {
    Finite(f64),
    Infinite(Violation),
}

impl EnergyValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, EnergyValue::Finite(_))
    }

    /// The value, `+inf` when forbidden.
    pub fn value(&self) -> f64 {
        match self {
            EnergyValue::Finite(v) => *v,
            EnergyValue::Infinite(_) => f64::INFINITY,
        }
    }
}

impl fmt::Display for EnergyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyValue::Finite(v) => write!(f, "{v}"),
            EnergyValue::Infinite(v) => write!(f, "inf [{v}]"),
        }
    }
}

/// The parameter-free part of an energy: the energy is `theta` times the
/// statistic whenever the configuration is allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    Allowed(f64),
    Forbidden(Violation),
}

impl Statistic {
    pub fn is_allowed(&self) -> bool {
        matches!(self, Statistic::Allowed(_))
    }

    pub fn energy(&self, theta: f64) -> EnergyValue {
        match *self {
            Statistic::Allowed(s) => EnergyValue::Finite(theta * s),
            Statistic::Forbidden(v) => EnergyValue::Infinite(v),
        }
    }
}

fn needs_geometry(model: &dyn Interaction) -> bool {
    model.has_smooth_part() || model.has_hardcore()
}

/// All hardcore breaches, triangles then cells, each in tessellation order.
pub fn violations(tess: &Tessellation, model: &dyn Interaction) -> Vec<Violation> {
    let mut out = Vec::new();
    if !model.has_hardcore() {
        return out;
    }
    match model.kind() {
        Kind::Delaunay => {
            for t in tess.triangles() {
                if let Some((constraint, value, bound)) = model.triangle_breach(&t.stats) {
                    out.push(Violation {
                        constraint,
                        item: Item::Triangle(t.ids),
                        value,
                        bound,
                    });
                }
            }
        }
        Kind::Voronoi => {
            for c in tess.cells() {
                if let Some((constraint, value, bound)) = model.cell_breach(&c.stats) {
                    out.push(Violation {
                        constraint,
                        item: Item::Cell(c.id),
                        value,
                        bound,
                    });
                }
            }
        }
    }
    out
}

/// The breach with the smallest item ids, if any.
pub fn first_violation(tess: &Tessellation, model: &dyn Interaction) -> Option<Violation> {
    if !model.has_hardcore() {
        return None;
    }
    let key = |v: &Violation| match v.item {
        Item::Triangle(mut ids) => {
            ids.sort_unstable();
            ids
        }
        Item::Cell(id) => [id, 0, 0],
        Item::Local => [u64::MAX; 3],
    };
    violations(tess, model).into_iter().min_by_key(key)
}

/// Sum of the smooth statistic over the periodic tessellation, ignoring hardcore.
pub fn statistic_sum(tess: &Tessellation, model: &dyn Interaction) -> f64 {
    if !model.has_smooth_part() {
        return 0.0;
    }
    match model.kind() {
        Kind::Delaunay => tess
            .triangles()
            .iter()
            .map(|t| model.triangle_statistic(&t.stats))
            .sum(),
        Kind::Voronoi => {
            let cells = tess.cells();
            tess.voronoi_neighbours()
                .map(|(a, b)| model.pair_statistic(&cells[a].stats, &cells[b].stats))
                .sum()
        }
    }
}

pub fn periodic_statistic(tess: &Tessellation, model: &dyn Interaction) -> Statistic {
    match first_violation(tess, model) {
        Some(v) => Statistic::Forbidden(v),
        None => Statistic::Allowed(statistic_sum(tess, model)),
    }
}

/// Statistic of a whole configuration; the null interaction needs no geometry.
pub fn configuration_statistic(
    config: &PointConfiguration,
    model: &dyn Interaction,
) -> Result<Statistic> {
    if !needs_geometry(model) {
        return Ok(Statistic::Allowed(0.0));
    }
    Ok(periodic_statistic(&Tessellation::build(config)?, model))
}

pub fn periodic_energy(
    config: &PointConfiguration,
    model: &dyn Interaction,
    theta: f64,
) -> Result<EnergyValue> {
    Ok(configuration_statistic(config, model)?.energy(theta))
}

fn local_violation((constraint, value, bound): super::model::Breach) -> Violation {
    Violation {
        constraint,
        item: Item::Local,
        value,
        bound,
    }
}

/// Change of the statistic caused by `change`, or the breach it creates.
///
/// The configuration is assumed allowed; only items created by the change
/// are checked against the hardcore part.
pub fn change_statistic(
    config: &PointConfiguration,
    change: Change,
    model: &dyn Interaction,
) -> Result<Statistic> {
    if !needs_geometry(model) {
        return Ok(Statistic::Allowed(0.0));
    }
    let kind = model.kind();
    let r = local::default_radius(kind, config.len());
    match local::diff(config, change, kind, r)? {
        Diff::Local(d) => match kind {
            Kind::Delaunay => {
                if let Some(b) = d.added_triangles.iter().find_map(|t| model.triangle_breach(t)) {
                    return Ok(Statistic::Forbidden(local_violation(b)));
                }
                let added: f64 = d.added_triangles.iter().map(|t| model.triangle_statistic(t)).sum();
                let removed: f64 = d.removed_triangles.iter().map(|t| model.triangle_statistic(t)).sum();
                Ok(Statistic::Allowed(added - removed))
            }
            Kind::Voronoi => {
                if let Some(b) = d.changed_cells.iter().find_map(|c| model.cell_breach(c)) {
                    return Ok(Statistic::Forbidden(local_violation(b)));
                }
                let sum = |pairs: &[[crate::geometry::CellStats; 2]]| -> f64 {
                    pairs.iter().map(|p| model.pair_statistic(&p[0], &p[1])).sum()
                };
                Ok(Statistic::Allowed(sum(&d.pairs_after) - sum(&d.pairs_before)))
            }
        },
        Diff::Global { before, after } => Ok(match first_violation(&after, model) {
            Some(v) => Statistic::Forbidden(v),
            None => Statistic::Allowed(statistic_sum(&after, model) - statistic_sum(&before, model)),
        }),
    }
}

/// Local energy of inserting `x`: `E(γ + x) - E(γ)`.
pub fn local_energy(
    config: &PointConfiguration,
    x: Point,
    model: &dyn Interaction,
    theta: f64,
) -> Result<EnergyValue> {
    Ok(change_statistic(config, Change::Birth(x), model)?.energy(theta))
}

/// Local energy of the point at `index` in the rest of the configuration:
/// `E(γ) - E(γ - x)`, infinite when `γ - x` is forbidden.
pub fn local_energy_of_member(
    config: &PointConfiguration,
    index: usize,
    model: &dyn Interaction,
    theta: f64,
) -> Result<EnergyValue> {
    Ok(match change_statistic(config, Change::Death(index), model)? {
        Statistic::Allowed(d) => EnergyValue::Finite(-theta * d),
        Statistic::Forbidden(v) => EnergyValue::Infinite(v),
    })
}

/// Whether deleting the point at `index` leaves an allowed configuration.
pub fn is_removable(config: &PointConfiguration, index: usize, model: &dyn Interaction) -> Result<bool> {
    if !model.has_hardcore() {
        return Ok(true);
    }
    Ok(change_statistic(config, Change::Death(index), model)?.is_allowed())
}

/// Indices of all removable points.
pub fn removable_set(config: &PointConfiguration, model: &dyn Interaction) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for i in 0..config.len() {
        if is_removable(config, i, model)? {
            out.push(i);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{Constraint, HardcoreParams, Model, ModelKind};
    use crate::geometry::triangular_lattice;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn perimeter_model(eps: Option<f64>, alpha: Option<f64>) -> Model {
        Model::new(ModelKind::Perimeter, HardcoreParams { eps, alpha, ..Default::default() }).unwrap()
    }

    fn volume_model(eps: Option<f64>, alpha: Option<f64>, shape: Option<f64>) -> Model {
        Model::new(
            ModelKind::VolumeRatio { exponent: 0.5 },
            HardcoreParams { eps, alpha, shape, ..Default::default() },
        )
        .unwrap()
    }

    fn jittered_lattice(k: usize, amp: f64, rng: &mut ChaCha8Rng) -> PointConfiguration {
        PointConfiguration::from_points(triangular_lattice(k).into_iter().map(|p| {
            Point::new(p.x() + rng.random_range(-amp..amp), p.y() + rng.random_range(-amp..amp))
        }))
        .unwrap()
    }

    #[test]
    fn circumradius_breach_names_the_triangle() {
        // 6 columns and 8 rows: isoceles triangles with circumradius about 0.09.
        let config = PointConfiguration::from_points(triangular_lattice(6)).unwrap();
        let e = periodic_energy(&config, &perimeter_model(None, Some(0.08)), 2.0).unwrap();
        let EnergyValue::Infinite(v) = e else { panic!("expected a breach") };
        assert_eq!(v.constraint, Constraint::Circumradius);
        assert!(matches!(v.item, Item::Triangle(_)));
        assert!((v.value - 0.0903).abs() < 1e-3);
    }

    #[test]
    fn equal_volumes_have_zero_pair_energy() {
        let config = PointConfiguration::from_points([
            Point::new(0.25, 0.25),
            Point::new(0.75, 0.25),
            Point::new(0.25, 0.75),
            Point::new(0.75, 0.75),
        ])
        .unwrap();
        let e = periodic_energy(&config, &volume_model(None, None, None), 5.0).unwrap();
        assert!(e.value().abs() < 1e-6);
    }

    #[test]
    fn lattice_energy_is_total_perimeter() {
        let pts = triangular_lattice(10);
        let n = pts.len() as f64;
        let config = PointConfiguration::from_points(pts).unwrap();
        let e = periodic_energy(&config, &perimeter_model(None, Some(0.08)), 1.0).unwrap();
        // Base 1/10 and two sides sqrt(0.05^2 + (1/12)^2), for 2n triangles.
        let per = 0.1 + 2.0 * (0.05f64.powi(2) + (1.0 / 12.0f64).powi(2)).sqrt();
        assert!((e.value() - 2.0 * n * per).abs() < 1e-9);
    }

    #[test]
    fn null_interaction_has_zero_local_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let config = jittered_lattice(8, 0.01, &mut rng);
        let m = Model::poisson();
        for _ in 0..20 {
            let x = Point::new(rng.random(), rng.random());
            assert_eq!(local_energy(&config, x, &m, 1.0).unwrap(), EnergyValue::Finite(0.0));
        }
        assert_eq!(removable_set(&config, &m).unwrap().len(), config.len());
    }

    #[test]
    fn short_edge_insertion_is_forbidden() {
        let config = PointConfiguration::from_points(triangular_lattice(10)).unwrap();
        let m = perimeter_model(Some(0.02), Some(0.08));
        let p = config.point(17);
        let x = Point::new(p.x() + 0.01, p.y());
        let h = local_energy(&config, x, &m, 1.0).unwrap();
        assert!(!h.is_finite());
    }

    fn check_additivity(model: &Model, config: &PointConfiguration, rng: &mut ChaCha8Rng, theta: f64) {
        let before = periodic_energy(config, model, theta).unwrap();
        assert!(before.is_finite(), "start must be allowed");
        let e0 = before.value();
        for trial in 0..60 {
            let change = if trial % 2 == 0 {
                Change::Birth(Point::new(rng.random(), rng.random()))
            } else {
                Change::Death(rng.random_range(0..config.len()))
            };
            let (pts, ids) = local::apply(config, change);
            let after_tess = Tessellation::from_points(&pts, &ids).unwrap();
            let global = periodic_statistic(&after_tess, model).energy(theta);
            let local = change_statistic(config, change, model).unwrap().energy(theta);
            assert_eq!(global.is_finite(), local.is_finite(), "trial {trial}");
            if let (EnergyValue::Finite(g), EnergyValue::Finite(l)) = (global, local) {
                assert!(((g - e0) - l).abs() <= 1e-9 * (1.0 + e0.abs()), "trial {trial}: {} vs {l}", g - e0);
            }
        }
    }

    #[test]
    fn local_energy_matches_global_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let config = jittered_lattice(14, 0.01, &mut rng);
        check_additivity(&perimeter_model(Some(0.01), Some(0.07)), &config, &mut rng, -5.0);
        check_additivity(&perimeter_model(None, None), &config, &mut rng, 2.0);
        check_additivity(&volume_model(Some(0.005), Some(0.06), Some(0.625)), &config, &mut rng, 0.5);
        let angle = Model::new(ModelKind::MinAngle, HardcoreParams { min_angle: Some(0.6), ..Default::default() }).unwrap();
        check_additivity(&angle, &config, &mut rng, 0.0);
    }

    #[test]
    fn removability_matches_full_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let config = jittered_lattice(12, 0.02, &mut rng);
        let model = perimeter_model(None, Some(0.075));
        assert!(periodic_energy(&config, &model, 1.0).unwrap().is_finite());
        let removable = removable_set(&config, &model).unwrap();
        assert!(!removable.is_empty() && removable.len() < config.len());
        for i in 0..config.len() {
            let (pts, ids) = local::apply(&config, Change::Death(i));
            let t = Tessellation::from_points(&pts, &ids).unwrap();
            assert_eq!(first_violation(&t, &model).is_none(), removable.contains(&i));
        }
    }

    #[test]
    fn support_does_not_depend_on_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let config = jittered_lattice(9, 0.03, &mut rng);
            for model in [perimeter_model(Some(0.02), Some(0.075)), volume_model(Some(0.02), Some(0.07), Some(0.5))] {
                let finite = periodic_energy(&config, &model, 0.0).unwrap().is_finite();
                for _ in 0..50 {
                    let theta = rng.random_range(-20.0..20.0);
                    assert_eq!(periodic_energy(&config, &model, theta).unwrap().is_finite(), finite);
                }
            }
        }
    }

    #[test]
    fn looser_bounds_keep_allowed_configurations_allowed() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let config = jittered_lattice(9, 0.03, &mut rng);
            let tess = Tessellation::build(&config).unwrap();
            for _ in 0..20 {
                let e = rng.random_range(0.005..0.03);
                let a = rng.random_range(0.06..0.1);
                let b = rng.random_range(0.3..0.6);
                let (e2, a2, b2) = (e * rng.random::<f64>(), a * (1.0 + rng.random::<f64>()), b * (1.0 + rng.random::<f64>()));
                for (tight, loose) in [
                    (perimeter_model(Some(e), Some(a)), perimeter_model(Some(e2), Some(a2))),
                    (volume_model(Some(e), Some(a), Some(b)), volume_model(Some(e2), Some(a2), Some(b2))),
                ] {
                    if first_violation(&tess, &tight).is_none() {
                        assert!(first_violation(&tess, &loose).is_none());
                    }
                }
            }
        }
    }
}
