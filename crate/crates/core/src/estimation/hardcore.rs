//! Extremal estimators of hardcore parameters.

use crate::energy::{HardcoreParams, Model, ModelKind};
use crate::error::{Error, Result};
use crate::geometry::Tessellation;

use super::window::Rect;

/// Relative outward shift applied to fitted bounds. The bounds are inclusive,
/// so the exact extremes would forbid the very item they came from.
pub const FIT_SLACK: f64 = 1e-9;

fn fold(values: impl Iterator<Item = f64>, pick: fn(f64, f64) -> f64) -> Option<f64> {
    values.reduce(pick)
}

/// Extremes of the constrained statistics over the items inside `window`,
/// for the bounds that are active in `template`. The result is exactly the
/// observed extremes; see [`fit_hardcore`] for the usable version.
pub fn observed_extremes(tess: &Tessellation, window: &Rect, template: &Model) -> Result<HardcoreParams> {
    let want = template.hardcore;
    let none = || Error::Inestimable("no tessellation items inside the window".into());
    match template.kind {
        ModelKind::Poisson => Ok(HardcoreParams::inactive()),
        ModelKind::MinAngle | ModelKind::Perimeter => {
            let inside: Vec<_> = tess
                .triangles()
                .iter()
                .filter(|t| window.contains(t.barycenter))
                .map(|t| t.stats)
                .collect();
            if inside.is_empty() {
                return Err(none());
            }
            Ok(HardcoreParams {
                min_angle: want.min_angle.and(fold(inside.iter().map(|s| s.min_angle), f64::min)),
                eps: want.eps.and(fold(inside.iter().map(|s| s.min_edge), f64::min)),
                alpha: want.alpha.and(fold(inside.iter().map(|s| s.circumradius), f64::max)),
                shape: None,
            })
        }
        ModelKind::VolumeRatio { .. } => {
            let inside: Vec<_> = tess
                .cells()
                .iter()
                .filter(|c| window.contains(tess.points()[c.index]))
                .map(|c| c.stats)
                .collect();
            if inside.is_empty() {
                return Err(none());
            }
            Ok(HardcoreParams {
                min_angle: None,
                eps: want.eps.and(fold(inside.iter().map(|s| s.h_min), f64::min)),
                alpha: want.alpha.and(fold(inside.iter().map(|s| s.h_max), f64::max)),
                shape: want
                    .shape
                    .and(fold(inside.iter().map(|s| s.h_max * s.h_max / s.volume), f64::max)),
            })
        }
    }
}

/// Fitted model: observed extremes relaxed by [`FIT_SLACK`]. The result is
/// not re-validated; near-regular data can give a fitted edge bound above
/// the fitted circumradius bound.
pub fn fit_hardcore(tess: &Tessellation, window: &Rect, template: &Model) -> Result<Model> {
    let observed = observed_extremes(tess, window, template)?;
    Ok(template.with_hardcore(observed.relaxed(FIT_SLACK)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::periodic_energy;
    use crate::geometry::{lattice_rows, triangular_lattice, PointConfiguration};

    fn perimeter_template() -> Model {
        Model::new(ModelKind::Perimeter, HardcoreParams { eps: Some(0.01), alpha: Some(1.0), ..Default::default() })
            .unwrap()
    }

    #[test]
    fn lattice_extremes_are_exact() {
        let k = 10;
        let m = lattice_rows(k) as f64;
        let tess = Tessellation::build(&PointConfiguration::from_points(triangular_lattice(k)).unwrap()).unwrap();
        let est = observed_extremes(&tess, &Rect::unit(), &perimeter_template()).unwrap();
        // Isosceles triangles with base 1/k and height 1/m.
        let base = 1.0 / k as f64;
        let leg = (0.25 * base * base + 1.0 / (m * m)).sqrt();
        let circumradius = leg * leg / (2.0 / m);
        assert!((est.eps.unwrap() - base.min(leg)).abs() < 1e-12);
        assert!((est.alpha.unwrap() - circumradius).abs() < 1e-12);
        assert_eq!(est.shape, None);
    }

    #[test]
    fn fitted_bounds_allow_the_data() {
        let config = PointConfiguration::from_points(triangular_lattice(9)).unwrap();
        let tess = Tessellation::build(&config).unwrap();
        for template in [
            perimeter_template(),
            Model::new(
                ModelKind::VolumeRatio { exponent: 0.5 },
                HardcoreParams { eps: Some(0.001), alpha: Some(0.5), shape: Some(10.0), ..Default::default() },
            )
            .unwrap(),
            Model::new(ModelKind::MinAngle, HardcoreParams { min_angle: Some(0.1), ..Default::default() }).unwrap(),
        ] {
            let fitted = fit_hardcore(&tess, &Rect::unit(), &template).unwrap();
            assert!(periodic_energy(&config, &fitted, 0.0).unwrap().is_finite(), "{template:?}");
            // Without the slack the extreme item itself is forbidden.
            let exact = template.with_hardcore(observed_extremes(&tess, &Rect::unit(), &template).unwrap());
            assert!(!periodic_energy(&config, &exact, 0.0).unwrap().is_finite());
        }
    }

    #[test]
    fn empty_window_is_inestimable() {
        let config = PointConfiguration::from_points(triangular_lattice(4)).unwrap();
        let tess = Tessellation::build(&config).unwrap();
        let tiny = Rect::new([0.001, 0.001], [0.002, 0.002]).unwrap();
        assert!(matches!(
            observed_extremes(&tess, &tiny, &perimeter_template()),
            Err(Error::Inestimable(_))
        ));
    }
}
