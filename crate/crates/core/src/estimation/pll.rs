//! Pseudo-likelihood restricted to removable points.
//!
//! All built-in smooth parts are linear in `theta`, so the local energy of a
//! point is `theta` times a statistic change. Those changes are computed once
//! per dataset and Monte Carlo point set, after which the contrast, its
//! derivatives and the profile in `z` are cheap closed forms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{change_statistic, Interaction, Statistic};
use crate::error::{Error, Result};
use crate::geometry::{Change, Point, PointConfiguration};

use super::window::Rect;

pub const DEFAULT_MC_SAMPLES: usize = 10_000;

/// `count` uniform points of `window`, reproducible from `seed`.
pub fn mc_points(window: &Rect, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| window.sample(&mut rng)).collect()
}

/// Statistic change of inserting `x`, `None` if that is forbidden.
/// Degenerate insertions count as forbidden; they have probability zero.
pub fn birth_statistic(config: &PointConfiguration, x: Point, model: &dyn Interaction) -> Option<f64> {
    match change_statistic(config, Change::Birth(x), model) {
        Ok(Statistic::Allowed(ds)) => Some(ds),
        _ => None,
    }
}

/// Statistic of the point at `index` against the rest, `None` if it is not
/// removable. Its local energy in `γ - x` is `theta` times this.
pub fn member_statistic(config: &PointConfiguration, index: usize, model: &dyn Interaction) -> Option<f64> {
    match change_statistic(config, Change::Death(index), model) {
        Ok(Statistic::Allowed(ds)) => Some(-ds),
        _ => None,
    }
}

/// Per-dataset ingredients of the contrast.
#[derive(Debug, Clone)]
pub struct PllTerms {
    area: f64,
    samples: usize,
    /// Birth statistic at each Monte Carlo point where insertion is allowed.
    births: Vec<f64>,
    /// Statistic of each removable point inside the window.
    removable: Vec<f64>,
    removable_total: usize,
}

impl PllTerms {
    pub fn new(config: &PointConfiguration, model: &dyn Interaction, window: &Rect, points: &[Point]) -> Self {
        let births = points
            .par_iter()
            .filter_map(|&x| birth_statistic(config, x, model))
            .collect();
        let members: Vec<(bool, f64)> = (0..config.len())
            .into_par_iter()
            .filter_map(|i| member_statistic(config, i, model).map(|t| (window.contains(config.point(i)), t)))
            .collect();
        Self {
            area: window.area(),
            samples: points.len(),
            births,
            removable_total: members.len(),
            removable: members.into_iter().filter(|m| m.0).map(|m| m.1).collect(),
        }
    }

    /// Removable points inside the window.
    pub fn removable_count(&self) -> usize {
        self.removable.len()
    }

    /// Removable points anywhere in the configuration.
    pub fn removable_total(&self) -> usize {
        self.removable_total
    }

    /// Monte Carlo points where insertion is allowed.
    pub fn allowed_samples(&self) -> usize {
        self.births.len()
    }

    fn removable_sum(&self) -> f64 {
        self.removable.iter().sum()
    }

    /// `∫ exp(-h)` over the window.
    pub fn integral(&self, theta: f64) -> f64 {
        let s: f64 = self.births.iter().map(|s| (-theta * s).exp()).sum();
        self.area * s / self.samples as f64
    }

    /// `∫ s exp(-theta s)` over the window, `s` the birth statistic.
    pub fn weighted_integral(&self, theta: f64) -> f64 {
        let s: f64 = self.births.iter().map(|s| s * (-theta * s).exp()).sum();
        self.area * s / self.samples as f64
    }

    /// Mean birth statistic under weights `exp(-theta s)`, computed with a
    /// shift so large `|theta|` does not overflow.
    fn tilted_mean(&self, theta: f64) -> f64 {
        let shift = self.births.iter().map(|s| -theta * s).fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for s in &self.births {
            let w = (-theta * s - shift).exp();
            num += s * w;
            den += w;
        }
        num / den
    }

    /// The contrast at `(z, theta)`.
    pub fn value(&self, z: f64, theta: f64) -> f64 {
        z * self.integral(theta) + theta * self.removable_sum() - self.removable.len() as f64 * z.ln()
    }

    /// Minimiser in `z` for fixed `theta`.
    pub fn z_hat(&self, theta: f64) -> f64 {
        self.removable.len() as f64 / self.integral(theta)
    }

    /// Derivative in `theta` with `z` fixed. Increasing in `theta`.
    pub fn score(&self, z: f64, theta: f64) -> f64 {
        -z * self.weighted_integral(theta) + self.removable_sum()
    }

    /// Derivative in `theta` of the contrast profiled over `z`. Increasing in `theta`.
    pub fn profile_score(&self, theta: f64) -> f64 {
        -(self.removable.len() as f64) * self.tilted_mean(theta) + self.removable_sum()
    }

    /// Magnitude of the two terms balanced by the score, for tolerances.
    pub fn score_scale(&self) -> f64 {
        self.removable.iter().map(|t| t.abs()).sum::<f64>().max(f64::MIN_POSITIVE)
    }
}

/// The contrast for one dataset, integral by `mc_samples` uniform points.
pub fn pll(
    config: &PointConfiguration,
    z: f64,
    theta: f64,
    model: &dyn Interaction,
    window: &Rect,
    mc_samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidInput(format!("z must be positive, got {z}")));
    }
    let points = mc_points(window, mc_samples, seed);
    Ok(PllTerms::new(config, model, window, &points).value(z, theta))
}

pub const INITIAL_BRACKET: f64 = 10.0;
pub const MAX_BRACKET: f64 = 1000.0;

/// Root of an increasing function: bracket `[-10, 10]`, widened by doubling
/// up to `±1000`, then bisection to floating-point resolution.
pub fn increasing_root(f: impl Fn(f64) -> f64) -> Result<(f64, [f64; 2])> {
    let (mut lo, mut hi) = (-INITIAL_BRACKET, INITIAL_BRACKET);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    loop {
        if flo.is_nan() || fhi.is_nan() {
            return Err(Error::NoRoot { lo, hi, score_lo: flo, score_hi: fhi });
        }
        if flo <= 0.0 && fhi >= 0.0 {
            break;
        }
        let widen_lo = flo > 0.0 && lo > -MAX_BRACKET;
        let widen_hi = fhi < 0.0 && hi < MAX_BRACKET;
        if !widen_lo && !widen_hi {
            return Err(Error::NoRoot { lo, hi, score_lo: flo, score_hi: fhi });
        }
        if widen_lo {
            lo = (2.0 * lo).max(-MAX_BRACKET);
            flo = f(lo);
        }
        if widen_hi {
            hi = (2.0 * hi).min(MAX_BRACKET);
            fhi = f(hi);
        }
    }
    let bracket = [lo, hi];
    let (mut a, mut b) = (lo, hi);
    while b - a > 1e-12 * a.abs().max(b.abs()).max(1.0) {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok((m, bracket));
        }
        if fm < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((0.5 * (a + b), bracket))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{HardcoreParams, Model, ModelKind};
    use rand::Rng;

    fn random_config(n: usize, seed: u64) -> PointConfiguration {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointConfiguration::from_points((0..n).map(|_| Point::new(rng.random(), rng.random()))).unwrap()
    }

    #[test]
    fn null_model_has_poisson_closed_form() {
        let config = random_config(40, 1);
        let window = Rect::new([0.1, 0.1], [0.9, 0.8]).unwrap();
        let inside = config.points().iter().filter(|p| window.contains(**p)).count() as f64;
        let z = 55.0;
        let v = pll(&config, z, 0.0, &Model::poisson(), &window, 500, 3).unwrap();
        let expected = z * window.area() - inside * z.ln();
        assert!((v - expected).abs() < 1e-9 * expected.abs());
        let terms = PllTerms::new(&config, &Model::poisson(), &window, &mc_points(&window, 500, 3));
        assert!((terms.z_hat(0.0) - inside / window.area()).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_positive_intensity() {
        let config = random_config(10, 2);
        assert!(pll(&config, 0.0, 0.0, &Model::poisson(), &Rect::unit(), 10, 1).is_err());
    }

    #[test]
    fn perimeter_contrast_is_convex_in_theta() {
        let model = Model::new(ModelKind::Perimeter, HardcoreParams::inactive()).unwrap();
        for seed in 0..20 {
            let config = random_config(60, 10 + seed);
            let window = Rect::unit();
            let terms = PllTerms::new(&config, &model, &window, &mc_points(&window, 2000, seed));
            let grid: Vec<f64> = (-40..=40).map(|i| terms.value(60.0, i as f64 * 0.5)).collect();
            for w in grid.windows(3) {
                assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-9 * w[1].abs(), "seed {seed}");
            }
        }
    }

    #[test]
    fn scores_match_finite_differences() {
        let model = Model::new(ModelKind::Perimeter, HardcoreParams::inactive()).unwrap();
        let config = random_config(50, 7);
        let window = Rect::new([0.2, 0.2], [0.8, 0.8]).unwrap();
        let terms = PllTerms::new(&config, &model, &window, &mc_points(&window, 1000, 1));
        let (z, theta, h) = (40.0, 1.3, 1e-5);
        let fd = (terms.value(z, theta + h) - terms.value(z, theta - h)) / (2.0 * h);
        assert!((terms.score(z, theta) - fd).abs() < 1e-5 * fd.abs().max(1.0));
        let profile = |t: f64| terms.value(terms.z_hat(t), t);
        let fd = (profile(theta + h) - profile(theta - h)) / (2.0 * h);
        assert!((terms.profile_score(theta) - fd).abs() < 1e-5 * fd.abs().max(1.0));
    }

    #[test]
    fn root_search_widens_and_reports() {
        let (r, br) = increasing_root(|x| x - 123.4).unwrap();
        assert!((r - 123.4).abs() < 1e-9);
        assert_eq!(br, [-10.0, 160.0]);
        let (r, _) = increasing_root(|x| x + 3.0).unwrap();
        assert!((r + 3.0).abs() < 1e-9);
        assert!(matches!(increasing_root(|x| x - 5000.0), Err(Error::NoRoot { .. })));
        assert!(matches!(increasing_root(|_| 1.0), Err(Error::NoRoot { .. })));
    }
}
