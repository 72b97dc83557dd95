//! Reference intensity measures on the torus.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intensity {
    /// Stationary intensity `z` times Lebesgue measure.
    Constant(f64),
    /// `scale * r^(2 * exponent)` with `r` the distance to the center of the square.
    Radial { scale: f64, exponent: f64 },
}

impl Intensity {
    pub fn constant(z: f64) -> Result<Self> {
        if z > 0.0 && z.is_finite() {
            Ok(Intensity::Constant(z))
        } else {
            Err(Error::Config {
                location: "model.intensity".into(),
                message: format!("z must be positive and finite, got {z}"),
            })
        }
    }

    /// The concentrated density used with the min-angle model.
    pub fn radial_default() -> Self {
        Intensity::Radial {
            scale: 100.0,
            exponent: -0.75,
        }
    }

    pub fn radial(scale: f64, exponent: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) || !(exponent > -1.0 && exponent.is_finite()) {
            return Err(Error::Config {
                location: "model.intensity".into(),
                message: format!(
                    "radial density needs scale > 0 and exponent > -1 (integrable), got {scale}, {exponent}"
                ),
            });
        }
        Ok(Intensity::Radial { scale, exponent })
    }

    /// Density with respect to Lebesgue measure at `p`.
    pub fn density(&self, p: Point) -> f64 {
        match *self {
            Intensity::Constant(z) => z,
            Intensity::Radial { scale, exponent } => {
                let (dx, dy) = (p.x() - 0.5, p.y() - 0.5);
                scale * (dx * dx + dy * dy).powf(exponent)
            }
        }
    }

    /// Mass of the unit square.
    pub fn total_mass(&self) -> f64 {
        match *self {
            Intensity::Constant(z) => z,
            Intensity::Radial { scale, exponent } => {
                // Polar coordinates around the center, by symmetry eight
                // triangles of angle pi/4. The radial integral of
                // r^(2e) * r is closed-form.
                let k = 2.0 * exponent + 2.0;
                let inner = |phi: f64| (0.5 / phi.cos()).powf(k) / k;
                8.0 * scale * simpson(inner, 0.0, FRAC_PI_4, 2000)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Intensity::Constant(_))
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Analytic mass of a small disc around the singularity plus a stratified
    /// Monte Carlo estimate of the bounded remainder.
    fn split_estimate(g: &Intensity, scale: f64, exponent: f64) -> f64 {
        let rho: f64 = 0.1;
        let k = 2.0 * exponent + 2.0;
        let disc = 2.0 * std::f64::consts::PI * scale * rho.powf(k) / k;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = 300;
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                let p = Point::new(
                    (i as f64 + rng.random::<f64>()) / m as f64,
                    (j as f64 + rng.random::<f64>()) / m as f64,
                );
                if (p.x() - 0.5).hypot(p.y() - 0.5) > rho {
                    s += g.density(p);
                }
            }
        }
        disc + s / (m * m) as f64
    }

    #[test]
    fn radial_mass_matches_split_quadrature() {
        for (scale, exponent) in [(100.0, -0.75), (2.0, -0.25), (1.0, 0.5)] {
            let g = Intensity::radial(scale, exponent).unwrap();
            let est = split_estimate(&g, scale, exponent);
            let mass = g.total_mass();
            assert!((est - mass).abs() / mass < 2e-3, "{est} vs {mass}");
        }
    }

    #[test]
    fn radial_mass_closed_form_for_uniform_exponent() {
        // exponent 0 gives a constant density over the unit square.
        let g = Intensity::radial(3.0, 0.0).unwrap();
        assert!((g.total_mass() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(Intensity::constant(0.0).is_err());
        assert!(Intensity::constant(f64::NAN).is_err());
        assert!(Intensity::radial(100.0, -1.0).is_err());
    }
}
