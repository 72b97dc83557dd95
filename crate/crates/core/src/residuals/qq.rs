//! Quantile comparison of observed residuals with residuals of data
//! simulated from the fitted model.

use std::fmt::Write as _;

use crate::energy::Intensity;
use crate::error::Result;
use crate::estimation::ObservationWindow;
use crate::geometry::PointConfiguration;
use crate::sampler::{default_iterations, initial_lattice, replicate_from, ProposalParams, RunSettings, Target};

use super::{Fitted, GridSettings, ResidualGrid};

/// Tolerance for calling a quantile outside the band; residual grids of
/// count data have many exact ties with the band edges.
const BAND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QqSettings {
    pub grid: GridSettings,
    pub n_boot: usize,
    /// Chain length per simulated dataset; the model default when `None`.
    pub iters_per_boot: Option<u64>,
    pub proposal: ProposalParams,
    pub seed: u64,
}

impl Default for QqSettings {
    fn default() -> Self {
        Self {
            grid: GridSettings::default(),
            n_boot: 100,
            iters_per_boot: None,
            proposal: ProposalParams::default(),
            seed: 0,
        }
    }
}

/// Sorted observed residuals and, per rank, the mean and central 95% band
/// of the sorted simulated residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct QqEnvelope {
    pub observed: Vec<f64>,
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Fraction of ranks outside the band, for each simulated dataset.
    pub simulated_outside: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (k, frac) = (h.floor() as usize, h.fract());
    match sorted.get(k + 1) {
        Some(next) => sorted[k] + frac * (next - sorted[k]),
        None => sorted[k],
    }
}

impl QqEnvelope {
    fn from_sorted(observed: Vec<f64>, simulated: &[Vec<f64>]) -> Self {
        let m = observed.len();
        let (mut mean, mut lo, mut hi) = (Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m));
        let mut column = Vec::with_capacity(simulated.len());
        for k in 0..m {
            column.clear();
            column.extend(simulated.iter().map(|s| s[k]));
            column.sort_by(f64::total_cmp);
            mean.push(column.iter().sum::<f64>() / column.len() as f64);
            lo.push(quantile(&column, 0.025));
            hi.push(quantile(&column, 0.975));
        }
        let mut env = QqEnvelope {
            observed,
            mean,
            lo,
            hi,
            simulated_outside: Vec::new(),
        };
        env.simulated_outside = simulated.iter().map(|s| env.outside_fraction(s)).collect();
        env
    }

    /// Fraction of ranks at which `sorted` leaves the band.
    pub fn outside_fraction(&self, sorted: &[f64]) -> f64 {
        let out = sorted
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .filter(|(v, (lo, hi))| **v < **lo - BAND_TOLERANCE || **v > **hi + BAND_TOLERANCE)
            .count();
        out as f64 / sorted.len() as f64
    }

    pub fn observed_outside(&self) -> f64 {
        self.outside_fraction(&self.observed)
    }

    /// Monte Carlo p-value of the observed outside fraction among the
    /// simulated ones.
    pub fn p_value(&self) -> f64 {
        let t = self.observed_outside();
        let at_least = self.simulated_outside.iter().filter(|&&s| s >= t).count();
        (1 + at_least) as f64 / (1 + self.simulated_outside.len()) as f64
    }

    /// `quantile,observed,bootMean,lo95,hi95` lines with a header.
    pub fn to_csv(&self) -> String {
        let m = self.observed.len() as f64;
        let mut out = String::from("quantile,observed,bootMean,lo95,hi95\n");
        for k in 0..self.observed.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                (k as f64 + 0.5) / m,
                self.observed[k],
                self.mean[k],
                self.lo[k],
                self.hi[k]
            );
        }
        out
    }
}

/// Residual grids of `config` and of `settings.n_boot` datasets simulated from
/// `fitted`, each chain starting from a lattice with as many points as
/// `config`. The simulated grids use the same window and fitted parameters.
pub fn qq_diagnostic(
    config: &PointConfiguration,
    fitted: &Fitted,
    window: &ObservationWindow,
    settings: &QqSettings,
) -> Result<QqEnvelope> {
    let observed = ResidualGrid::compute(config, fitted, window, &settings.grid)?.sorted();
    let target = Target {
        model: &fitted.model,
        theta: fitted.theta,
        intensity: Intensity::constant(fitted.z)?,
    };
    let start = initial_lattice(&fitted.model, config.len() as f64)?;
    let iterations = settings.iters_per_boot.unwrap_or_else(|| default_iterations(&fitted.model));
    let run = RunSettings::new(iterations, settings.seed);
    let simulated = replicate_from(&start, settings.n_boot, settings.seed, &target, &settings.proposal, run)
        .into_iter()
        .enumerate()
        .map(|(b, out)| {
            let grid = GridSettings {
                seed: settings.grid.seed.wrapping_add(1 + b as u64),
                ..settings.grid
            };
            Ok(ResidualGrid::compute(&out?.config, fitted, window, &grid)?.sorted())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QqEnvelope::from_sorted(observed, &simulated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::Model;
    use crate::geometry::Point;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 0.25), 1.5);
        assert_eq!(quantile(&v, 0.75), 3.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn band_and_p_value() {
        let simulated: Vec<Vec<f64>> = (0..39).map(|b| vec![b as f64, 100.0 + b as f64]).collect();
        let env = QqEnvelope::from_sorted(vec![-5.0, 120.0], &simulated);
        assert!((env.lo[0] - 0.95).abs() < 1e-12 && (env.hi[1] - 137.05).abs() < 1e-12);
        assert_eq!(env.observed_outside(), 0.5);
        // The two extreme simulated sets leave the band at both ranks.
        assert_eq!(env.simulated_outside.iter().filter(|&&t| t > 0.0).count(), 2);
        assert!((env.p_value() - 3.0 / 40.0).abs() < 1e-12);
        let inside = QqEnvelope::from_sorted(vec![19.0, 119.0], &simulated);
        assert_eq!(inside.observed_outside(), 0.0);
        assert_eq!(inside.p_value(), 1.0);
    }

    #[test]
    fn poisson_data_sit_inside_their_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let config = PointConfiguration::from_points((0..60).map(|_| Point::new(rng.random(), rng.random()))).unwrap();
        let fitted = Fitted { model: Model::poisson(), theta: 0.0, z: 60.0 };
        let settings = QqSettings {
            grid: GridSettings { side: 0.1, mc_per_square: 1, ..Default::default() },
            n_boot: 19,
            iters_per_boot: Some(3000),
            seed: 5,
            ..Default::default()
        };
        let env = qq_diagnostic(&config, &fitted, &ObservationWindow::whole(), &settings).unwrap();
        assert_eq!(env.observed.len(), 100);
        assert_eq!(env.simulated_outside.len(), 19);
        assert!(env.p_value() > 0.05, "p = {}", env.p_value());
        let again = qq_diagnostic(&config, &fitted, &ObservationWindow::whole(), &settings).unwrap();
        assert_eq!(env, again);
    }
}
