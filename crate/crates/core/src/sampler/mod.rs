//! Birth-death-move Metropolis-Hastings chain on the torus.

mod start;

pub use start::{columns_for, initial_lattice, MAX_COLUMNS, MIN_COLUMNS};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::energy::{change_statistic, configuration_statistic, Intensity, Interaction, Model, ModelKind, Statistic};
use crate::error::{Error, Result};
use crate::geometry::{Change, Point, PointConfiguration, MIN_POINTS};

/// Relative tolerance of the periodic cached-statistic check.
pub const DRIFT_TOLERANCE: f64 = 1e-6;

pub const DEFAULT_SIGMA: f64 = 0.015;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalParams {
    /// Standard deviation of the Gaussian displacement of a move.
    pub sigma: f64,
    pub birth: f64,
    pub death: f64,
    pub shift: f64,
}

impl Default for ProposalParams {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            birth: 1.0 / 3.0,
            death: 1.0 / 3.0,
            shift: 1.0 / 3.0,
        }
    }
}

impl ProposalParams {
    pub fn with_sigma(sigma: f64) -> Result<Self> {
        Self { sigma, ..Self::default() }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let probs = [self.birth, self.death, self.shift];
        let bad = |message: String| Error::Config {
            location: "sampler".into(),
            message,
        };
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(bad(format!("sigma must be positive, got {}", self.sigma)));
        }
        if probs.iter().any(|p| !(*p > 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(bad(format!("step probabilities must be positive and sum to 1, got {probs:?}")));
        }
        Ok(self)
    }
}

/// The distribution a chain samples: interaction, smooth parameter and
/// reference intensity.
#[derive(Debug, Clone, Copy)]
pub struct Target<'a> {
    pub model: &'a dyn Interaction,
    pub theta: f64,
    pub intensity: Intensity,
}

impl Target<'_> {
    /// Expected number of points of the reference Poisson process.
    pub fn reference_count(&self) -> f64 {
        self.intensity.total_mass()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Birth,
    Death,
    Move,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub kind: StepKind,
    pub accepted: bool,
}

/// Accepted steps within one block of iterations and the population at its end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonitoringRecord {
    pub block: usize,
    pub births: usize,
    pub deaths: usize,
    pub moves: usize,
    pub total: usize,
}

fn birth_log_ratio(ds: f64, density: f64, n: usize, target: &Target<'_>, proposal: &ProposalParams) -> f64 {
    -target.theta * ds + density.ln() - ((n + 1) as f64).ln() + (proposal.death / proposal.birth).ln()
}

fn death_log_ratio(ds: f64, density: f64, n: usize, target: &Target<'_>, proposal: &ProposalParams) -> f64 {
    -target.theta * ds + (n as f64).ln() - density.ln() + (proposal.birth / proposal.death).ln()
}

/// Log of the birth acceptance ratio for adding `x`; `-inf` when forbidden.
pub fn log_birth_ratio(
    config: &PointConfiguration,
    x: Point,
    target: &Target<'_>,
    proposal: &ProposalParams,
) -> Result<f64> {
    Ok(match change_statistic(config, Change::Birth(x), target.model)? {
        Statistic::Forbidden(_) => f64::NEG_INFINITY,
        Statistic::Allowed(ds) => birth_log_ratio(ds, target.intensity.density(x), config.len(), target, proposal),
    })
}

/// Log of the death acceptance ratio for removing the point at `index`.
pub fn log_death_ratio(
    config: &PointConfiguration,
    index: usize,
    target: &Target<'_>,
    proposal: &ProposalParams,
) -> Result<f64> {
    let n = config.len();
    if n <= MIN_POINTS {
        return Ok(f64::NEG_INFINITY);
    }
    let density = target.intensity.density(config.point(index));
    Ok(match change_statistic(config, Change::Death(index), target.model)? {
        Statistic::Forbidden(_) => f64::NEG_INFINITY,
        Statistic::Allowed(ds) => death_log_ratio(ds, density, n, target, proposal),
    })
}

/// Change of the statistic a proposal causes, `None` when it is forbidden.
fn allowed_delta(config: &PointConfiguration, change: Change, model: &dyn Interaction) -> Option<f64> {
    match change_statistic(config, change, model) {
        Ok(Statistic::Allowed(ds)) => Some(ds),
        // Forbidden targets and degenerate geometry are both rejections.
        Ok(Statistic::Forbidden(_)) | Err(_) => None,
    }
}

/// An allowed configuration with its cached statistic and random stream.
#[derive(Debug, Clone)]
pub struct ChainState {
    config: PointConfiguration,
    statistic: f64,
    iteration: u64,
    rng: ChaCha8Rng,
}

impl ChainState {
    pub fn new(config: PointConfiguration, model: &dyn Interaction, seed: u64) -> Result<Self> {
        let statistic = match configuration_statistic(&config, model)? {
            Statistic::Allowed(s) => s,
            Statistic::Forbidden(v) => {
                return Err(Error::InvalidInput(format!("starting configuration is forbidden: {v}")))
            }
        };
        Ok(Self {
            config,
            statistic,
            iteration: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn config(&self) -> &PointConfiguration {
        &self.config
    }

    pub fn into_config(self) -> PointConfiguration {
        self.config
    }

    /// Cached value of the statistic; the energy is `theta` times this.
    pub fn statistic(&self) -> f64 {
        self.statistic
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Recomputes the statistic from scratch and fails if the cache drifted.
    pub fn verify(&mut self, model: &dyn Interaction) -> Result<()> {
        let full = match configuration_statistic(&self.config, model)? {
            Statistic::Allowed(s) => s,
            Statistic::Forbidden(_) => f64::INFINITY,
        };
        if !((self.statistic - full).abs() <= DRIFT_TOLERANCE * full.abs().max(1.0)) {
            return Err(Error::EnergyDrift {
                cached: self.statistic,
                full,
            });
        }
        self.statistic = full;
        Ok(())
    }

    /// One birth, death or move proposal.
    pub fn step(&mut self, target: &Target<'_>, proposal: &ProposalParams) -> StepOutcome {
        self.iteration += 1;
        let a: f64 = self.rng.random();
        let b: f64 = self.rng.random();
        let n = self.config.len();
        let model = target.model;
        if a < proposal.birth {
            let x = Point::new(self.rng.random(), self.rng.random());
            let accepted = match allowed_delta(&self.config, Change::Birth(x), model) {
                Some(ds)
                    if b.ln() < birth_log_ratio(ds, target.intensity.density(x), n, target, proposal)
                        && self.config.insert(x).is_ok() =>
                {
                    self.statistic += ds;
                    true
                }
                _ => false,
            };
            return StepOutcome { kind: StepKind::Birth, accepted };
        }
        if a < proposal.birth + proposal.death {
            if n <= MIN_POINTS {
                return StepOutcome { kind: StepKind::Death, accepted: false };
            }
            let i = self.rng.random_range(0..n);
            let density = target.intensity.density(self.config.point(i));
            let accepted = match allowed_delta(&self.config, Change::Death(i), model) {
                Some(ds) if b.ln() < death_log_ratio(ds, density, n, target, proposal) => {
                    self.config.remove(i);
                    self.statistic += ds;
                    true
                }
                _ => false,
            };
            return StepOutcome { kind: StepKind::Death, accepted };
        }
        if n == 0 {
            return StepOutcome { kind: StepKind::Move, accepted: false };
        }
        let i = self.rng.random_range(0..n);
        let normal = Normal::new(0.0, proposal.sigma).expect("positive sigma");
        let from = self.config.point(i);
        let to = Point::new(from.x() + normal.sample(&mut self.rng), from.y() + normal.sample(&mut self.rng));
        let accepted = match allowed_delta(&self.config, Change::Move(i, to), model) {
            Some(ds) if b.ln() < -target.theta * ds && self.config.move_point(i, to).is_ok() => {
                self.statistic += ds;
                true
            }
            _ => false,
        };
        StepOutcome { kind: StepKind::Move, accepted }
    }
}

/// Settings of one chain run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSettings {
    pub iterations: u64,
    pub monitor_every: u64,
    /// Full recomputation of the cached statistic every this many steps;
    /// 0 disables the check.
    pub verify_every: u64,
    pub seed: u64,
}

impl RunSettings {
    pub fn new(iterations: u64, seed: u64) -> Self {
        Self {
            iterations,
            monitor_every: 1000,
            verify_every: 1000,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: PointConfiguration,
    pub trace: Vec<MonitoringRecord>,
    /// Cached statistic of the final configuration.
    pub statistic: f64,
}

/// Runs a chain from `start`, reporting each completed block to `observer`.
pub fn run_from(
    start: PointConfiguration,
    target: &Target<'_>,
    proposal: &ProposalParams,
    settings: RunSettings,
    mut observer: impl FnMut(&MonitoringRecord),
) -> Result<RunOutput> {
    let proposal = proposal.validated()?;
    let mut state = ChainState::new(start, target.model, settings.seed)?;
    let mut trace = Vec::new();
    let block_len = settings.monitor_every.max(1);
    let mut counts = [0usize; 3];
    for it in 1..=settings.iterations {
        let out = state.step(target, &proposal);
        if out.accepted {
            counts[out.kind as usize] += 1;
        }
        if settings.verify_every > 0 && it % settings.verify_every == 0 {
            state.verify(target.model)?;
        }
        if it % block_len == 0 {
            let record = MonitoringRecord {
                block: trace.len(),
                births: counts[0],
                deaths: counts[1],
                moves: counts[2],
                total: state.config.len(),
            };
            observer(&record);
            trace.push(record);
            counts = [0; 3];
        }
    }
    if settings.verify_every > 0 {
        state.verify(target.model)?;
    }
    Ok(RunOutput {
        statistic: state.statistic,
        config: state.config,
        trace,
    })
}

/// Runs a chain from the admissible lattice closest to the reference count.
pub fn run(
    target: &Target<'_>,
    proposal: &ProposalParams,
    settings: RunSettings,
    observer: impl FnMut(&MonitoringRecord),
) -> Result<RunOutput> {
    let start = initial_lattice(target.model, target.reference_count())?;
    run_from(start, target, proposal, settings, observer)
}

/// Independent chains with seeds `seed_base + i`, run in parallel from the
/// default lattice start. A failed start yields a single error.
pub fn replicate(
    count: usize,
    seed_base: u64,
    target: &Target<'_>,
    proposal: &ProposalParams,
    settings: RunSettings,
) -> Vec<Result<RunOutput>> {
    match initial_lattice(target.model, target.reference_count()) {
        Ok(start) => replicate_from(&start, count, seed_base, target, proposal, settings),
        Err(e) => vec![Err(e)],
    }
}

/// Like [`replicate`], every chain starting from `start`.
pub fn replicate_from(
    start: &PointConfiguration,
    count: usize,
    seed_base: u64,
    target: &Target<'_>,
    proposal: &ProposalParams,
    settings: RunSettings,
) -> Vec<Result<RunOutput>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let settings = RunSettings {
                seed: seed_base + i as u64,
                ..settings
            };
            run_from(start.clone(), target, proposal, settings, |_| {})
        })
        .collect()
}

/// Chain length used when none is given.
pub fn default_iterations(model: &Model) -> u64 {
    match model.kind {
        ModelKind::Poisson => 100_000,
        ModelKind::MinAngle => 500_000,
        ModelKind::Perimeter => 200_000,
        ModelKind::VolumeRatio { .. } if model.hardcore.shape.is_none() => 150_000,
        ModelKind::VolumeRatio { .. } => 200_000,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{periodic_energy, HardcoreParams, Model, ModelKind};
    use crate::geometry::triangular_lattice;

    fn perimeter_model(alpha: f64) -> Model {
        Model::new(ModelKind::Perimeter, HardcoreParams { alpha: Some(alpha), ..Default::default() }).unwrap()
    }

    #[test]
    fn poisson_birth_ratio_is_intensity_over_count() {
        let model = Model::poisson();
        let target = Target { model: &model, theta: 0.0, intensity: Intensity::Constant(100.0) };
        let config = PointConfiguration::from_points(triangular_lattice(6)).unwrap();
        let r = log_birth_ratio(&config, Point::new(0.123, 0.456), &target, &ProposalParams::default()).unwrap();
        let n = config.len() as f64;
        assert!((r.exp() - 100.0 / (n + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn birth_and_death_ratios_are_reciprocal() {
        let model = perimeter_model(0.12);
        let intensity = Intensity::radial(5.0, -0.3).unwrap();
        let target = Target { model: &model, theta: -2.5, intensity };
        let proposal = ProposalParams { birth: 0.5, death: 0.2, shift: 0.3, sigma: 0.01 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut state = ChainState::new(
            initial_lattice(&model, 150.0).unwrap(),
            &model,
            9,
        )
        .unwrap();
        for _ in 0..3000 {
            state.step(&target, &ProposalParams::default());
        }
        let mut checked = 0;
        while checked < 40 {
            let x = Point::new(rng.random(), rng.random());
            let up = log_birth_ratio(state.config(), x, &target, &proposal).unwrap();
            if !up.is_finite() {
                continue;
            }
            let mut grown = state.config().clone();
            grown.insert(x).unwrap();
            let down = log_death_ratio(&grown, grown.len() - 1, &target, &proposal).unwrap();
            assert!((up + down).abs() < 1e-12, "{up} + {down}");
            checked += 1;
        }
    }

    #[test]
    fn birth_then_death_restores_state() {
        let model = perimeter_model(0.12);
        let config = initial_lattice(&model, 150.0).unwrap();
        let mut state = ChainState::new(config.clone(), &model, 1).unwrap();
        let before = state.statistic();
        let x = Point::new(0.3141, 0.2718);
        let ds = allowed_delta(state.config(), Change::Birth(x), &model).unwrap();
        state.config.insert(x).unwrap();
        state.statistic += ds;
        let i = state.config().len() - 1;
        let back = allowed_delta(state.config(), Change::Death(i), &model).unwrap();
        state.config.remove(i);
        state.statistic += back;
        assert_eq!(state.config().points(), config.points());
        assert_eq!(state.config().ids(), config.ids());
        assert!((state.statistic() - before).abs() <= 1e-9 * before.abs());
        state.verify(&model).unwrap();
    }

    #[test]
    fn chain_never_leaves_allowed_set() {
        let model = perimeter_model(0.1);
        let target = Target { model: &model, theta: 3.0, intensity: Intensity::Constant(150.0) };
        let proposal = ProposalParams::default();
        let mut state = ChainState::new(initial_lattice(&model, 150.0).unwrap(), &model, 4).unwrap();
        let mut accepted = 0;
        for it in 1..=20_000 {
            accepted += usize::from(state.step(&target, &proposal).accepted);
            if it % 500 == 0 {
                assert!(periodic_energy(state.config(), &model, 3.0).unwrap().is_finite());
                state.verify(&model).unwrap();
            }
        }
        assert!(accepted > 1000);
    }

    #[test]
    fn volume_ratio_chain_keeps_cache_in_sync() {
        let model = Model::new(
            ModelKind::VolumeRatio { exponent: 0.5 },
            HardcoreParams { alpha: Some(0.05), shape: Some(0.625), ..Default::default() },
        )
        .unwrap();
        let target = Target { model: &model, theta: -0.5, intensity: Intensity::Constant(100.0) };
        let settings = RunSettings { iterations: 6000, monitor_every: 1000, verify_every: 200, seed: 2 };
        let out = run(&target, &ProposalParams::default(), settings, |_| {}).unwrap();
        assert_eq!(out.trace.len(), 6);
        assert!(periodic_energy(&out.config, &model, -0.5).unwrap().is_finite());
    }

    #[test]
    fn zero_iterations_return_the_lattice() {
        let model = perimeter_model(0.08);
        let target = Target { model: &model, theta: -5.0, intensity: Intensity::Constant(1000.0) };
        let out = run(&target, &ProposalParams::default(), RunSettings::new(0, 1), |_| {}).unwrap();
        let lattice = initial_lattice(&model, 1000.0).unwrap();
        assert!(out.trace.is_empty());
        assert_eq!(out.config.points(), lattice.points());
    }

    #[test]
    fn runs_are_deterministic_and_traced() {
        let model = Model::poisson();
        let target = Target { model: &model, theta: 0.0, intensity: Intensity::Constant(50.0) };
        let settings = RunSettings { iterations: 2500, monitor_every: 1000, verify_every: 0, seed: 11 };
        let mut seen = Vec::new();
        let a = run(&target, &ProposalParams::default(), settings, |r| seen.push(*r)).unwrap();
        let b = run(&target, &ProposalParams::default(), settings, |_| {}).unwrap();
        assert_eq!(a.config.points(), b.config.points());
        assert_eq!(a.trace, b.trace);
        assert_eq!(seen, a.trace);
        assert_eq!(a.trace.len(), 2);
        assert_eq!(a.trace[1].total, {
            let r = a.trace[1];
            let r0 = a.trace[0];
            (r0.total + r.births) - r.deaths
        });
    }

    #[test]
    fn replications_use_distinct_seeds() {
        let model = Model::poisson();
        let target = Target { model: &model, theta: 0.0, intensity: Intensity::Constant(50.0) };
        let outs = replicate(3, 100, &target, &ProposalParams::default(), RunSettings::new(500, 0));
        let pts: Vec<_> = outs.into_iter().map(|o| o.unwrap().config.points().to_vec()).collect();
        assert_ne!(pts[0], pts[1]);
        let solo = run(&target, &ProposalParams::default(), RunSettings::new(500, 101), |_| {}).unwrap();
        assert_eq!(solo.config.points(), &pts[1][..]);
    }

    #[test]
    fn bad_proposals_are_rejected() {
        assert!(ProposalParams::with_sigma(0.0).is_err());
        let p = ProposalParams { birth: 0.5, death: 0.5, shift: 0.5, sigma: 0.01 };
        assert!(p.validated().is_err());
    }
}
