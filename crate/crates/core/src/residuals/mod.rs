//! Residuals of fitted models: removable points in a region against the
//! fitted intensity integrated there.

mod qq;

pub use qq::{qq_diagnostic, quantile, QqEnvelope, QqSettings};

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::Model;
use crate::error::{Error, Result};
use crate::estimation::{birth_statistic, member_statistic, FitResult, ObservationWindow, Rect};
use crate::geometry::{Point, PointConfiguration};

pub const DEFAULT_GRID_SIDE: f64 = 0.01;
pub const DEFAULT_MC_PER_SQUARE: usize = 100;
pub const DEFAULT_BANDWIDTH: f64 = 0.02;

/// Weight given to each removable point and to the fitted intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestFunction {
    /// Constant one.
    #[default]
    Raw,
    /// `exp(h)`, `h` the local energy.
    InversePapangelou,
    /// `exp(h / 2)`.
    InverseSqrt,
}

impl TestFunction {
    /// Weight of a removable point whose local energy is `h`.
    fn member_weight(self, h: f64) -> f64 {
        match self {
            TestFunction::Raw => 1.0,
            TestFunction::InversePapangelou => h.exp(),
            TestFunction::InverseSqrt => (0.5 * h).exp(),
        }
    }

    /// Weight times `exp(-h)` at an allowed insertion with local energy `h`.
    fn compensator(self, h: f64) -> f64 {
        match self {
            TestFunction::Raw => (-h).exp(),
            TestFunction::InversePapangelou => 1.0,
            TestFunction::InverseSqrt => (-0.5 * h).exp(),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestFunction::Raw => "raw",
            TestFunction::InversePapangelou => "inverse",
            TestFunction::InverseSqrt => "pearson",
        })
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(TestFunction::Raw),
            "inverse" => Ok(TestFunction::InversePapangelou),
            "pearson" => Ok(TestFunction::InverseSqrt),
            other => Err(Error::InvalidInput(format!(
                "unknown test function {other:?}; expected raw, inverse or pearson"
            ))),
        }
    }
}

/// Parameters a residual is computed under: stationary intensity `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fitted {
    pub model: Model,
    pub theta: f64,
    pub z: f64,
}

impl From<&FitResult> for Fitted {
    fn from(fit: &FitResult) -> Self {
        Fitted {
            model: fit.model,
            theta: fit.theta_or_zero(),
            z: fit.z,
        }
    }
}

/// Removable points of `config` inside `window` with their test-function weights.
fn weighted_members(config: &PointConfiguration, fitted: &Fitted, psi: TestFunction, window: &Rect) -> Vec<(Point, f64)> {
    (0..config.len())
        .into_par_iter()
        .filter(|&i| window.contains(config.point(i)))
        .filter_map(|i| {
            member_statistic(config, i, &fitted.model).map(|t| (config.point(i), psi.member_weight(fitted.theta * t)))
        })
        .collect()
}

/// `z` times the integral of the compensator over `rect`, estimated from `points`.
fn compensator_integral(config: &PointConfiguration, fitted: &Fitted, psi: TestFunction, rect: &Rect, points: &[Point]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let sum: f64 = points
        .iter()
        .filter_map(|&x| birth_statistic(config, x, &fitted.model))
        .map(|s| psi.compensator(fitted.theta * s))
        .sum();
    fitted.z * rect.area() * sum / points.len() as f64
}

fn check_inside(window: &ObservationWindow, rect: &Rect) -> Result<()> {
    if window.inner.contains_rect(rect) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "region {:?}..{:?} is not inside the eroded window {:?}..{:?}",
            rect.lo, rect.hi, window.inner.lo, window.inner.hi
        )))
    }
}

/// Residual over `rect` with the integral estimated from the given points,
/// which should be uniform in `rect`.
pub fn residual_with_points(
    config: &PointConfiguration,
    rect: &Rect,
    psi: TestFunction,
    fitted: &Fitted,
    window: &ObservationWindow,
    points: &[Point],
) -> Result<f64> {
    check_inside(window, rect)?;
    let members: f64 = weighted_members(config, fitted, psi, rect).iter().map(|m| m.1).sum();
    Ok(members - compensator_integral(config, fitted, psi, rect, points))
}

/// Residual over `rect`, the integral from `mc_samples` uniform points.
pub fn residual(
    config: &PointConfiguration,
    rect: &Rect,
    psi: TestFunction,
    fitted: &Fitted,
    window: &ObservationWindow,
    mc_samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Point> = (0..mc_samples).map(|_| rect.sample(&mut rng)).collect();
    residual_with_points(config, rect, psi, fitted, window, &points)
}

/// Residuals on the squares of a regular grid covering the eroded window.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualGrid {
    pub side: f64,
    /// The eroded window the grid lies in; squares start at its lower corner.
    pub window: Rect,
    pub columns: usize,
    pub rows: usize,
    /// Row-major, `values[row * columns + column]`.
    pub values: Vec<f64>,
    pub fitted: Fitted,
    pub psi: TestFunction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSettings {
    pub side: f64,
    pub mc_per_square: usize,
    pub psi: TestFunction,
    pub seed: u64,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            side: DEFAULT_GRID_SIDE,
            mc_per_square: DEFAULT_MC_PER_SQUARE,
            psi: TestFunction::Raw,
            seed: 0,
        }
    }
}

/// Uniform points in square `index` of a grid, independent of every other square.
fn square_points(square: &Rect, count: usize, seed: u64, index: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..count).map(|_| square.sample(&mut rng)).collect()
}

/// Grid lines along one axis. Squares share their boundary values exactly,
/// so they tile without gaps.
#[derive(Debug, Clone, Copy)]
struct Lines {
    start: f64,
    side: f64,
    end: f64,
    count: usize,
}

impl Lines {
    fn at(&self, k: usize) -> f64 {
        (self.start + k as f64 * self.side).min(self.end)
    }

    /// Square holding coordinate `x`, assumed inside the covered range.
    fn slot(&self, x: f64) -> usize {
        let mut k = (((x - self.start) / self.side) as usize).min(self.count - 1);
        while k > 0 && x < self.at(k) {
            k -= 1;
        }
        while k + 1 < self.count && x >= self.at(k + 1) {
            k += 1;
        }
        k
    }
}

impl ResidualGrid {
    /// Squares of side `settings.side` tiling the eroded window from its lower
    /// corner; a partial last row or column is dropped.
    pub fn compute(
        config: &PointConfiguration,
        fitted: &Fitted,
        window: &ObservationWindow,
        settings: &GridSettings,
    ) -> Result<Self> {
        let side = settings.side;
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidInput(format!("grid side must be positive, got {side}")));
        }
        let inner = window.inner;
        let fit = |len: f64| ((len / side) * (1.0 + 1e-12)).floor() as usize;
        let (columns, rows) = (fit(inner.width()), fit(inner.height()));
        if columns == 0 || rows == 0 {
            return Err(Error::InvalidInput(format!(
                "eroded window {}x{} holds no square of side {side}",
                inner.width(),
                inner.height()
            )));
        }
        let mut grid = ResidualGrid {
            side,
            window: inner,
            columns,
            rows,
            values: Vec::new(),
            fitted: *fitted,
            psi: settings.psi,
        };
        grid.values = (0..columns * rows)
            .into_par_iter()
            .map(|index| {
                let sq = grid.square(index % columns, index / columns);
                let points = square_points(&sq, settings.mc_per_square, settings.seed, index);
                -compensator_integral(config, fitted, settings.psi, &sq, &points)
            })
            .collect();
        let covered = Rect::new(inner.lo, grid.square(columns - 1, rows - 1).hi)?;
        let (xs, ys) = grid.lines();
        for (p, w) in weighted_members(config, fitted, settings.psi, &covered) {
            grid.values[ys.slot(p.y()) * columns + xs.slot(p.x())] += w;
        }
        Ok(grid)
    }

    fn lines(&self) -> (Lines, Lines) {
        let axis = |d: usize, count| Lines {
            start: self.window.lo[d],
            side: self.side,
            end: self.window.hi[d],
            count,
        };
        (axis(0, self.columns), axis(1, self.rows))
    }

    pub fn square(&self, column: usize, row: usize) -> Rect {
        let (xs, ys) = self.lines();
        Rect::new([xs.at(column), ys.at(row)], [xs.at(column + 1), ys.at(row + 1)])
            .expect("grid square has positive size")
    }

    pub fn value(&self, column: usize, row: usize) -> f64 {
        self.values[row * self.columns + column]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Values in increasing order.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Gaussian-kernel smoothing of the residual measure, as a density per
    /// unit area at each square center. Each value is divided by the kernel
    /// mass that falls on the grid, which corrects for the grid edges.
    pub fn smoothed(&self, bandwidth: f64) -> Result<Vec<f64>> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidInput(format!("bandwidth must be positive, got {bandwidth}")));
        }
        let reach = (4.0 * bandwidth / self.side).ceil() as isize;
        let kernel: Vec<f64> = (-reach..=reach)
            .map(|k| (-0.5 * (k as f64 * self.side / bandwidth).powi(2)).exp())
            .collect();
        let area = self.side * self.side;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * bandwidth * bandwidth);
        let (c, r) = (self.columns as isize, self.rows as isize);
        let out = (0..r * c)
            .map(|index| {
                let (i, j) = (index % c, index / c);
                let (mut sum, mut mass) = (0.0, 0.0);
                for dj in -reach..=reach {
                    let jj = j + dj;
                    if !(0..r).contains(&jj) {
                        continue;
                    }
                    for di in -reach..=reach {
                        let ii = i + di;
                        if !(0..c).contains(&ii) {
                            continue;
                        }
                        let w = kernel[(di + reach) as usize] * kernel[(dj + reach) as usize] * norm;
                        sum += w * self.values[(jj * c + ii) as usize];
                        mass += w * area;
                    }
                }
                sum / mass
            })
            .collect();
        Ok(out)
    }

    /// `column,row,value` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,value\n");
        for j in 0..self.rows {
            for i in 0..self.columns {
                out.push_str(&format!("{i},{j},{}\n", self.value(i, j)));
            }
        }
        out
    }
}
