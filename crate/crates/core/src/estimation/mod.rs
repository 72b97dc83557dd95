//! Two-step estimation: hardcore bounds from observed extremes, then the
//! smooth parameter and intensity by pseudo-likelihood over removable points.

mod hardcore;
mod pll;
mod report;
mod window;

pub use hardcore::{fit_hardcore, observed_extremes, FIT_SLACK};
pub use pll::{
    birth_statistic, increasing_root, mc_points, member_statistic, pll, PllTerms, DEFAULT_MC_SAMPLES,
    INITIAL_BRACKET, MAX_BRACKET,
};
pub(crate) use report::model_kind;
pub use report::{summarize, BatchSummary, Moments};
pub use window::{erosion_width, ObservationWindow, Rect};

use crate::energy::{Interaction, Model, ModelKind};
use crate::error::{Error, Result};
use crate::geometry::{PointConfiguration, Tessellation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub z_known: Option<f64>,
    pub mc_samples: usize,
    pub seed: u64,
    /// Overrides [`erosion_width`].
    pub erosion: Option<f64>,
    pub outer: Rect,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            z_known: None,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: 0,
            erosion: None,
            outer: Rect::unit(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Interaction with the fitted hardcore bounds.
    pub model: Model,
    /// `None` for interactions without a smooth part.
    pub theta: Option<f64>,
    pub z: f64,
    pub z_known: bool,
    pub points: usize,
    pub removable: usize,
    pub removable_in_window: usize,
    pub window: ObservationWindow,
    pub mc_samples: usize,
    pub seed: u64,
    /// Contrast at the estimate.
    pub pll: f64,
    /// Final root-search bracket.
    pub bracket: Option<[f64; 2]>,
}

impl FitResult {
    pub fn theta_or_zero(&self) -> f64 {
        self.theta.unwrap_or(0.0)
    }
}

/// Fits `template`'s active hardcore bounds, then `theta` and `z`.
pub fn fit(config: &PointConfiguration, template: &Model, options: &FitOptions) -> Result<FitResult> {
    let fitted = if template.kind == ModelKind::Poisson {
        *template
    } else {
        fit_hardcore(&Tessellation::build(config)?, &options.outer, template)?
    };
    let erosion = options.erosion.unwrap_or_else(|| erosion_width(&fitted, config.len()));
    let window = ObservationWindow::new(options.outer, erosion)?;
    let points = mc_points(&window.inner, options.mc_samples, options.seed);
    let terms = PllTerms::new(config, &fitted, &window.inner, &points);
    let smooth = estimate_smooth(&terms, &fitted, options.z_known)?;
    Ok(FitResult {
        model: fitted,
        theta: smooth.theta,
        z: smooth.z,
        z_known: options.z_known.is_some(),
        points: config.len(),
        removable: terms.removable_total(),
        removable_in_window: terms.removable_count(),
        window,
        mc_samples: options.mc_samples,
        seed: options.seed,
        pll: terms.value(smooth.z, smooth.theta.unwrap_or(0.0)),
        bracket: smooth.bracket,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothFit {
    pub theta: Option<f64>,
    pub z: f64,
    pub bracket: Option<[f64; 2]>,
}

/// Smooth parameter and intensity from precomputed contrast terms. With
/// `z_known` the score in `theta` is solved at that `z`; otherwise `z` is
/// profiled out first and recovered from the root.
pub fn estimate_smooth(terms: &PllTerms, model: &Model, z_known: Option<f64>) -> Result<SmoothFit> {
    if terms.removable_count() == 0 {
        return Err(Error::Inestimable("no removable points in the window".into()));
    }
    if terms.allowed_samples() == 0 {
        return Err(Error::Inestimable("no Monte Carlo point can be inserted".into()));
    }
    if let Some(z) = z_known {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidInput(format!("known z must be positive, got {z}")));
        }
    }
    if !(model.has_theta() && model.has_smooth_part()) {
        let z = z_known.unwrap_or_else(|| terms.z_hat(0.0));
        return Ok(SmoothFit { theta: None, z, bracket: None });
    }
    let (theta, bracket) = match z_known {
        Some(z) => increasing_root(|t| terms.score(z, t))?,
        None => increasing_root(|t| terms.profile_score(t))?,
    };
    let z = z_known.unwrap_or_else(|| terms.z_hat(theta));
    Ok(SmoothFit { theta: Some(theta), z, bracket: Some(bracket) })
}
