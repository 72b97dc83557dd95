//! Experiment configuration files (TOML).
//!
//! ```toml
//! [model]
//! kind = "volume-ratio"
//! alpha = 0.05
//! shape = 0.625
//! theta = 0.5
//! z = 100
//!
//! [sampler]
//! iters = 200000
//! seed = 1
//! ```
//!
//! Hardcore bounds may be given as `"none"` or left out to make them
//! inactive. Unknown keys are errors.

use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

use crate::energy::{HardcoreParams, Intensity, Model, ModelKind};
use crate::error::{Error, Result};
use crate::estimation::{model_kind, FitOptions, DEFAULT_MC_SAMPLES};
use crate::residuals::{
    GridSettings, QqSettings, TestFunction, DEFAULT_BANDWIDTH, DEFAULT_GRID_SIDE, DEFAULT_MC_PER_SQUARE,
};
use crate::sampler::{default_iterations, ProposalParams, RunSettings, DEFAULT_SIGMA};

/// A number, or the keyword `"none"` for an inactive value.
fn optional_number<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    struct OptionalNumber;

    impl Visitor<'_> for OptionalNumber {
        type Value = Option<f64>;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a number or \"none\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
            Ok(Some(v))
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
            Ok(Some(v as f64))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
            Ok(Some(v as f64))
        }

        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
            if v == "none" {
                Ok(None)
            } else {
                Err(E::invalid_value(de::Unexpected::Str(v), &self))
            }
        }
    }

    d.deserialize_any(OptionalNumber)
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialSection {
    pub scale: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: String,
    #[serde(default, deserialize_with = "optional_number")]
    pub exponent: Option<f64>,
    #[serde(default, deserialize_with = "optional_number")]
    pub min_angle: Option<f64>,
    #[serde(default, deserialize_with = "optional_number")]
    pub eps: Option<f64>,
    #[serde(default, deserialize_with = "optional_number")]
    pub alpha: Option<f64>,
    #[serde(default, deserialize_with = "optional_number")]
    pub shape: Option<f64>,
    #[serde(default)]
    pub theta: f64,
    /// Stationary intensity; exclusive with `radial`.
    #[serde(default, deserialize_with = "optional_number")]
    pub z: Option<f64>,
    pub radial: Option<RadialSection>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub iters: Option<u64>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_monitor")]
    pub monitor_every: u64,
    #[serde(default = "default_monitor")]
    pub verify_every: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSection {
    #[serde(default, deserialize_with = "optional_number")]
    pub z_known: Option<f64>,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Width of the band removed from the window edges; automatic when absent.
    #[serde(default, deserialize_with = "optional_number")]
    pub erosion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualsSection {
    #[serde(default = "default_grid_side")]
    pub grid_side: f64,
    #[serde(default = "default_n_boot")]
    pub n_boot: usize,
    pub iters_per_boot: Option<u64>,
    #[serde(default = "default_mc_per_square")]
    pub mc_per_square: usize,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    #[serde(default = "default_test_function")]
    pub test_function: String,
    #[serde(default)]
    pub seed: u64,
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}
fn default_monitor() -> u64 {
    1000
}
fn default_replications() -> usize {
    1
}
fn default_mc_samples() -> usize {
    DEFAULT_MC_SAMPLES
}
fn default_grid_side() -> f64 {
    DEFAULT_GRID_SIDE
}
fn default_n_boot() -> usize {
    100
}
fn default_mc_per_square() -> usize {
    DEFAULT_MC_PER_SQUARE
}
fn default_bandwidth() -> f64 {
    DEFAULT_BANDWIDTH
}
fn default_test_function() -> String {
    "raw".into()
}

macro_rules! section_default {
    ($t:ty) => {
        impl Default for $t {
            fn default() -> Self {
                toml::from_str("").expect("all fields have defaults")
            }
        }
    };
}
section_default!(SamplerSection);
section_default!(EstimationSection);
section_default!(ResidualsSection);

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelSection,
    #[serde(default)]
    sampler: SamplerSection,
    #[serde(default)]
    estimation: EstimationSection,
    #[serde(default)]
    residuals: ResidualsSection,
}

/// A parsed and validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: Model,
    pub theta: f64,
    pub intensity: Intensity,
    pub sampler: SamplerSection,
    pub estimation: EstimationSection,
    pub residuals: ResidualsSection,
}

fn field_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        location: field.into(),
        message: message.into(),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(field_error("file", "configuration is empty"));
        }
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
            location: match e.span() {
                Some(span) => format!("line {}", line_of(text, span.start)),
                None => "file".into(),
            },
            message: e.message().trim().to_string(),
        })?;
        Self::validate(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| field_error(&path.display().to_string(), format!("cannot read: {e}")))?;
        Self::parse(&text)
    }

    fn validate(raw: RawConfig) -> Result<Self> {
        let m = &raw.model;
        let kind = model_kind(&m.kind, m.exponent).map_err(|e| match e {
            Error::Config { message, .. } => field_error("model.kind", message),
            other => other,
        })?;
        if m.exponent.is_some() && !matches!(kind, ModelKind::VolumeRatio { .. }) {
            return Err(field_error("model.exponent", "only volume-ratio takes an exponent"));
        }
        let hardcore = HardcoreParams {
            min_angle: m.min_angle,
            eps: m.eps,
            alpha: m.alpha,
            shape: m.shape,
        };
        let model = Model::new(kind, hardcore)?;
        if m.theta != 0.0 && !model.has_theta() {
            return Err(field_error("model.theta", format!("{} has no smooth parameter", kind.name())));
        }
        if !m.theta.is_finite() {
            return Err(field_error("model.theta", "must be finite"));
        }
        let intensity = match (m.z, m.radial) {
            (Some(z), None) => Intensity::constant(z)?,
            (None, Some(r)) => Intensity::radial(r.scale, r.exponent)?,
            (None, None) => return Err(field_error("model", "give either z or a [model.radial] table")),
            (Some(_), Some(_)) => return Err(field_error("model", "z and [model.radial] are exclusive")),
        };
        ProposalParams::with_sigma(raw.sampler.sigma)?;
        if raw.sampler.replications == 0 {
            return Err(field_error("sampler.replications", "must be at least 1"));
        }
        if let Some(z) = raw.estimation.z_known {
            if !(z > 0.0 && z.is_finite()) {
                return Err(field_error("estimation.z_known", format!("must be positive, got {z}")));
            }
        }
        if raw.estimation.mc_samples == 0 {
            return Err(field_error("estimation.mc_samples", "must be positive"));
        }
        let r = &raw.residuals;
        if !(r.grid_side > 0.0 && r.grid_side <= 1.0) {
            return Err(field_error("residuals.grid_side", format!("must be in (0, 1], got {}", r.grid_side)));
        }
        if r.n_boot == 0 || r.mc_per_square == 0 {
            return Err(field_error("residuals", "n_boot and mc_per_square must be positive"));
        }
        if !(r.bandwidth > 0.0) {
            return Err(field_error("residuals.bandwidth", "must be positive"));
        }
        r.test_function.parse::<TestFunction>()?;
        Ok(ExperimentConfig {
            model,
            theta: m.theta,
            intensity,
            sampler: raw.sampler,
            estimation: raw.estimation,
            residuals: raw.residuals,
        })
    }

    pub fn iterations(&self) -> u64 {
        self.sampler.iters.unwrap_or_else(|| default_iterations(&self.model))
    }

    pub fn run_settings(&self) -> RunSettings {
        RunSettings {
            iterations: self.iterations(),
            monitor_every: self.sampler.monitor_every,
            verify_every: self.sampler.verify_every,
            seed: self.sampler.seed,
        }
    }

    pub fn proposal(&self) -> ProposalParams {
        ProposalParams {
            sigma: self.sampler.sigma,
            ..ProposalParams::default()
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            z_known: self.estimation.z_known,
            mc_samples: self.estimation.mc_samples,
            seed: self.estimation.seed,
            erosion: self.estimation.erosion,
            ..FitOptions::default()
        }
    }

    pub fn grid_settings(&self) -> GridSettings {
        GridSettings {
            side: self.residuals.grid_side,
            mc_per_square: self.residuals.mc_per_square,
            psi: self.residuals.test_function.parse().expect("validated"),
            seed: self.residuals.seed,
        }
    }

    pub fn qq_settings(&self) -> QqSettings {
        QqSettings {
            grid: self.grid_settings(),
            n_boot: self.residuals.n_boot,
            iters_per_boot: self.residuals.iters_per_boot,
            proposal: self.proposal(),
            seed: self.residuals.seed,
        }
    }
}
