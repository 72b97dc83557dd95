use thiserror::Error;

use crate::geometry::PointId;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration needs at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },

    #[error("duplicate point at ({x}, {y})")]
    DuplicatePoint { x: f64, y: f64 },

    #[error("points {ids:?} are cocircular and the tie cannot be broken")]
    Degenerate { ids: [PointId; 4] },

    #[error("periodic triangulation could not be certified (largest circumdisc exceeds the replicated region)")]
    TorusTooSparse,

    #[error("point {0} is not in the configuration")]
    UnknownPoint(PointId),

    #[error("no admissible lattice start for k in [{k_min}, {k_max}]")]
    NoAdmissibleStart { k_min: usize, k_max: usize },

    #[error("inestimable: {0}")]
    Inestimable(String),

    #[error("no root of the score equation in [{lo}, {hi}] (score {score_lo:.4e} .. {score_hi:.4e})")]
    NoRoot {
        lo: f64,
        hi: f64,
        score_lo: f64,
        score_hi: f64,
    },

    #[error("incremental energy statistic drifted: cached {cached}, recomputed {full}")]
    EnergyDrift { cached: f64, full: f64 },

    #[error("configuration error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
