//! Gibbs Delaunay-Voronoi tessellations on the unit torus: simulation,
//! two-step estimation and residual diagnostics.

pub mod config;
pub mod energy;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod io;
pub mod residuals;
pub mod sampler;

pub use error::{Error, Result};
