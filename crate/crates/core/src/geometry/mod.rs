//! Periodic Delaunay and Voronoi tessellations of the unit torus.

mod configuration;
pub mod local;
pub mod delaunay;
mod lattice;
mod point;
pub mod predicates;
pub mod stats;
mod tessellation;

pub use configuration::PointConfiguration;
pub use point::{min_image, wrap_coord, wrap_to_torus, Point, PointId, Vec2, QUANTUM};
pub use stats::{CellStats, TriangleStats};
pub use tessellation::{Edge, Tessellation, Triangle, Vertex, VoronoiCell, MIN_POINTS};
pub use local::{Change, Kind};
pub use lattice::{lattice_rows, triangular_lattice};
