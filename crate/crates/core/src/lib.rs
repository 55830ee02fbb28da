//! Numerical tools for the spherical grasshopper problem.
//!
//! A lawn covering half the unit sphere is encoded as binary spins on a
//! nearly uniform grid. A grasshopper starting at a random point of the lawn
//! jumps a fixed geodesic distance in a random direction; the crate finds
//! lawns maximising the chance that it lands on the lawn (or, with two
//! lawns, outside the second one) and analyses their shapes.

pub mod error;
pub mod geom;
pub mod grid;
pub mod interaction;
pub mod lawn;
pub mod annealer;
pub mod spectral;
pub mod analysis;
pub mod cogs;
pub mod pipeline;

pub use error::{Error, Result};
pub use grid::{GridKind, SphericalGrid};
