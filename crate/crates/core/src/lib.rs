//! Random walks on Fuchsian groups.
//!
//! Builds the octagon surface groups and hyperbolic triangle groups, estimates
//! the drift of their simple random walks three ways (Monte Carlo, exact
//! enumeration, transfer-operator pressure), bounds the Avez entropy, and
//! turns the two into dimension bounds for the harmonic measure.

pub mod config;
pub mod dimension;
pub mod entropy;
pub mod groups;
pub mod harness;
pub mod hyperbolic;
pub mod persist;
pub mod render;
pub mod spectral;
pub mod walk;

pub use groups::{GeneratorSet, GroupPreset};
pub use hyperbolic::{BoundaryPoint, DiskPoint, GeodesicArc, Isometry};
