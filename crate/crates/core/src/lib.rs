//! Numerical toolkit for contact isotopies of spheres, unbounded star-shaped
//! domains in `R^{2n}` around the coordinate subspaces `Pi_k`, their action
//! spectra and capacities, and the relative-growth pseudo-metric on the cone
//! of positive contact Hamiltonians.

pub mod capacity;
pub mod config;
pub mod contact;
pub mod domains;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod metric;
pub mod num17;
pub mod orbits;
pub mod quadrature;
pub mod sampling;
pub mod well;

pub use error::{Error, Result};

/// Artifact version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
