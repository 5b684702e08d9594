//! Pseudo-spectral dissipative compressible MHD on the periodic torus and the
//! stochastic Lagrangian particle oracles that check its transport equations.

pub mod error;
pub mod flow;
pub mod mhd;
pub mod spectral;

pub use error::{FluidError, Result};
pub use spectral::{Grid, ScalarField, VectorField};
