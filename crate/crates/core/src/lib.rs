//! Stochastic Euler-Poincaré reduction on finite-dimensional Lie groups.
//!
//! - [`lie`]: algebras, matrix groups, invariant connections.
//! - [`semidirect`]: representations on `U`, dual actions, the diamond map.
//! - [`dissipation`]: noise bases, drift corrections, the operator `K`.
//! - [`reduced`]: the deterministic reduced equations and their variational residual.
//! - [`group_sde`]: Monte Carlo on the group, generator and drift checks.
//! - [`action`]: the action functional along deformed flows.

pub mod action;
pub mod coords;
pub mod dissipation;
pub mod document;
pub mod error;
pub mod group_sde;
pub mod lie;
pub mod reduced;
pub mod rng;
pub mod semidirect;
pub mod stats;

pub use coords::{AlgebraVector, CoVector, UCoVector, UVector};
pub use error::{Error, Result};
