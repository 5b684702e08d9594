//! so(3) systems built from `[system]`.

use std::sync::Arc;

use epsim_core::dissipation::NoiseBasis;
use epsim_core::lie::{Connection, LieAlgebra};
use epsim_core::reduced::{EpVariant, QuadraticLagrangian, ReducedState, ReducedSystem};
use epsim_core::semidirect::Representation;
use epsim_core::{AlgebraVector, Result, UCoVector};
use nalgebra::{DMatrix, DVector};

use crate::config::{ConnectionKind, LagrangianKind, SystemConfig};

pub fn connection(g: &LieAlgebra, s: &SystemConfig) -> Result<Connection> {
    match s.connection {
        ConnectionKind::LeviCivita => {
            let metric = DMatrix::from_diagonal(&DVector::from_row_slice(&s.inertia));
            Connection::levi_civita(g, &metric, s.chirality)
        }
        ConnectionKind::BiInvariant => Ok(Connection::bi_invariant(g, s.chirality)),
    }
}

/// `σ·{e₁, e₂, e₃}`, empty for `σ = 0`.
pub fn scaled_basis(sigma: f64) -> Vec<AlgebraVector> {
    if sigma == 0.0 {
        return Vec::new();
    }
    (0..3).map(|i| AlgebraVector::basis(3, i) * sigma).collect()
}

pub fn build(s: &SystemConfig) -> Result<ReducedSystem> {
    let g = LieAlgebra::so3();
    let conn = connection(&g, s)?;
    let rep = Representation::so3_vector(&g, s.chirality)?;
    let noise = NoiseBasis::new(3, scaled_basis(s.noise_h1), scaled_basis(s.noise_h2))?;
    let lagrangian = match s.lagrangian {
        LagrangianKind::RigidBody => QuadraticLagrangian::rigid_body(&s.inertia, 3),
        LagrangianKind::HeavyTop => {
            QuadraticLagrangian::heavy_top(&s.inertia, s.mgl.unwrap_or(0.0), s.chi.unwrap_or([0.0; 3]))
        }
    };
    let variant = EpVariant { chirality: s.chirality, connection_correction: s.connection_correction };
    ReducedSystem::new(g, conn, rep, noise, variant, Arc::new(lagrangian))
}

pub fn initial_state(s: &SystemConfig) -> ReducedState {
    ReducedState { t: 0.0, u: AlgebraVector::from_slice(&s.u0), alpha: UCoVector::from_slice(&s.alpha0) }
}
