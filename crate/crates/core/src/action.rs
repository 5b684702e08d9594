//! The action functional along deformed stochastic flows, evaluated
//! deterministically, and the criticality check built on it.
//!
//! Deforming the flow by `e_ε(t)` with `e⁻¹ ė = ε v̇` (left; `ė e⁻¹ = ε v̇`
//! for right) changes the drift to
//! `½ Σ ∇_{Hᵋ_j} Hᵋ_j + Ad_{e⁻¹} w + ε v̇` with `Hᵋ = Ad_{e⁻¹} H` (right:
//! `Ad_e`), and the averaged advected quantity to `e⁻¹ α` (right: `α e⁻¹`).
//! Both depend only on deterministic data, so `J(ε)` needs no sampling.

use nalgebra::DMatrix;

use crate::coords::{AlgebraVector, UCoVector};
use crate::error::{check_dim, Error, Result};
use crate::lie::{Chirality, GroupElement};
use crate::reduced::{ReducedSystem, SineSeriesCurve, VariationCurve};
use crate::rng::CounterRng;
use crate::stats::trapezoid;

/// `J(ε) = ∫ l(u_ε, α_ε) dt` by the trapezoid rule on the sample grid.
pub fn action_value(
    sys: &ReducedSystem,
    u: &[AlgebraVector],
    alpha: &[UCoVector],
    dt: f64,
    epsilon: f64,
    curve: &dyn VariationCurve,
) -> Result<f64> {
    check_dim("alpha samples", u.len(), alpha.len())?;
    if u.is_empty() {
        return Ok(0.0);
    }
    let t_final = (u.len() - 1) as f64 * dt;
    let ends = curve.value(0.0).max_abs().max(curve.value(t_final).max_abs());
    if ends > 1e-12 {
        return Err(Error::Endpoint(format!("|v| = {ends:e} at an endpoint")));
    }
    let g = &sys.algebra;
    let chi = sys.variant.chirality;
    let deform = |t: f64, e: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let x = g.hat(&curve.derivative(t))? * epsilon;
        Ok(match chi {
            Chirality::Left => e * x,
            Chirality::Right => x * e,
        })
    };
    let mut e = g.identity()?.mat;
    let mut density = Vec::with_capacity(u.len());
    for (k, (uk, ak)) in u.iter().zip(alpha).enumerate() {
        let t = k as f64 * dt;
        if k > 0 {
            let t0 = t - dt;
            let k1 = deform(t0, &e)?;
            let k2 = deform(t0 + 0.5 * dt, &(&e + &k1 * (0.5 * dt)))?;
            let k3 = deform(t0 + 0.5 * dt, &(&e + &k2 * (0.5 * dt)))?;
            let k4 = deform(t, &(&e + &k3 * dt))?;
            e += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        let el = GroupElement::from_matrix(e.clone());
        let ad_by = match chi {
            Chirality::Left => el.inverse()?,
            Chirality::Right => el.clone(),
        };
        let mut drift = g.adjoint(&ad_by, &sys.drift1(uk))?;
        for h in &sys.noise.h1 {
            let he = g.adjoint(&ad_by, h)?;
            drift.axpy(0.5, &sys.connection.nabla(&he, &he)?);
        }
        drift.axpy(epsilon, &curve.derivative(t));
        let alpha_e = sys.representation.advect_dual(g, &el, ak)?;
        density.push(sys.lagrangian.value(&drift, &alpha_e));
    }
    Ok(trapezoid(&density, dt))
}

/// `dJ/dε` at zero by central differences.
pub fn action_derivative(
    sys: &ReducedSystem,
    u: &[AlgebraVector],
    alpha: &[UCoVector],
    dt: f64,
    curve: &dyn VariationCurve,
    epsilon: f64,
) -> Result<f64> {
    let p = action_value(sys, u, alpha, dt, epsilon, curve)?;
    let m = action_value(sys, u, alpha, dt, -epsilon, curve)?;
    Ok((p - m) / (2.0 * epsilon))
}

#[derive(Clone, Debug)]
pub struct CriticalityReport {
    pub derivatives: Vec<f64>,
    pub max_abs: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Step used for the central difference in `ε`.
pub const CRITICALITY_EPSILON: f64 = 1e-4;

/// Threshold on `|dJ/dε|` for a given grid step.
pub fn criticality_threshold(dt: f64) -> f64 {
    1e3 * dt * dt
}

/// The random directions used by `criticality_check`: sine series with
/// three modes and standard normal coefficients, one stream per direction.
pub fn criticality_directions(dim: usize, t_final: f64, n: usize, seed: u64) -> Vec<SineSeriesCurve> {
    let rng = CounterRng::new(seed);
    (0..n as u64)
        .map(|i| SineSeriesCurve::random(dim, 3, t_final, &rng, i))
        .collect()
}

/// `dJ/dε` over `n_directions` random directions; passes when the largest is
/// below `criticality_threshold(dt)`.
pub fn criticality_check(
    sys: &ReducedSystem,
    u: &[AlgebraVector],
    alpha: &[UCoVector],
    dt: f64,
    n_directions: usize,
    seed: u64,
) -> Result<CriticalityReport> {
    let t_final = (u.len().max(1) - 1) as f64 * dt;
    let curves = criticality_directions(sys.algebra.dim(), t_final, n_directions, seed);
    let derivatives = curves
        .iter()
        .map(|c| action_derivative(sys, u, alpha, dt, c, CRITICALITY_EPSILON))
        .collect::<Result<Vec<_>>>()?;
    let max_abs = derivatives.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let threshold = criticality_threshold(dt);
    Ok(CriticalityReport {
        derivatives,
        max_abs,
        threshold,
        pass: max_abs <= threshold,
    })
}
