//! Deterministic reduced equations for the averaged momentum and advected
//! quantity, their RK4 integration, and the constrained-variation residual.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::coords::{AlgebraVector, CoVector, UCoVector, UVector};
use crate::dissipation::{connection_drift, KOperator, NoiseBasis};
use crate::error::{check_dim, Error, Result};
use crate::lie::{Chirality, Connection, LieAlgebra};
use crate::rng::CounterRng;
use crate::semidirect::Representation;
use crate::stats::trapezoid;

/// Reduced Lagrangian `l(u, alpha)` and its functional derivatives.
pub trait Lagrangian: Send + Sync {
    fn value(&self, u: &AlgebraVector, alpha: &UCoVector) -> f64;
    fn dl_du(&self, u: &AlgebraVector, alpha: &UCoVector) -> CoVector;
    fn dl_dalpha(&self, u: &AlgebraVector, alpha: &UCoVector) -> UVector;
    /// Inverse of `u -> dl_du(u, alpha)`.
    fn u_from_momentum(&self, mu: &CoVector, alpha: &UCoVector) -> Result<AlgebraVector>;
}

/// `l(u, alpha) = ½ uᵀ I u + <alpha, c>`.
#[derive(Clone, Debug)]
pub struct QuadraticLagrangian {
    inertia: DMatrix<f64>,
    inverse: Option<DMatrix<f64>>,
    coupling: UVector,
}

impl QuadraticLagrangian {
    pub fn new(inertia: DMatrix<f64>, coupling: UVector) -> Result<Self> {
        if !inertia.is_square() {
            return Err(Error::MomentumInversion("inertia must be square".into()));
        }
        if (&inertia - inertia.transpose()).amax() > 1e-14 * inertia.amax().max(1.0) {
            return Err(Error::MomentumInversion("inertia must be symmetric".into()));
        }
        let inverse = inertia.clone().try_inverse();
        Ok(Self {
            inertia,
            inverse,
            coupling,
        })
    }

    /// Free rigid body with principal moments `moments`; `dim_u` sizes the
    /// (uncoupled) advected space.
    pub fn rigid_body(moments: &[f64], dim_u: usize) -> Self {
        Self::new(
            DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(moments)),
            UVector::zeros(dim_u),
        )
        .expect("diagonal inertia is symmetric")
    }

    /// Heavy top: `l = ½ u·I u - m g l Γ·χ`, with `α = Γ` and `χ` the body
    /// vector from the fixed point to the centre of mass.
    pub fn heavy_top(moments: &[f64], mgl: f64, chi: [f64; 3]) -> Self {
        Self::new(
            DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(moments)),
            UVector::from_slice(&chi) * -mgl,
        )
        .expect("diagonal inertia is symmetric")
    }

    pub fn inertia(&self) -> &DMatrix<f64> {
        &self.inertia
    }

    pub fn coupling(&self) -> &UVector {
        &self.coupling
    }
}

impl Lagrangian for QuadraticLagrangian {
    fn value(&self, u: &AlgebraVector, alpha: &UCoVector) -> f64 {
        0.5 * u.0.dot(&(&self.inertia * &u.0)) + alpha.pair(&self.coupling)
    }

    fn dl_du(&self, u: &AlgebraVector, _alpha: &UCoVector) -> CoVector {
        CoVector(&self.inertia * &u.0)
    }

    fn dl_dalpha(&self, _u: &AlgebraVector, _alpha: &UCoVector) -> UVector {
        self.coupling.clone()
    }

    fn u_from_momentum(&self, mu: &CoVector, _alpha: &UCoVector) -> Result<AlgebraVector> {
        let inv = self
            .inverse
            .as_ref()
            .ok_or_else(|| Error::MomentumInversion("inertia is singular".into()))?;
        check_dim("u_from_momentum", inv.nrows(), mu.dim())?;
        Ok(AlgebraVector(inv * &mu.0))
    }
}

/// Which of the four reduced systems: left or right invariance, with or
/// without the connection correction in the drift.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpVariant {
    pub chirality: Chirality,
    pub connection_correction: bool,
}

impl EpVariant {
    pub const ALL: [EpVariant; 4] = [
        EpVariant { chirality: Chirality::Left, connection_correction: true },
        EpVariant { chirality: Chirality::Left, connection_correction: false },
        EpVariant { chirality: Chirality::Right, connection_correction: true },
        EpVariant { chirality: Chirality::Right, connection_correction: false },
    ];

    pub fn label(&self) -> &'static str {
        match (self.chirality, self.connection_correction) {
            (Chirality::Left, true) => "left-corrected",
            (Chirality::Left, false) => "left-plain",
            (Chirality::Right, true) => "right-corrected",
            (Chirality::Right, false) => "right-plain",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedState {
    pub t: f64,
    pub u: AlgebraVector,
    pub alpha: UCoVector,
}

/// Number of uniform steps of size `dt` covering `[0, t_final]`; `dt` must
/// divide `t_final` to 1e-12 relative.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0 && t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "need dt > 0 and t_final >= 0 (dt = {dt}, t_final = {t_final})"
        )));
    }
    let n = (t_final / dt).round();
    if (n * dt - t_final).abs() > 1e-12 * t_final.max(dt) {
        return Err(Error::InvalidSpec(format!(
            "dt = {dt} does not divide t_final = {t_final}"
        )));
    }
    Ok(n as usize)
}

/// `½ Σ_j H_j(H_j α) - w α`, the averaged advection law for drift `w`.
pub fn advection_rhs(
    rep: &Representation,
    h2: &[AlgebraVector],
    w: &AlgebraVector,
    alpha: &UCoVector,
) -> Result<UCoVector> {
    let mut out = -rep.act_dual(w, alpha)?;
    for h in h2 {
        let once = rep.act_dual(h, alpha)?;
        out.axpy(0.5, &rep.act_dual(h, &once)?);
    }
    Ok(out)
}

/// RK4 for `advection_rhs` with a prescribed drift `w(t)`; returns samples at
/// every multiple of `dt`.
pub fn integrate_advection(
    rep: &Representation,
    h2: &[AlgebraVector],
    w: &dyn Fn(f64) -> AlgebraVector,
    alpha0: &UCoVector,
    t_final: f64,
    dt: f64,
) -> Result<Vec<UCoVector>> {
    let n = step_count(t_final, dt)?;
    let mut out = Vec::with_capacity(n + 1);
    let mut a = alpha0.clone();
    out.push(a.clone());
    for k in 0..n {
        let t = k as f64 * dt;
        let f = |t: f64, a: &UCoVector| advection_rhs(rep, h2, &w(t), a);
        let k1 = f(t, &a)?;
        let k2 = f(t + 0.5 * dt, &(&a + &(&k1 * (0.5 * dt))))?;
        let k3 = f(t + 0.5 * dt, &(&a + &(&k2 * (0.5 * dt))))?;
        let k4 = f(t + dt, &(&a + &(&k3 * dt)))?;
        a = &a + &((k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0));
        out.push(a.clone());
    }
    Ok(out)
}

/// Curve in the algebra used to generate constrained variations.
pub trait VariationCurve: Sync {
    fn value(&self, t: f64) -> AlgebraVector;
    fn derivative(&self, t: f64) -> AlgebraVector;
}

/// `v(t) = Σ_m c_m sin(m π t / T)`, vanishing at both ends.
#[derive(Clone, Debug)]
pub struct SineSeriesCurve {
    pub t_final: f64,
    pub coeffs: Vec<AlgebraVector>,
}

impl SineSeriesCurve {
    pub fn zero(dim: usize, t_final: f64) -> Self {
        Self {
            t_final,
            coeffs: vec![AlgebraVector::zeros(dim)],
        }
    }

    /// Standard normal coefficients from stream `index` of `rng`.
    pub fn random(dim: usize, modes: usize, t_final: f64, rng: &CounterRng, index: u64) -> Self {
        let mut s = rng.stream(index);
        let coeffs = (0..modes)
            .map(|_| {
                let mut c = vec![0.0; dim];
                s.fill_normal(&mut c);
                AlgebraVector::new(c)
            })
            .collect();
        Self { t_final, coeffs }
    }
}

impl VariationCurve for SineSeriesCurve {
    fn value(&self, t: f64) -> AlgebraVector {
        let mut v = AlgebraVector::zeros(self.coeffs[0].dim());
        for (m, c) in self.coeffs.iter().enumerate() {
            let w = (m + 1) as f64 * std::f64::consts::PI / self.t_final;
            v.axpy((w * t).sin(), c);
        }
        v
    }

    fn derivative(&self, t: f64) -> AlgebraVector {
        let mut v = AlgebraVector::zeros(self.coeffs[0].dim());
        for (m, c) in self.coeffs.iter().enumerate() {
            let w = (m + 1) as f64 * std::f64::consts::PI / self.t_final;
            v.axpy(w * (w * t).cos(), c);
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<ReducedState>,
    pub momenta: Vec<CoVector>,
}

impl Trajectory {
    pub fn t_final(&self) -> f64 {
        self.states.last().map(|s| s.t).unwrap_or(0.0)
    }

    pub fn last(&self) -> &ReducedState {
        self.states.last().expect("trajectory has an initial state")
    }
}

/// A reduced system: algebra, connection, representation, noise, Lagrangian,
/// and which of the four variants is meant. The dissipation matrix and drift
/// corrections are assembled once.
#[derive(Clone)]
pub struct ReducedSystem {
    pub algebra: LieAlgebra,
    pub connection: Connection,
    pub representation: Representation,
    pub noise: NoiseBasis,
    pub variant: EpVariant,
    pub lagrangian: Arc<dyn Lagrangian>,
    k: KOperator,
    correction1: AlgebraVector,
    correction2: AlgebraVector,
}

impl ReducedSystem {
    pub fn new(
        algebra: LieAlgebra,
        connection: Connection,
        representation: Representation,
        noise: NoiseBasis,
        variant: EpVariant,
        lagrangian: Arc<dyn Lagrangian>,
    ) -> Result<Self> {
        let n = algebra.dim();
        check_dim("connection", n, connection.dim())?;
        check_dim("representation", n, representation.algebra_dim())?;
        if connection.chirality() != variant.chirality {
            return Err(Error::ChiralityMismatch(format!(
                "{:?} connection used with a {:?} variant",
                connection.chirality(),
                variant.chirality
            )));
        }
        if representation.chirality() != variant.chirality {
            return Err(Error::ChiralityMismatch(format!(
                "{:?} representation used with a {:?} variant",
                representation.chirality(),
                variant.chirality
            )));
        }
        let noise = NoiseBasis::new(n, noise.h1, noise.h2)?;
        let k = KOperator::assemble(&algebra, &noise.h1, &connection)?;
        let correction1 = connection_drift(n, &noise.h1, &connection)?;
        let correction2 = connection_drift(n, &noise.h2, &connection)?;
        Ok(Self {
            algebra,
            connection,
            representation,
            noise,
            variant,
            lagrangian,
            k,
            correction1,
            correction2,
        })
    }

    pub fn k_operator(&self) -> &KOperator {
        &self.k
    }

    /// Drift argument of the momentum equation (`ũ¹` or `u`).
    pub fn drift1(&self, u: &AlgebraVector) -> AlgebraVector {
        if self.variant.connection_correction {
            u - &self.correction1
        } else {
            u.clone()
        }
    }

    /// Drift argument of the advection equation (`ũ²` or `u`).
    pub fn drift2(&self, u: &AlgebraVector) -> AlgebraVector {
        if self.variant.connection_correction {
            u - &self.correction2
        } else {
            u.clone()
        }
    }

    fn check_state(&self, u: &AlgebraVector, alpha: &UCoVector) -> Result<()> {
        check_dim("state u", self.algebra.dim(), u.dim())?;
        check_dim("state alpha", self.representation.dim_u(), alpha.dim())?;
        if !u.is_finite() || !alpha.is_finite() {
            return Err(Error::NonFinite("reduced state".into()));
        }
        Ok(())
    }

    /// Time derivatives of `(μ, α)` at the given state.
    pub fn ep_rhs(&self, state: &ReducedState) -> Result<(CoVector, UCoVector)> {
        self.check_state(&state.u, &state.alpha)?;
        let mu = self.lagrangian.dl_du(&state.u, &state.alpha);
        self.rhs(&state.u, &mu, &state.alpha)
    }

    fn rhs(&self, u: &AlgebraVector, mu: &CoVector, alpha: &UCoVector) -> Result<(CoVector, UCoVector)> {
        let s = self.variant.chirality.sign();
        let w1 = self.drift1(u);
        let mut dmu = self.algebra.ad_star(&w1, mu)? * s;
        dmu += &self.representation.diamond(&self.lagrangian.dl_dalpha(u, alpha), alpha)?;
        dmu.axpy(s, &self.k.apply(mu)?);
        let dalpha = advection_rhs(&self.representation, &self.noise.h2, &self.drift2(u), alpha)?;
        Ok((dmu, dalpha))
    }

    fn rhs_momentum(&self, mu: &CoVector, alpha: &UCoVector) -> Result<(CoVector, UCoVector)> {
        let u = self.lagrangian.u_from_momentum(mu, alpha)?;
        self.rhs(&u, mu, alpha)
    }

    /// Classical RK4 in `(μ, α)`, recovering `u` at every stage.
    pub fn integrate(&self, state0: &ReducedState, t_final: f64, dt: f64) -> Result<Trajectory> {
        self.check_state(&state0.u, &state0.alpha)?;
        let n = step_count(t_final, dt)?;
        let mut mu = self.lagrangian.dl_du(&state0.u, &state0.alpha);
        let mut alpha = state0.alpha.clone();
        let mut states = Vec::with_capacity(n + 1);
        let mut momenta = Vec::with_capacity(n + 1);
        states.push(ReducedState {
            t: state0.t,
            u: self.lagrangian.u_from_momentum(&mu, &alpha)?,
            alpha: alpha.clone(),
        });
        momenta.push(mu.clone());
        for k in 0..n {
            let (k1m, k1a) = self.rhs_momentum(&mu, &alpha)?;
            let h = 0.5 * dt;
            let (k2m, k2a) = self.rhs_momentum(&(&mu + &(&k1m * h)), &(&alpha + &(&k1a * h)))?;
            let (k3m, k3a) = self.rhs_momentum(&(&mu + &(&k2m * h)), &(&alpha + &(&k2a * h)))?;
            let (k4m, k4a) = self.rhs_momentum(&(&mu + &(&k3m * dt)), &(&alpha + &(&k3a * dt)))?;
            mu = &mu + &((k1m + k2m * 2.0 + k3m * 2.0 + k4m) * (dt / 6.0));
            alpha = &alpha + &((k1a + k2a * 2.0 + k3a * 2.0 + k4a) * (dt / 6.0));
            if !mu.is_finite() || !alpha.is_finite() {
                return Err(Error::NonFinite(format!("reduced state at step {}", k + 1)));
            }
            states.push(ReducedState {
                t: state0.t + (k + 1) as f64 * dt,
                u: self.lagrangian.u_from_momentum(&mu, &alpha)?,
                alpha: alpha.clone(),
            });
            momenta.push(mu.clone());
        }
        Ok(Trajectory { dt, states, momenta })
    }

    /// Integrand of the first variation of `∫ l dt` at one state.
    fn variation_density(
        &self,
        state: &ReducedState,
        v: &AlgebraVector,
        vdot: &AlgebraVector,
    ) -> Result<f64> {
        let s = self.variant.chirality.sign();
        let w1 = self.drift1(&state.u);
        let mut du = vdot.clone();
        du.axpy(s, &self.algebra.bracket(&w1, v)?);
        du.axpy(s, &self.k.apply_adjoint(v)?);
        let dalpha = -self.representation.act_dual(v, &state.alpha)?;
        let mu = self.lagrangian.dl_du(&state.u, &state.alpha);
        let dla = self.lagrangian.dl_dalpha(&state.u, &state.alpha);
        Ok(mu.pair(&du) + dalpha.pair(&dla))
    }

    /// First variation of the action along `traj` under the constrained
    /// variations generated by `curve`, by the trapezoid rule. Vanishes (to
    /// quadrature and integrator order) exactly when `traj` solves the
    /// reduced equations.
    pub fn variation_residual(&self, traj: &Trajectory, curve: &dyn VariationCurve) -> Result<f64> {
        let (t0, t1) = (traj.states[0].t, traj.t_final());
        let ends = curve.value(t0).max_abs().max(curve.value(t1).max_abs());
        if ends > 1e-12 {
            return Err(Error::Endpoint(format!("|v| = {ends:e} at an endpoint")));
        }
        let vals = traj
            .states
            .iter()
            .map(|st| self.variation_density(st, &curve.value(st.t), &curve.derivative(st.t)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(trapezoid(&vals, traj.dt))
    }

    /// Column names for `write_csv`.
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=self.algebra.dim()).map(|i| format!("u_{i}")));
        h.extend((1..=self.representation.dim_u()).map(|i| format!("alpha_{i}")));
        h.extend(["energy", "mu_norm", "alpha_norm", "mu_dot_alpha"].map(String::from));
        h
    }

    /// One CSV row per sample: state, then energy `<μ,u> - l`, `|μ|`, `|α|`
    /// and `<μ, α>` (blank unless the two spaces have equal dimension).
    pub fn write_csv<W: Write>(&self, traj: &Trajectory, out: &mut W) -> Result<()> {
        writeln!(out, "{}", self.csv_header().join(","))?;
        for (st, mu) in traj.states.iter().zip(&traj.momenta) {
            let mut row: Vec<String> = vec![st.t.to_string()];
            row.extend(st.u.as_slice().iter().map(|x| x.to_string()));
            row.extend(st.alpha.as_slice().iter().map(|x| x.to_string()));
            let energy = mu.pair(&st.u) - self.lagrangian.value(&st.u, &st.alpha);
            row.push(energy.to_string());
            row.push(mu.norm().to_string());
            row.push(st.alpha.norm().to_string());
            row.push(if mu.dim() == st.alpha.dim() {
                mu.0.dot(&st.alpha.0).to_string()
            } else {
                String::new()
            });
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semidirect::Representation;
    use proptest::prelude::*;

    const MOMENTS: [f64; 3] = [1.0, 2.0, 3.0];

    fn rigid_body(chi: Chirality) -> ReducedSystem {
        let g = LieAlgebra::so3();
        let conn = Connection::bi_invariant(&g, chi);
        let rep = Representation::trivial(&g, 1, chi).unwrap();
        ReducedSystem::new(
            g,
            conn,
            rep,
            NoiseBasis::empty(),
            EpVariant { chirality: chi, connection_correction: true },
            Arc::new(QuadraticLagrangian::rigid_body(&MOMENTS, 1)),
        )
        .unwrap()
    }

    fn heavy_top(noise: NoiseBasis, variant: EpVariant) -> ReducedSystem {
        let g = LieAlgebra::so3();
        let metric = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&MOMENTS));
        let conn = Connection::levi_civita(&g, &metric, variant.chirality).unwrap();
        let rep = Representation::so3_vector(&g, variant.chirality).unwrap();
        ReducedSystem::new(
            g,
            conn,
            rep,
            noise,
            variant,
            Arc::new(QuadraticLagrangian::heavy_top(&MOMENTS, 1.0, [0.0, 0.0, 1.0])),
        )
        .unwrap()
    }

    fn left() -> EpVariant {
        EpVariant { chirality: Chirality::Left, connection_correction: true }
    }

    fn top_state() -> ReducedState {
        ReducedState {
            t: 0.0,
            u: AlgebraVector::from_slice(&[0.4, -0.3, 1.1]),
            alpha: UCoVector::from_slice(&[0.2, 0.5, 0.8]),
        }
    }

    #[test]
    fn rigid_body_rhs_is_euler() {
        let sys = rigid_body(Chirality::Left);
        let u = AlgebraVector::from_slice(&[0.3, -1.2, 0.7]);
        let st = ReducedState { t: 0.0, u: u.clone(), alpha: UCoVector::zeros(1) };
        let (dmu, dalpha) = sys.ep_rhs(&st).unwrap();
        // Classical Euler equations I1 w1' = (I2 - I3) w2 w3, cyclic.
        let (w, i) = (u.as_slice(), MOMENTS);
        let euler = [
            (i[1] - i[2]) * w[1] * w[2],
            (i[2] - i[0]) * w[2] * w[0],
            (i[0] - i[1]) * w[0] * w[1],
        ];
        for k in 0..3 {
            assert!((dmu[k] - euler[k]).abs() < 1e-14);
        }
        assert_eq!(dalpha.max_abs(), 0.0);
    }

    #[test]
    fn heavy_top_rhs_matches_classical_form() {
        let sys = heavy_top(NoiseBasis::empty(), left());
        let st = top_state();
        let (dmu, dgamma) = sys.ep_rhs(&st).unwrap();
        let pi = [MOMENTS[0] * st.u[0], MOMENTS[1] * st.u[1], MOMENTS[2] * st.u[2]];
        let cross = |a: [f64; 3], b: [f64; 3]| {
            [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
        };
        let om = [st.u[0], st.u[1], st.u[2]];
        let ga = [st.alpha[0], st.alpha[1], st.alpha[2]];
        let a = cross(pi, om);
        let b = cross(ga, [0.0, 0.0, 1.0]);
        let c = cross(ga, om);
        for k in 0..3 {
            assert!((dmu[k] - (a[k] + b[k])).abs() < 1e-14);
            assert!((dgamma[k] - c[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn advection_noise_decay_matches_matrix_exponential() {
        let eps = 0.4;
        let g = LieAlgebra::so3();
        let rep = Representation::so3_vector(&g, Chirality::Left).unwrap();
        let h: Vec<_> = (0..3).map(|i| g.basis(i) * eps).collect();
        let sys = ReducedSystem::new(
            g.clone(),
            Connection::bi_invariant(&g, Chirality::Left),
            rep.clone(),
            NoiseBasis { h1: vec![], h2: h.clone() },
            left(),
            Arc::new(QuadraticLagrangian::rigid_body(&MOMENTS, 3)),
        )
        .unwrap();
        let alpha0 = UCoVector::from_slice(&[1.0, -0.5, 0.25]);
        let st = ReducedState { t: 0.0, u: g.zero(), alpha: alpha0.clone() };
        let traj = sys.integrate(&st, 2.0, 0.01).unwrap();
        let mut gen = DMatrix::zeros(3, 3);
        for hj in &h {
            let r = rep.rho_of(hj).unwrap().transpose();
            gen += &r * &r * 0.5;
        }
        let oracle = (gen * 2.0).exp() * &alpha0.0;
        assert!((&traj.last().alpha.0 - oracle).amax() < 1e-10);
        assert!(traj.last().u.max_abs() == 0.0);
    }

    #[test]
    fn zero_rhs_gives_constant_trajectory() {
        let g = LieAlgebra::abelian(2);
        let conn = Connection::flat(&g, Chirality::Left);
        let rep = Representation::trivial(&g, 2, Chirality::Left).unwrap();
        let sys = ReducedSystem::new(
            g,
            conn,
            rep,
            NoiseBasis::empty(),
            left(),
            Arc::new(QuadraticLagrangian::rigid_body(&[1.0, 3.0], 2)),
        )
        .unwrap();
        let st = ReducedState {
            t: 0.0,
            u: AlgebraVector::from_slice(&[0.5, -1.0]),
            alpha: UCoVector::from_slice(&[2.0, 1.0]),
        };
        let traj = sys.integrate(&st, 1.0, 0.1).unwrap();
        assert_eq!(traj.states.len(), 11);
        for s in &traj.states {
            assert_eq!(s.u, st.u);
            assert_eq!(s.alpha, st.alpha);
        }
    }

    #[test]
    fn rigid_body_conserves_momentum_norm() {
        let sys = rigid_body(Chirality::Left);
        let st = ReducedState {
            t: 0.0,
            u: AlgebraVector::from_slice(&[0.3, 1.0, -0.6]),
            alpha: UCoVector::zeros(1),
        };
        let traj = sys.integrate(&st, 10.0, 1e-3).unwrap();
        let n0 = traj.momenta[0].norm();
        let drift = traj.momenta.iter().map(|m| (m.norm() - n0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-8, "drift {drift:e}");
    }

    #[test]
    fn heavy_top_casimirs_conserved() {
        let sys = heavy_top(NoiseBasis::empty(), left());
        let traj = sys.integrate(&top_state(), 10.0, 1e-3).unwrap();
        let a0 = traj.states[0].alpha.norm();
        let c0 = traj.momenta[0].0.dot(&traj.states[0].alpha.0);
        for (s, m) in traj.states.iter().zip(&traj.momenta) {
            assert!((s.alpha.norm() - a0).abs() < 1e-8);
            assert!((m.0.dot(&s.alpha.0) - c0).abs() < 1e-8);
        }
    }

    #[test]
    fn heavy_top_self_convergence_is_fourth_order() {
        let sys = heavy_top(NoiseBasis::scaled_basis(3, 0.2), left());
        let end = |dt: f64| {
            let t = sys.integrate(&top_state(), 2.0, dt).unwrap();
            let m = t.momenta.last().unwrap().clone();
            (m, t.last().alpha.clone())
        };
        let (mr, ar) = end(0.1 / 8.0);
        let err = |dt: f64| {
            let (m, a) = end(dt);
            (m - mr.clone()).max_abs().max((a - ar.clone()).max_abs())
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e1 / e2 >= 12.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn left_and_right_rigid_bodies_mirror() {
        let l = rigid_body(Chirality::Left);
        let r = rigid_body(Chirality::Right);
        let u0 = AlgebraVector::from_slice(&[0.3, 1.0, -0.6]);
        let sl = ReducedState { t: 0.0, u: u0.clone(), alpha: UCoVector::zeros(1) };
        let sr = ReducedState { t: 0.0, u: -u0, alpha: UCoVector::zeros(1) };
        let tl = l.integrate(&sl, 3.0, 1e-3).unwrap();
        let tr = r.integrate(&sr, 3.0, 1e-3).unwrap();
        for (a, b) in tl.momenta.iter().zip(&tr.momenta) {
            assert!((a + b).max_abs() < 1e-12);
        }
    }

    #[test]
    fn chirality_mismatch_rejected() {
        let g = LieAlgebra::so3();
        let err = ReducedSystem::new(
            g.clone(),
            Connection::bi_invariant(&g, Chirality::Right),
            Representation::trivial(&g, 1, Chirality::Left).unwrap(),
            NoiseBasis::empty(),
            left(),
            Arc::new(QuadraticLagrangian::rigid_body(&MOMENTS, 1)),
        );
        assert!(matches!(err, Err(Error::ChiralityMismatch(_))));
    }

    #[test]
    fn singular_inertia_is_reported() {
        let g = LieAlgebra::so3();
        let sys = ReducedSystem::new(
            g.clone(),
            Connection::bi_invariant(&g, Chirality::Left),
            Representation::trivial(&g, 1, Chirality::Left).unwrap(),
            NoiseBasis::empty(),
            left(),
            Arc::new(QuadraticLagrangian::rigid_body(&[1.0, 0.0, 2.0], 1)),
        )
        .unwrap();
        let st = ReducedState { t: 0.0, u: g.basis(0), alpha: UCoVector::zeros(1) };
        assert!(matches!(sys.integrate(&st, 1.0, 0.1), Err(Error::MomentumInversion(_))));
    }

    #[test]
    fn step_count_requires_divisibility() {
        assert_eq!(step_count(1.0, 1e-3).unwrap(), 1000);
        assert_eq!(step_count(0.0, 0.1).unwrap(), 0);
        assert!(step_count(1.0, 0.3).is_err());
        assert!(step_count(1.0, 0.0).is_err());
    }

    #[test]
    fn variation_residual_small_for_solutions_only() {
        let rng = CounterRng::new(11);
        for variant in EpVariant::ALL {
            let sys = heavy_top(NoiseBasis::scaled_basis(3, 0.2), variant);
            let traj = sys.integrate(&top_state(), 2.0, 1e-3).unwrap();
            let zero = SineSeriesCurve::zero(3, 2.0);
            assert_eq!(sys.variation_residual(&traj, &zero).unwrap(), 0.0);
            let mut bad = traj.clone();
            for s in &mut bad.states {
                s.u[0] += 0.1 * s.t.sin();
            }
            for i in 0..5 {
                let curve = SineSeriesCurve::random(3, 3, 2.0, &rng, i);
                let good = sys.variation_residual(&traj, &curve).unwrap();
                let off = sys.variation_residual(&bad, &curve).unwrap();
                assert!(good.abs() < 1e-4, "{} {good:e}", variant.label());
                assert!(off.abs() > 10.0 * good.abs());
            }
        }
    }

    #[test]
    fn variation_curve_must_vanish_at_ends() {
        let sys = heavy_top(NoiseBasis::empty(), left());
        let traj = sys.integrate(&top_state(), 1.0, 0.01).unwrap();
        let mut curve = SineSeriesCurve::zero(3, 2.0);
        curve.coeffs[0] = AlgebraVector::from_slice(&[1.0, 0.0, 0.0]);
        assert!(matches!(sys.variation_residual(&traj, &curve), Err(Error::Endpoint(_))));
    }

    #[test]
    fn csv_has_fixed_header() {
        let sys = heavy_top(NoiseBasis::empty(), left());
        let traj = sys.integrate(&top_state(), 0.02, 0.01).unwrap();
        let mut buf = Vec::new();
        sys.write_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,u_1,u_2,u_3,alpha_1,alpha_2,alpha_3,energy,mu_norm,alpha_norm,mu_dot_alpha"
        );
        assert_eq!(lines.count(), 3);
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-2.0..2.0f64, 3)
    }

    proptest! {
        #[test]
        fn prop_lagrangian_derivatives(u in vec3(), a in vec3()) {
            let lag = QuadraticLagrangian::heavy_top(&MOMENTS, 1.3, [0.1, -0.2, 1.0]);
            let (u, a) = (AlgebraVector::new(u), UCoVector::new(a));
            let mu = lag.dl_du(&u, &a);
            prop_assert!((lag.u_from_momentum(&mu, &a).unwrap() - u.clone()).max_abs() < 1e-10);
            let h = 1e-5;
            for i in 0..3 {
                let mut up = u.clone();
                up[i] += h;
                let mut um = u.clone();
                um[i] -= h;
                let fd = (lag.value(&up, &a) - lag.value(&um, &a)) / (2.0 * h);
                prop_assert!((fd - mu[i]).abs() < 1e-6);
                let mut ap = a.clone();
                ap[i] += h;
                let mut am = a.clone();
                am[i] -= h;
                let fd = (lag.value(&u, &ap) - lag.value(&u, &am)) / (2.0 * h);
                prop_assert!((fd - lag.dl_dalpha(&u, &a)[i]).abs() < 1e-6);
            }
        }
    }
}
