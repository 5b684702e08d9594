//! Dissipative compressible MHD on T² / T³ and its incompressible limit.
//!
//! The magnetic field is carried by a vector potential, `B = curl A`, with
//! `∂t A = u×B − ∇(u·A) + μ₃ΔA`; the gauge term is kept so that A obeys the same
//! one-form transport law the particle oracle checks.

use serde::{Deserialize, Serialize};

use crate::error::{FluidError, Result};
use crate::spectral::{Grid, IfRk4, ScalarField, VectorField};

/// Floor below which the density is treated as a blow-up.
pub const DENSITY_FLOOR: f64 = 1e-8;

/// CFL safety factor for the RK4 advective limit.
pub const CFL_NUMBER: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EosKind {
    /// p = κD^γ, e = κD^{γ-1}/(γ-1); independent of the entropy.
    Polytropic,
    /// p = κD^γ exp(b(γ-1)).
    IdealGas,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Eos {
    pub kind: EosKind,
    pub gamma: f64,
    pub kappa: f64,
}

impl Eos {
    pub fn new(kind: EosKind, gamma: f64, kappa: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 1.0 && kappa.is_finite() && kappa > 0.0) {
            return Err(FluidError::InvalidParameter(format!(
                "EOS needs gamma > 1 and kappa > 0, got gamma = {gamma}, kappa = {kappa}"
            )));
        }
        Ok(Eos { kind, gamma, kappa })
    }

    pub fn polytropic(gamma: f64, kappa: f64) -> Result<Self> {
        Self::new(EosKind::Polytropic, gamma, kappa)
    }

    pub fn ideal_gas(gamma: f64, kappa: f64) -> Result<Self> {
        Self::new(EosKind::IdealGas, gamma, kappa)
    }

    fn entropy_factor(&self, b: f64) -> f64 {
        match self.kind {
            EosKind::Polytropic => 1.0,
            EosKind::IdealGas => (b * (self.gamma - 1.0)).exp(),
        }
    }

    pub fn pressure(&self, d: f64, b: f64) -> f64 {
        self.kappa * d.powf(self.gamma) * self.entropy_factor(b)
    }

    /// Specific internal energy.
    pub fn internal_energy(&self, d: f64, b: f64) -> f64 {
        self.kappa * d.powf(self.gamma - 1.0) * self.entropy_factor(b) / (self.gamma - 1.0)
    }

    /// T = ∂e/∂b.
    pub fn temperature(&self, d: f64, b: f64) -> f64 {
        match self.kind {
            EosKind::Polytropic => 0.0,
            EosKind::IdealGas => self.kappa * d.powf(self.gamma - 1.0) * self.entropy_factor(b),
        }
    }

    /// c² = ∂p/∂D at fixed entropy.
    pub fn sound_speed_sq(&self, d: f64, b: f64) -> f64 {
        self.gamma * self.kappa * d.powf(self.gamma - 1.0) * self.entropy_factor(b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Viscosities {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
}

impl Viscosities {
    pub fn new(mu1: f64, mu2: f64, mu3: f64, mu4: f64) -> Result<Self> {
        let v = Viscosities { mu1, mu2, mu3, mu4 };
        v.validate()?;
        Ok(v)
    }

    pub fn zero() -> Self {
        Viscosities { mu1: 0.0, mu2: 0.0, mu3: 0.0, mu4: 0.0 }
    }

    pub fn uniform(mu: f64) -> Result<Self> {
        Self::new(mu, mu, mu, mu)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2), ("mu3", self.mu3), ("mu4", self.mu4)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(FluidError::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MhdState {
    pub u: VectorField,
    /// Specific entropy.
    pub b: ScalarField,
    /// Magnetic potential; on 2D grids the stream form is `a.c[2]`.
    pub a: VectorField,
    pub d: ScalarField,
    pub t: f64,
}

/// Time derivative of an [`MhdState`].
#[derive(Clone, Debug)]
pub struct MhdRates {
    pub u: VectorField,
    pub b: ScalarField,
    pub a: VectorField,
    pub d: ScalarField,
}

impl MhdState {
    fn pack(&self) -> Vec<ScalarField> {
        let mut v = Vec::with_capacity(8);
        v.extend(self.u.c.iter().cloned());
        v.push(self.b.clone());
        v.extend(self.a.c.iter().cloned());
        v.push(self.d.clone());
        v
    }

    fn unpack(mut v: Vec<ScalarField>, t: f64) -> Self {
        let d = v.pop().expect("8 fields");
        let a2 = v.pop().expect("8 fields");
        let a1 = v.pop().expect("8 fields");
        let a0 = v.pop().expect("8 fields");
        let b = v.pop().expect("8 fields");
        let u2 = v.pop().expect("8 fields");
        let u1 = v.pop().expect("8 fields");
        let u0 = v.pop().expect("8 fields");
        MhdState {
            u: VectorField { c: [u0, u1, u2] },
            b,
            a: VectorField { c: [a0, a1, a2] },
            d,
            t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.b.is_finite() && self.a.is_finite() && self.d.is_finite()
    }
}

/// Named initial conditions. Amplitudes are velocity scales.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// u = U(sin θ₁ cos θ₂, −cos θ₁ sin θ₂, 0), D = 1, B = 0.
    TaylorGreen { amplitude: f64 },
    /// u = U(−sin θ₂, sin θ₁, 0), A₃ = B₀(cos θ₂ + ½cos 2θ₁), D = 1.
    OrszagTang { amplitude: f64, field: f64 },
    /// Mean flow over a density ripple: u₁ = U + a cos θ₁, D = 1 − δ cos θ₁, B = 0.
    DensityWave { mean: f64, ripple: f64, density: f64 },
    /// Arnold-Beltrami-Childress velocity and potential on T³, D = 1 + δ sin(θ₁+θ₂+θ₃).
    Abc { amplitude: f64, field: f64, density: f64 },
}

impl InitialCondition {
    pub fn build(&self, grid: &Grid) -> Result<MhdState> {
        let zero = grid.zeros_vector();
        let state = match *self {
            InitialCondition::TaylorGreen { amplitude } => MhdState {
                u: grid.vector_from_fn(|x| {
                    [
                        amplitude * x[0].sin() * x[1].cos(),
                        -amplitude * x[0].cos() * x[1].sin(),
                        0.0,
                    ]
                }),
                b: grid.constant(1.0),
                a: zero,
                d: grid.constant(1.0),
                t: 0.0,
            },
            InitialCondition::OrszagTang { amplitude, field } => MhdState {
                u: grid.vector_from_fn(|x| [-amplitude * x[1].sin(), amplitude * x[0].sin(), 0.0]),
                b: grid.constant(1.0),
                a: grid.vector_from_fn(|x| {
                    [0.0, 0.0, field * (x[1].cos() + 0.5 * (2.0 * x[0]).cos())]
                }),
                d: grid.constant(1.0),
                t: 0.0,
            },
            InitialCondition::DensityWave { mean, ripple, density } => {
                if density.abs() >= 1.0 {
                    return Err(FluidError::InvalidParameter(
                        "density ripple must be below 1".into(),
                    ));
                }
                MhdState {
                    u: grid.vector_from_fn(|x| [mean + ripple * x[0].cos(), 0.0, 0.0]),
                    b: grid.constant(1.0),
                    a: zero,
                    d: grid.scalar_from_fn(|x| 1.0 - density * x[0].cos()),
                    t: 0.0,
                }
            }
            InitialCondition::Abc { amplitude, field, density } => {
                if grid.dims() != 3 {
                    return Err(FluidError::InvalidGrid("abc initial condition needs a 3D grid".into()));
                }
                if density.abs() >= 1.0 {
                    return Err(FluidError::InvalidParameter(
                        "density perturbation must be below 1".into(),
                    ));
                }
                let abc = |s: f64, x: [f64; 3]| {
                    [
                        s * (x[2].sin() + x[1].cos()),
                        s * (x[0].sin() + x[2].cos()),
                        s * (x[1].sin() + x[0].cos()),
                    ]
                };
                MhdState {
                    u: grid.vector_from_fn(|x| abc(amplitude, x)),
                    b: grid.constant(1.0),
                    a: grid.vector_from_fn(|x| {
                        [
                            field * (x[1] + x[2]).cos(),
                            field * (x[0] + x[2]).sin(),
                            field * (x[0] + x[1]).cos(),
                        ]
                    }),
                    d: grid.scalar_from_fn(|x| 1.0 + density * (x[0] + x[1] + x[2]).sin()),
                    t: 0.0,
                }
            }
        };
        let mut state = state;
        grid.dealias_vector(&mut state.u);
        grid.dealias_vector(&mut state.a);
        grid.dealias(&mut state.b);
        grid.dealias(&mut state.d);
        Ok(state)
    }
}

/// One row of the diagnostics time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub energy: f64,
    pub mass: f64,
    pub div_b: f64,
    pub max_u: f64,
    pub min_d: f64,
}

impl Diagnostics {
    pub const CSV_HEADER: &'static str = "t,E,M,div_b,max_u,min_D";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6e},{:.16e},{:.16e},{:.6e},{:.16e},{:.16e}",
            self.t, self.energy, self.mass, self.div_b, self.max_u, self.min_d
        )
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn at(v: &[Vec<f64>; 3], i: usize) -> [f64; 3] {
    [v[0][i], v[1][i], v[2][i]]
}

pub struct MhdSolver {
    grid: Grid,
    pub eos: Eos,
    pub visc: Viscosities,
    /// Include the 2μ₁(∇log D·∇)u momentum term.
    pub log_density_term: bool,
}

impl MhdSolver {
    pub fn new(grid: Grid, eos: Eos, visc: Viscosities) -> Result<Self> {
        visc.validate()?;
        Ok(MhdSolver { grid, eos, visc, log_density_term: true })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn magnetic_field(&self, state: &MhdState) -> VectorField {
        self.grid.curl(&state.a)
    }

    fn diffusivities(&self) -> [f64; 8] {
        let v = &self.visc;
        [v.mu1, v.mu1, v.mu1, v.mu2, v.mu3, v.mu3, v.mu3, v.mu4]
    }

    fn real_vec(&self, v: &VectorField) -> [Vec<f64>; 3] {
        let g = &self.grid;
        let zero = || vec![0.0; g.len()];
        let mut out = [zero(), zero(), zero()];
        for (o, c) in out.iter_mut().zip(&v.c) {
            if c.max_coeff() > 0.0 {
                *o = g.to_real(c);
            }
        }
        out
    }

    /// Physical-space gradient, skipping the θ₃ direction on 2D grids.
    fn real_grad(&self, f: &ScalarField) -> [Vec<f64>; 3] {
        let g = &self.grid;
        let mut out = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
        for (a, o) in out.iter_mut().enumerate().take(g.dims()) {
            *o = g.to_real(&g.deriv(f, a));
        }
        out
    }

    fn project_vec(&self, v: &[Vec<f64>; 3]) -> Result<VectorField> {
        let g = &self.grid;
        Ok(VectorField {
            c: [g.project(&v[0])?, g.project(&v[1])?, g.project(&v[2])?],
        })
    }

    /// Everything except the μΔ diffusion of each field.
    fn nonlinear(&self, y: &[ScalarField], t: f64) -> Result<Vec<ScalarField>> {
        let g = &self.grid;
        let npt = g.len();
        let state = MhdState::unpack(y.to_vec(), t);

        let dp = g.to_real(&state.d);
        let min_d = dp.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_d.is_nan() || min_d <= DENSITY_FLOOR {
            return Err(FluidError::BlowUp { t, min_d });
        }
        let bp = g.to_real(&state.b);
        let up = self.real_vec(&state.u);
        let ap = self.real_vec(&state.a);
        let bfield = g.curl(&state.a);
        let bvec = self.real_vec(&bfield);
        let jvec = self.real_vec(&g.curl(&bfield));
        let gu = [self.real_grad(&state.u.c[0]), self.real_grad(&state.u.c[1]), self.real_grad(&state.u.c[2])];
        let gd = self.real_grad(&state.d);
        let lapd = g.to_real(&g.laplacian(&state.d));
        let gb = self.real_grad(&state.b);
        let pressure: Vec<f64> = dp.iter().zip(&bp).map(|(&d, &b)| self.eos.pressure(d, b)).collect();
        let gp = self.real_grad(&g.from_real(&pressure)?);

        let v = &self.visc;
        let mut nu = [vec![0.0; npt], vec![0.0; npt], vec![0.0; npt]];
        let mut nb = vec![0.0; npt];
        let mut uxb = [vec![0.0; npt], vec![0.0; npt], vec![0.0; npt]];
        let mut ua = vec![0.0; npt];
        let mut flux = [vec![0.0; npt], vec![0.0; npt], vec![0.0; npt]];
        for i in 0..npt {
            let u = at(&up, i);
            let d = dp[i];
            let inv_d = 1.0 / d;
            let bxj = cross(at(&bvec, i), at(&jvec, i));
            for c in 0..3 {
                let mut adv = 0.0;
                let mut stretch = 0.0;
                for j in 0..3 {
                    adv += u[j] * gu[c][j][i];
                    stretch += gd[j][i] * gu[c][j][i];
                }
                let mut r = -adv - gp[c][i] * inv_d - bxj[c] * inv_d
                    + (v.mu1 - v.mu4) * u[c] * lapd[i] * inv_d;
                if self.log_density_term {
                    r += 2.0 * v.mu1 * stretch * inv_d;
                }
                nu[c][i] = r;
                flux[c][i] = d * u[c];
            }
            nb[i] = -(u[0] * gb[0][i] + u[1] * gb[1][i] + u[2] * gb[2][i]);
            let ub = cross(u, at(&bvec, i));
            for c in 0..3 {
                uxb[c][i] = ub[c];
            }
            ua[i] = u[0] * ap[0][i] + u[1] * ap[1][i] + u[2] * ap[2][i];
        }

        let nu = self.project_vec(&nu)?;
        let nb = g.project(&nb)?;
        let na = self.project_vec(&uxb)?.sub(&g.grad(&g.project(&ua)?));
        let nd = g.div(&self.project_vec(&flux)?).scale(-1.0);
        let out = MhdState { u: nu, b: nb, a: na, d: nd, t };
        Ok(out.pack())
    }

    /// Full right-hand side, diffusion included.
    pub fn mhd_rhs(&self, state: &MhdState) -> Result<MhdRates> {
        let g = &self.grid;
        let n = self.nonlinear(&state.pack(), state.t)?;
        let mu = self.diffusivities();
        let mut full = Vec::with_capacity(8);
        for ((f, nf), m) in state.pack().iter().zip(n).zip(mu) {
            let mut r = nf;
            r.axpy(m, &g.laplacian(f));
            full.push(r);
        }
        let s = MhdState::unpack(full, 0.0);
        Ok(MhdRates { u: s.u, b: s.b, a: s.a, d: s.d })
    }

    /// Advective, acoustic and Alfvén time-step limit.
    pub fn cfl_limit(&self, state: &MhdState) -> f64 {
        let g = &self.grid;
        let dx = g.spacing();
        let up = self.real_vec(&state.u);
        let bvec = self.real_vec(&self.magnetic_field(state));
        let dp = g.to_real(&state.d);
        let bp = g.to_real(&state.b);
        let mut umax: f64 = 0.0;
        let mut cmax: f64 = 0.0;
        let mut bmax: f64 = 0.0;
        for i in 0..g.len() {
            let u = at(&up, i);
            let b = at(&bvec, i);
            umax = umax.max((u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt());
            bmax = bmax.max((b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt() / dp[i].max(DENSITY_FLOOR).sqrt());
            cmax = cmax.max(self.eos.sound_speed_sq(dp[i].max(DENSITY_FLOOR), bp[i]).sqrt());
        }
        let limit = [umax, cmax, bmax]
            .iter()
            .filter(|s| **s > 0.0)
            .map(|s| dx / s)
            .fold(f64::INFINITY, f64::min);
        CFL_NUMBER * limit
    }

    pub fn integrator(&self, dt: f64) -> IfRk4 {
        IfRk4::new(&self.grid, dt, &self.diffusivities())
    }

    /// One IF-RK4 step with a prepared integrator.
    pub fn step_with(&self, stepper: &IfRk4, state: &MhdState) -> Result<MhdState> {
        let dt = stepper.dt();
        let limit = self.cfl_limit(state);
        if dt > limit {
            log::warn!(
                "CFL violated at t = {}: dt = {dt:e} exceeds {limit:e}; suggest dt <= {:e}",
                state.t,
                0.8 * limit
            );
        }
        let y = stepper.step(&state.pack(), state.t, |s, t| self.nonlinear(s, t))?;
        let next = MhdState::unpack(y, state.t + dt);
        if !next.is_finite() {
            return Err(FluidError::NonFinite(next.t));
        }
        Ok(next)
    }

    pub fn step(&self, state: &MhdState, dt: f64) -> Result<MhdState> {
        self.step_with(&self.integrator(dt), state)
    }

    /// E = ∫(½D|u|² + D e(D,b) + ½|B|²).
    pub fn energy(&self, state: &MhdState) -> f64 {
        let g = &self.grid;
        let up = self.real_vec(&state.u);
        let bvec = self.real_vec(&self.magnetic_field(state));
        let dp = g.to_real(&state.d);
        let bp = g.to_real(&state.b);
        let density: Vec<f64> = (0..g.len())
            .map(|i| {
                let u = at(&up, i);
                let b = at(&bvec, i);
                let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
                let b2 = b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
                0.5 * dp[i] * u2 + dp[i] * self.eos.internal_energy(dp[i], bp[i]) + 0.5 * b2
            })
            .collect();
        g.integral_real(&density)
    }

    pub fn mass(&self, state: &MhdState) -> f64 {
        self.grid.integral(&state.d)
    }

    pub fn div_b(&self, state: &MhdState) -> f64 {
        let g = &self.grid;
        g.max_abs(&g.div(&self.magnetic_field(state)))
    }

    pub fn diagnostics(&self, state: &MhdState) -> Diagnostics {
        let g = &self.grid;
        let up = self.real_vec(&state.u);
        let max_u = (0..g.len())
            .map(|i| {
                let u = at(&up, i);
                (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt()
            })
            .fold(0.0, f64::max);
        let min_d = g.to_real(&state.d).into_iter().fold(f64::INFINITY, f64::min);
        Diagnostics {
            t: state.t,
            energy: self.energy(state),
            mass: self.mass(state),
            div_b: self.div_b(state),
            max_u,
            min_d,
        }
    }
}

/// Leray-projected viscous MHD with D ≡ 1 and b ≡ 1.
pub struct IncompressibleSolver {
    grid: Grid,
    pub nu: f64,
    pub mu3: f64,
}

/// Tolerance on the initial divergence, relative to the velocity scale.
pub const DIVERGENCE_TOL: f64 = 1e-10;

impl IncompressibleSolver {
    pub fn new(grid: Grid, nu: f64, mu3: f64) -> Result<Self> {
        if nu.is_nan() || nu < 0.0 || mu3.is_nan() || mu3 < 0.0 {
            return Err(FluidError::InvalidParameter("viscosities must be >= 0".into()));
        }
        Ok(IncompressibleSolver { grid, nu, mu3 })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn divergence(&self, state: &MhdState) -> f64 {
        self.grid.max_abs(&self.grid.div(&state.u))
    }

    fn nonlinear(&self, y: &[ScalarField]) -> Result<Vec<ScalarField>> {
        let g = &self.grid;
        let npt = g.len();
        let u = VectorField { c: [y[0].clone(), y[1].clone(), y[2].clone()] };
        let a = VectorField { c: [y[3].clone(), y[4].clone(), y[5].clone()] };
        let up = g.vector_to_real(&u);
        let ap = g.vector_to_real(&a);
        let bf = g.curl(&a);
        let bp = g.vector_to_real(&bf);
        let jp = g.vector_to_real(&g.curl(&bf));
        let mut gu: Vec<[Vec<f64>; 3]> = Vec::with_capacity(3);
        for c in 0..3 {
            let mut row = [vec![0.0; npt], vec![0.0; npt], vec![0.0; npt]];
            for (j, r) in row.iter_mut().enumerate().take(g.dims()) {
                *r = g.to_real(&g.deriv(&u.c[c], j));
            }
            gu.push(row);
        }
        let mut mom = [vec![0.0; npt], vec![0.0; npt], vec![0.0; npt]];
        let mut uxb = [vec![0.0; npt], vec![0.0; npt], vec![0.0; npt]];
        let mut ua = vec![0.0; npt];
        for i in 0..npt {
            let uu = at(&up, i);
            let bxj = cross(at(&bp, i), at(&jp, i));
            let ub = cross(uu, at(&bp, i));
            for c in 0..3 {
                let adv: f64 = (0..3).map(|j| uu[j] * gu[c][j][i]).sum();
                mom[c][i] = -adv - bxj[c];
                uxb[c][i] = ub[c];
            }
            ua[i] = uu[0] * ap[0][i] + uu[1] * ap[1][i] + uu[2] * ap[2][i];
        }
        let mom = VectorField { c: [g.project(&mom[0])?, g.project(&mom[1])?, g.project(&mom[2])?] };
        let nu = g.leray(&mom);
        let na = VectorField { c: [g.project(&uxb[0])?, g.project(&uxb[1])?, g.project(&uxb[2])?] }
            .sub(&g.grad(&g.project(&ua)?));
        let mut out: Vec<ScalarField> = nu.c.into_iter().collect();
        out.extend(na.c);
        Ok(out)
    }

    pub fn integrator(&self, dt: f64) -> IfRk4 {
        IfRk4::new(&self.grid, dt, &[self.nu, self.nu, self.nu, self.mu3, self.mu3, self.mu3])
    }

    /// Advance one step; D and b are carried unchanged.
    pub fn step_with(&self, stepper: &IfRk4, state: &MhdState) -> Result<MhdState> {
        let g = &self.grid;
        let scale = g.vector_l2(&state.u).max(1.0);
        let div = self.divergence(state);
        if div > DIVERGENCE_TOL * scale {
            return Err(FluidError::Divergent(div));
        }
        let mut y: Vec<ScalarField> = state.u.c.to_vec();
        y.extend(state.a.c.iter().cloned());
        let mut out = stepper.step(&y, state.t, |s, _| self.nonlinear(s))?;
        let a = VectorField { c: [out.remove(3), out.remove(3), out.remove(3)] };
        let u = VectorField { c: [out.remove(0), out.remove(0), out.remove(0)] };
        let next = MhdState { u, b: state.b.clone(), a, d: state.d.clone(), t: state.t + stepper.dt() };
        if !next.is_finite() {
            return Err(FluidError::NonFinite(next.t));
        }
        Ok(next)
    }

    pub fn incompressible_step(&self, state: &MhdState, dt: f64) -> Result<MhdState> {
        self.step_with(&self.integrator(dt), state)
    }
}
