//! Stochastic Lagrangian particles `dy = √(2ν) dW + u(t, y) dt` on the torus with
//! Jacobians `V = ∂y/∂θ`, and weak-form Monte-Carlo oracles for the transport
//! equations of one-forms, scalars and densities.

use std::f64::consts::PI;
use std::io::Write;

use epsim_core::rng::CounterRng;
use epsim_core::stats::{compensated_sum, Moments};
use nalgebra::Matrix3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FluidError, Result};
use crate::spectral::{Grid, IfRk4, ScalarField, VectorField};

const TAU: f64 = 2.0 * PI;

/// Streams at and above this id seed positions; Brownian increments use the particle index.
const POSITION_STREAM: u64 = 1 << 62;

/// Velocity `u(t, y)` together with its gradient `G[i][j] = ∂_j u_i`.
pub trait VelocitySource: Sync {
    fn eval(&self, t: f64, y: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]);
}

/// Closed-form velocity.
pub struct AnalyticVelocity<F>(pub F);

impl<F> VelocitySource for AnalyticVelocity<F>
where
    F: Fn(f64, [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) + Sync,
{
    fn eval(&self, t: f64, y: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
        (self.0)(t, y)
    }
}

/// Frozen spectral velocity evaluated exactly off-grid from its non-zero modes.
#[derive(Clone, Debug)]
pub struct SpectralVelocity {
    modes: [Vec<([f64; 3], Complex64)>; 3],
}

impl SpectralVelocity {
    pub fn new(grid: &Grid, u: &VectorField) -> Self {
        let scale = u.c.iter().map(ScalarField::max_coeff).fold(0.0, f64::max);
        let thr = 1e-14 * scale.max(f64::MIN_POSITIVE);
        SpectralVelocity {
            modes: [
                grid.active_modes(&u.c[0], thr),
                grid.active_modes(&u.c[1], thr),
                grid.active_modes(&u.c[2], thr),
            ],
        }
    }

    pub fn mode_count(&self) -> usize {
        self.modes.iter().map(Vec::len).sum()
    }
}

impl VelocitySource for SpectralVelocity {
    fn eval(&self, _t: f64, y: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
        let mut u = [0.0; 3];
        let mut g = [[0.0; 3]; 3];
        for (c, modes) in self.modes.iter().enumerate() {
            for (k, z) in modes {
                let ph = k[0] * y[0] + k[1] * y[1] + k[2] * y[2];
                let e = z * Complex64::new(ph.cos(), ph.sin());
                u[c] += e.re;
                // ∂_j Re(z e^{ik·y}) = Re(i k_j z e^{ik·y}) = −k_j Im(...)
                for j in 0..3 {
                    g[c][j] -= k[j] * e.im;
                }
            }
        }
        (u, g)
    }
}

/// Snapshots with linear interpolation in time; constant outside the covered range.
pub struct SnapshotVelocity {
    frames: Vec<(f64, SpectralVelocity)>,
}

impl SnapshotVelocity {
    pub fn new(frames: Vec<(f64, SpectralVelocity)>) -> Result<Self> {
        if frames.is_empty() || frames.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(FluidError::InvalidParameter(
                "snapshots must be non-empty with increasing times".into(),
            ));
        }
        Ok(SnapshotVelocity { frames })
    }
}

impl VelocitySource for SnapshotVelocity {
    fn eval(&self, t: f64, y: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
        let f = &self.frames;
        if t <= f[0].0 {
            return f[0].1.eval(t, y);
        }
        if t >= f[f.len() - 1].0 {
            return f[f.len() - 1].1.eval(t, y);
        }
        let i = f.partition_point(|(s, _)| *s <= t) - 1;
        let (t0, a) = &f[i];
        let (t1, b) = &f[i + 1];
        let w = (t - t0) / (t1 - t0);
        let (ua, ga) = a.eval(t, y);
        let (ub, gb) = b.eval(t, y);
        let mut u = [0.0; 3];
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            u[i] = (1.0 - w) * ua[i] + w * ub[i];
            for j in 0..3 {
                g[i][j] = (1.0 - w) * ga[i][j] + w * gb[i][j];
            }
        }
        (u, g)
    }
}

#[derive(Clone, Debug)]
pub struct ParticleSet {
    dims: usize,
    pub theta0: Vec<[f64; 3]>,
    pub y: Vec<[f64; 3]>,
    pub v: Vec<Matrix3<f64>>,
    /// Quadrature weight of each seed.
    pub weights: Vec<f64>,
    /// ∫ div u(s, y(s)) ds along each path, for the Liouville check.
    pub div_integral: Vec<f64>,
    pub t: f64,
    steps: u64,
    rng: CounterRng,
}

impl ParticleSet {
    fn with_seeds(dims: usize, theta0: Vec<[f64; 3]>, weight: f64, seed: u64) -> Result<Self> {
        if dims != 2 && dims != 3 {
            return Err(FluidError::InvalidGrid(format!("dims must be 2 or 3, got {dims}")));
        }
        let n = theta0.len();
        Ok(ParticleSet {
            dims,
            y: theta0.clone(),
            theta0,
            v: vec![Matrix3::identity(); n],
            weights: vec![weight; n],
            div_integral: vec![0.0; n],
            t: 0.0,
            steps: 0,
            rng: CounterRng::new(seed),
        })
    }

    /// One particle per grid point of an `n_side`^dims lattice.
    pub fn on_grid(dims: usize, n_side: usize, seed: u64) -> Result<Self> {
        Self::lattice(dims, [n_side; 3], seed)
    }

    /// Rectangular lattice with `counts[a]` points along axis `a`.
    pub fn lattice(dims: usize, counts: [usize; 3], seed: u64) -> Result<Self> {
        if counts[..dims.min(3)].contains(&0) {
            return Err(FluidError::InvalidParameter("lattice counts must be positive".into()));
        }
        let count: usize = counts[..dims.min(3)].iter().product();
        let theta0 = (0..count)
            .map(|i| {
                let mut x = [0.0; 3];
                let mut r = i;
                for a in (0..dims).rev() {
                    x[a] = (r % counts[a]) as f64 * TAU / counts[a] as f64;
                    r /= counts[a];
                }
                x
            })
            .collect();
        let weight = TAU.powi(dims as i32) / count as f64;
        Self::with_seeds(dims, theta0, weight, seed)
    }

    /// Independent uniform seeds; the quadrature is then Monte Carlo in θ as well.
    pub fn uniform(dims: usize, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(FluidError::InvalidParameter("need at least one particle".into()));
        }
        let rng = CounterRng::new(seed);
        let theta0 = (0..count as u64)
            .map(|i| {
                let mut x = [0.0; 3];
                for (a, xa) in x.iter_mut().enumerate().take(dims) {
                    *xa = TAU * rng.uniform_at(POSITION_STREAM + i, a as u64);
                }
                x
            })
            .collect();
        Self::with_seeds(dims, theta0, TAU.powi(dims as i32) / count as f64, seed)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn min_det(&self) -> f64 {
        self.v.iter().map(Matrix3::determinant).fold(f64::INFINITY, f64::min)
    }
}

fn wrap(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// One Euler-Maruyama step. Particle `i` draws its increments from stream `i`, index
/// `step·dims + component`, so the result does not depend on the thread count.
pub fn advance_particles(ps: &mut ParticleSet, vel: &dyn VelocitySource, nu: f64, dt: f64) {
    let dims = ps.dims;
    let t = ps.t;
    let step = ps.steps;
    let amp = (2.0 * nu * dt).sqrt();
    let rng = &ps.rng;
    ps.y
        .par_iter_mut()
        .zip(ps.v.par_iter_mut())
        .zip(ps.div_integral.par_iter_mut())
        .enumerate()
        .for_each(|(i, ((y, v), di))| {
            let (u, g) = vel.eval(t, *y);
            let mut gm = Matrix3::zeros();
            for a in 0..dims {
                for b in 0..dims {
                    gm[(a, b)] = g[a][b];
                }
            }
            *v += gm * *v * dt;
            *di += (0..dims).map(|a| g[a][a]).sum::<f64>() * dt;
            for a in 0..dims {
                let dw = if nu > 0.0 {
                    amp * rng.normal_at(i as u64, step * dims as u64 + a as u64)
                } else {
                    0.0
                };
                y[a] = wrap(y[a] + dw + u[a] * dt);
            }
        });
    ps.t += dt;
    ps.steps += 1;
}

/// Advance `steps` times.
pub fn run_particles(ps: &mut ParticleSet, vel: &dyn VelocitySource, nu: f64, dt: f64, steps: usize) {
    for _ in 0..steps {
        advance_particles(ps, vel, nu, dt);
    }
}

/// Seed of batch `b` in an ensemble started from `seed`.
pub fn batch_seed(seed: u64, b: usize) -> u64 {
    seed.wrapping_add((b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Independent lattice batches advanced `steps` times.
#[allow(clippy::too_many_arguments)]
pub fn simulate_batches(
    dims: usize,
    counts: [usize; 3],
    n_batches: usize,
    seed: u64,
    vel: &dyn VelocitySource,
    nu: f64,
    dt: f64,
    steps: usize,
) -> Result<Vec<ParticleSet>> {
    (0..n_batches)
        .map(|b| {
            let mut ps = ParticleSet::lattice(dims, counts, batch_seed(seed, b))?;
            run_particles(&mut ps, vel, nu, dt, steps);
            Ok(ps)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct PullbackSamples {
    /// `V^{-T} A₀(θ)` per particle; `None` where V is singular.
    pub values: Vec<Option<[f64; 3]>>,
    pub excluded: usize,
}

const SINGULAR_DET: f64 = 1e-12;

fn active(ps: &ParticleSet, v: &Matrix3<f64>) -> Matrix3<f64> {
    // On 2D sets the third row/column stays the identity.
    let mut m = *v;
    if ps.dims == 2 {
        m[(2, 2)] = 1.0;
    }
    m
}

pub fn pullback_sample(ps: &ParticleSet, a0: &[[f64; 3]]) -> Result<PullbackSamples> {
    if a0.len() != ps.len() {
        return Err(FluidError::Shape(format!("{} covectors for {} particles", a0.len(), ps.len())));
    }
    let values: Vec<Option<[f64; 3]>> = ps
        .v
        .iter()
        .zip(a0)
        .map(|(v, a)| {
            let m = active(ps, v);
            if m.determinant().abs() <= SINGULAR_DET {
                return None;
            }
            let inv_t = m.try_inverse()?.transpose();
            let r = inv_t * nalgebra::Vector3::new(a[0], a[1], a[2]);
            Some([r[0], r[1], r[2]])
        })
        .collect();
    let excluded = values.iter().filter(|v| v.is_none()).count();
    if excluded > 0 {
        log::warn!("{excluded} particles with singular Jacobian excluded");
    }
    Ok(PullbackSamples { values, excluded })
}

/// A single Fourier test function `amplitude · cos(k·x + phase)`; the scalar oracles use
/// the first amplitude component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FourierMode {
    pub amplitude: [f64; 3],
    pub wave: [f64; 3],
    pub phase: f64,
}

impl FourierMode {
    pub fn new(amplitude: [f64; 3], wave: [f64; 3], phase: f64) -> Self {
        FourierMode { amplitude, wave, phase }
    }

    fn arg(&self, x: [f64; 3]) -> f64 {
        self.wave[0] * x[0] + self.wave[1] * x[1] + self.wave[2] * x[2] + self.phase
    }

    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        let c = self.arg(x).cos();
        [self.amplitude[0] * c, self.amplitude[1] * c, self.amplitude[2] * c]
    }

    pub fn eval_scalar(&self, x: [f64; 3]) -> f64 {
        self.amplitude[0] * self.arg(x).cos()
    }

    pub fn to_vector(&self, grid: &Grid) -> VectorField {
        grid.vector_from_fn(|x| self.eval(x))
    }

    pub fn to_scalar(&self, grid: &Grid) -> ScalarField {
        grid.scalar_from_fn(|x| self.eval_scalar(x))
    }
}

/// ∫ f g over the torus via Parseval.
pub fn inner(grid: &Grid, f: &ScalarField, g: &ScalarField) -> f64 {
    let s = compensated_sum(f.hat.iter().zip(&g.hat).map(|(a, b)| (a * b.conj()).re));
    grid.volume() * s
}

pub fn inner_vector(grid: &Grid, f: &VectorField, g: &VectorField) -> f64 {
    (0..3).map(|c| inner(grid, &f.c[c], &g.c[c])).sum()
}

/// Which transport law an oracle checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    OneForm,
    Scalar,
    Density,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleRow {
    pub id: usize,
    pub monte_carlo: f64,
    pub pde: f64,
    pub stderr: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleRow {
    pub fn relative_defect(&self) -> f64 {
        (self.monte_carlo - self.pde).abs() / self.pde.abs().max(f64::MIN_POSITIVE)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub kind: OracleKind,
    pub rows: Vec<OracleRow>,
    pub excluded: usize,
    pub batches: usize,
    pub particles: usize,
}

impl OracleReport {
    pub const CSV_HEADER: &'static str = "form,monte_carlo,pde,stderr,verdict";

    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn max_relative_defect(&self) -> f64 {
        self.rows.iter().map(OracleRow::relative_defect).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.6e},{}",
                r.id,
                r.monte_carlo,
                r.pde,
                r.stderr,
                if r.pass { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Sum of per-particle contributions with the standard error of that sum.
fn sum_with_stderr(x: &[f64]) -> (f64, f64) {
    let mut m = Moments::new(1);
    for &v in x {
        m.push(&[v]);
    }
    let n = x.len() as f64;
    let var = if x.len() > 1 { m.variance()[0] } else { 0.0 };
    (compensated_sum(x.iter().copied()), (n * var).sqrt())
}

/// Mean of the batch sums and its standard error. When every batch shares the same
/// seeds, sites are independent, so the per-site variance across batches is pooled
/// (far more degrees of freedom than the spread of a handful of batch sums). A single
/// batch falls back to the per-particle spread, which overstates the error for lattices.
fn batch_estimate(per_batch: &[Vec<f64>], shared_sites: bool) -> (f64, f64) {
    let nb = per_batch.len();
    if nb == 1 {
        return sum_with_stderr(&per_batch[0]);
    }
    let sums: Vec<f64> = per_batch.iter().map(|x| compensated_sum(x.iter().copied())).collect();
    let mean = compensated_sum(sums.iter().copied()) / nb as f64;
    if shared_sites {
        let var_sum = compensated_sum((0..per_batch[0].len()).map(|i| {
            let mut m = Moments::new(1);
            for x in per_batch {
                m.push(&[x[i]]);
            }
            m.variance()[0]
        }));
        return (mean, (var_sum / nb as f64).sqrt());
    }
    let mut m = Moments::new(1);
    for s in &sums {
        m.push(&[*s]);
    }
    (mean, m.stderr()[0])
}

/// Defect allowance `C·(dt + n^{-2})` added to three standard errors.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Allowance {
    pub c: f64,
    pub dt: f64,
    pub n: usize,
}

impl Allowance {
    pub fn value(&self) -> f64 {
        self.c * (self.dt + 1.0 / (self.n * self.n) as f64)
    }
}

fn check_batches(batches: &[ParticleSet], values: usize, pde: usize) -> Result<()> {
    if batches.is_empty() {
        return Err(FluidError::InvalidParameter("need at least one particle batch".into()));
    }
    if values != pde {
        return Err(FluidError::Shape(format!("{values} test functions but {pde} PDE values")));
    }
    Ok(())
}

fn compare(
    kind: OracleKind,
    batches: &[ParticleSet],
    n_forms: usize,
    pde: &[f64],
    allowance: Allowance,
    excluded: usize,
    contribution: impl Fn(usize, usize, usize) -> f64 + Sync,
) -> OracleReport {
    let shared_sites = batches.windows(2).all(|w| w[0].theta0 == w[1].theta0);
    let rows = (0..n_forms)
        .map(|id| {
            let per_batch: Vec<Vec<f64>> = batches
                .iter()
                .enumerate()
                .map(|(b, ps)| (0..ps.len()).into_par_iter().map(|i| contribution(id, b, i)).collect())
                .collect();
            let (mc, se) = batch_estimate(&per_batch, shared_sites);
            let p = pde[id];
            let tolerance = 3.0 * se + allowance.value();
            OracleRow { id, monte_carlo: mc, pde: p, stderr: se, tolerance, pass: (mc - p).abs() <= tolerance }
        })
        .collect();
    OracleReport {
        kind,
        rows,
        excluded,
        batches: batches.len(),
        particles: batches.iter().map(ParticleSet::len).sum(),
    }
}

/// Compare `E[Σ_θ f(y(θ))·(V^{-T}A₀)(θ)·det V·w_θ]` with the PDE values `∫ f·A(t)`.
/// Each batch is one independent realisation of the quadrature.
pub fn weak_form_compare(
    batches: &[ParticleSet],
    a0: &(dyn Fn([f64; 3]) -> [f64; 3] + Sync),
    forms: &[FourierMode],
    pde: &[f64],
    allowance: Allowance,
) -> Result<OracleReport> {
    check_batches(batches, forms.len(), pde.len())?;
    let mut samples = Vec::with_capacity(batches.len());
    let mut excluded = 0;
    for ps in batches {
        let a0s: Vec<[f64; 3]> = ps.theta0.iter().map(|&t| a0(t)).collect();
        let pb = pullback_sample(ps, &a0s)?;
        excluded += pb.excluded;
        samples.push(pb.values);
    }
    Ok(compare(OracleKind::OneForm, batches, forms.len(), pde, allowance, excluded, |id, b, i| {
        let ps = &batches[b];
        match samples[b][i] {
            Some(a) => {
                let fy = forms[id].eval(ps.y[i]);
                let det = active(ps, &ps.v[i]).determinant();
                (fy[0] * a[0] + fy[1] * a[1] + fy[2] * a[2]) * det * ps.weights[i]
            }
            None => 0.0,
        }
    }))
}

/// Scalar transport: `Σ f(y)·b₀(θ)·det V·w` against `∫ f b(t)`.
pub fn scalar_oracle(
    batches: &[ParticleSet],
    b0: &(dyn Fn([f64; 3]) -> f64 + Sync),
    tests: &[FourierMode],
    pde: &[f64],
    allowance: Allowance,
) -> Result<OracleReport> {
    check_batches(batches, tests.len(), pde.len())?;
    Ok(compare(OracleKind::Scalar, batches, tests.len(), pde, allowance, 0, |id, b, i| {
        let ps = &batches[b];
        let det = active(ps, &ps.v[i]).determinant();
        tests[id].eval_scalar(ps.y[i]) * b0(ps.theta0[i]) * det * ps.weights[i]
    }))
}

/// Density (forward Kolmogorov): seeds carry mass `D₀(θ)·w`, compared with `∫ f D(t)`.
pub fn density_oracle(
    batches: &[ParticleSet],
    d0: &(dyn Fn([f64; 3]) -> f64 + Sync),
    tests: &[FourierMode],
    pde: &[f64],
    allowance: Allowance,
) -> Result<OracleReport> {
    check_batches(batches, tests.len(), pde.len())?;
    Ok(compare(OracleKind::Density, batches, tests.len(), pde, allowance, 0, |id, b, i| {
        let ps = &batches[b];
        tests[id].eval_scalar(ps.y[i]) * d0(ps.theta0[i]) * ps.weights[i]
    }))
}

fn steps_for(t_final: f64, dt: f64) -> Result<usize> {
    let steps = (t_final / dt).round();
    if dt.is_nan() || dt <= 0.0 || (steps * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(FluidError::InvalidParameter(format!(
            "t_final = {t_final} is not a multiple of dt = {dt}"
        )));
    }
    Ok(steps as usize)
}

/// `∂t A = u×curl A − ∇(u·A) + νΔA` with frozen u.
pub fn solve_one_form_pde(
    grid: &Grid,
    u: &VectorField,
    a0: &VectorField,
    nu: f64,
    t_final: f64,
    dt: f64,
) -> Result<VectorField> {
    let steps = steps_for(t_final, dt)?;
    let st = IfRk4::new(grid, dt, &[nu, nu, nu]);
    let up = grid.vector_to_real(u);
    let npt = grid.len();
    let mut y: Vec<ScalarField> = a0.c.to_vec();
    let mut t = 0.0;
    for _ in 0..steps {
        y = st.step(&y, t, |s, _| {
            let a = VectorField { c: [s[0].clone(), s[1].clone(), s[2].clone()] };
            let ap = grid.vector_to_real(&a);
            let cp = grid.vector_to_real(&grid.curl(&a));
            let mut uxc = [vec![0.0; npt], vec![0.0; npt], vec![0.0; npt]];
            let mut ua = vec![0.0; npt];
            for i in 0..npt {
                let u = [up[0][i], up[1][i], up[2][i]];
                let c = [cp[0][i], cp[1][i], cp[2][i]];
                uxc[0][i] = u[1] * c[2] - u[2] * c[1];
                uxc[1][i] = u[2] * c[0] - u[0] * c[2];
                uxc[2][i] = u[0] * c[1] - u[1] * c[0];
                ua[i] = u[0] * ap[0][i] + u[1] * ap[1][i] + u[2] * ap[2][i];
            }
            let g = grid.grad(&grid.project(&ua)?);
            let mut out = Vec::with_capacity(3);
            for (w, gc) in uxc.iter().zip(&g.c) {
                out.push(grid.project(w)?.sub(gc));
            }
            Ok(out)
        })?;
        t += dt;
    }
    Ok(VectorField { c: [y[0].clone(), y[1].clone(), y[2].clone()] })
}

/// `∂t b = −u·∇b + νΔb` (scalar) or `∂t D = −∇·(Du) + νΔD` (density) with frozen u.
pub fn solve_scalar_pde(
    grid: &Grid,
    u: &VectorField,
    f0: &ScalarField,
    kind: OracleKind,
    nu: f64,
    t_final: f64,
    dt: f64,
) -> Result<ScalarField> {
    let steps = steps_for(t_final, dt)?;
    let st = IfRk4::new(grid, dt, &[nu]);
    let up = grid.vector_to_real(u);
    let npt = grid.len();
    let mut y = vec![f0.clone()];
    let mut t = 0.0;
    for _ in 0..steps {
        y = st.step(&y, t, |s, _| {
            let f = &s[0];
            let r = match kind {
                OracleKind::Density => {
                    let fp = grid.to_real(f);
                    let mut flux = [vec![0.0; npt], vec![0.0; npt], vec![0.0; npt]];
                    for i in 0..npt {
                        for c in 0..3 {
                            flux[c][i] = fp[i] * up[c][i];
                        }
                    }
                    let fl = grid.vector_from_real(&flux)?;
                    let mut d = grid.div(&fl).scale(-1.0);
                    grid.dealias(&mut d);
                    d
                }
                _ => {
                    let gp = grid.vector_to_real(&grid.grad(f));
                    let adv: Vec<f64> = (0..npt)
                        .map(|i| -(up[0][i] * gp[0][i] + up[1][i] * gp[1][i] + up[2][i] * gp[2][i]))
                        .collect();
                    grid.project(&adv)?
                }
            };
            Ok(vec![r])
        })?;
        t += dt;
    }
    Ok(y.pop().expect("one field"))
}
