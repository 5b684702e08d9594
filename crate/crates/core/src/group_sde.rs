//! Monte Carlo for Stratonovich SDEs on matrix Lie groups,
//! `dg = g (Σ_j H_j ∘ dW_j + w(t) dt)` (left) or `dg = (…) g` (right),
//! by the Lie-exponential Euler scheme.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coords::{AlgebraVector, UCoVector};
use crate::dissipation::connection_drift;
use crate::error::{check_dim, Error, Result};
use crate::lie::{Chirality, Connection, GroupElement, GroupKind, LieAlgebra};
use crate::reduced::step_count;
use crate::rng::CounterRng;
use crate::semidirect::Representation;
use crate::stats::Moments;

/// Trajectories are reduced in fixed blocks of this many, so results do not
/// depend on the thread count.
const CHUNK: usize = 64;
const REORTHONORMALIZE_EVERY: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    LieExponentialEuler,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n_traj: usize,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl EnsembleSpec {
    pub fn new(n_traj: usize, dt: f64, t_final: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            n_traj,
            dt,
            t_final,
            seed,
            scheme: Scheme::LieExponentialEuler,
        };
        spec.n_steps()?;
        if n_traj == 0 {
            return Err(Error::InvalidSpec("n_traj must be positive".into()));
        }
        Ok(spec)
    }

    pub fn n_steps(&self) -> Result<usize> {
        step_count(self.t_final, self.dt)
    }
}

/// Group-valued path sampled every `stride` steps, stored flat.
#[derive(Clone, Debug)]
pub struct GroupPath {
    pub traj_id: u64,
    pub dt: f64,
    pub stride: usize,
    size: usize,
    data: Vec<f64>,
}

impl GroupPath {
    pub fn len(&self) -> usize {
        self.data.len() / (self.size * self.size)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        (k * self.stride) as f64 * self.dt
    }

    pub fn sample(&self, k: usize) -> GroupElement {
        let m = self.size * self.size;
        GroupElement::from_matrix(nalgebra::DMatrix::from_column_slice(
            self.size,
            self.size,
            &self.data[k * m..(k + 1) * m],
        ))
    }
}

/// The SDE: noise directions, chirality, and the drift `w(t)` handed to the
/// scheme. With the connection correction the drift is
/// `ũ(t) = u(t) - ½ Σ ∇_{H_j} H_j`, otherwise `u(t)` itself.
pub struct GroupSde<'a> {
    algebra: &'a LieAlgebra,
    noise: Vec<AlgebraVector>,
    chirality: Chirality,
    correction: AlgebraVector,
    connection_correction: bool,
    velocity: Box<dyn Fn(f64) -> AlgebraVector + Sync + 'a>,
    reorthonormalize: bool,
}

impl<'a> GroupSde<'a> {
    pub fn new(
        algebra: &'a LieAlgebra,
        connection: &Connection,
        noise: &[AlgebraVector],
        chirality: Chirality,
        connection_correction: bool,
        velocity: impl Fn(f64) -> AlgebraVector + Sync + 'a,
    ) -> Result<Self> {
        let rep = algebra.matrix_rep()?;
        if connection.chirality() != chirality {
            return Err(Error::ChiralityMismatch(format!(
                "{:?} connection with a {:?} SDE",
                connection.chirality(),
                chirality
            )));
        }
        for h in noise {
            check_dim("noise vector", algebra.dim(), h.dim())?;
        }
        let correction = connection_drift(algebra.dim(), noise, connection)?;
        Ok(Self {
            algebra,
            noise: noise.to_vec(),
            chirality,
            correction,
            connection_correction,
            velocity: Box::new(velocity),
            reorthonormalize: rep.kind() != GroupKind::General,
        })
    }

    pub fn algebra(&self) -> &LieAlgebra {
        self.algebra
    }

    pub fn chirality(&self) -> Chirality {
        self.chirality
    }

    pub fn noise(&self) -> &[AlgebraVector] {
        &self.noise
    }

    /// `½ Σ ∇_{H_j} H_j` for this noise and connection.
    pub fn connection_drift(&self) -> &AlgebraVector {
        &self.correction
    }

    /// Drift vector passed to the exponential scheme at time `t`.
    pub fn drift(&self, t: f64) -> AlgebraVector {
        let u = (self.velocity)(t);
        if self.connection_correction {
            u - self.correction.clone()
        } else {
            u
        }
    }

    fn increment(&self, t: f64, dt: f64, dw: &[f64]) -> Result<GroupElement> {
        let mut x = self.drift(t) * dt;
        for (h, w) in self.noise.iter().zip(dw) {
            x.axpy(*w, h);
        }
        self.algebra.exp(&x)
    }

    fn compose(&self, g: &GroupElement, inc: &GroupElement) -> GroupElement {
        match self.chirality {
            Chirality::Left => g.compose(inc),
            Chirality::Right => inc.compose(g),
        }
    }

    /// Runs trajectory `traj_id`, calling `visit(step, g)` at every step
    /// (including step 0, the identity).
    pub fn run<F>(&self, spec: &EnsembleSpec, traj_id: u64, mut visit: F) -> Result<()>
    where
        F: FnMut(usize, &GroupElement) -> Result<()>,
    {
        let n = spec.n_steps()?;
        let rng = CounterRng::new(spec.seed);
        let mut draws = rng.stream(traj_id);
        let sqrt_dt = spec.dt.sqrt();
        let mut dw = vec![0.0; self.noise.len()];
        let mut g = self.algebra.identity()?;
        visit(0, &g)?;
        for k in 0..n {
            draws.fill_normal(&mut dw);
            dw.iter_mut().for_each(|w| *w *= sqrt_dt);
            let inc = self.increment(k as f64 * spec.dt, spec.dt, &dw)?;
            g = self.compose(&g, &inc);
            if self.reorthonormalize && (k + 1) % REORTHONORMALIZE_EVERY == 0 {
                g.reorthonormalize();
            }
            visit(k + 1, &g)?;
        }
        Ok(())
    }

    pub fn simulate(&self, spec: &EnsembleSpec, traj_id: u64, stride: usize) -> Result<GroupPath> {
        let stride = stride.max(1);
        let size = self.algebra.matrix_rep()?.size();
        let mut data = Vec::with_capacity((spec.n_steps()? / stride + 1) * size * size);
        self.run(spec, traj_id, |k, g| {
            if k % stride == 0 {
                data.extend_from_slice(g.mat.as_slice());
            }
            Ok(())
        })?;
        Ok(GroupPath {
            traj_id,
            dt: spec.dt,
            stride,
            size,
            data,
        })
    }

    /// Paths `0..n_traj`, in id order.
    pub fn simulate_ensemble(&self, spec: &EnsembleSpec, stride: usize) -> Result<Vec<GroupPath>> {
        (0..spec.n_traj as u64)
            .into_par_iter()
            .map(|id| self.simulate(spec, id, stride))
            .collect()
    }

    fn perturb(&self, g: &GroupElement, x: &AlgebraVector, s: f64) -> Result<GroupElement> {
        let e = self.algebra.exp(&(x * s))?;
        Ok(self.compose(g, &e))
    }

    /// `(½ Σ_j H̃_j H̃_j + w̃(t)) f` at `g`, with the invariant vector fields
    /// differentiated by central differences along exponential curves.
    pub fn generator(&self, f: &dyn Fn(&GroupElement) -> f64, g: &GroupElement, t: f64) -> Result<f64> {
        let s2 = 1e-3;
        let s1 = 1e-5;
        let f0 = f(g);
        let mut acc = 0.0;
        for h in &self.noise {
            let p = f(&self.perturb(g, h, s2)?);
            let m = f(&self.perturb(g, h, -s2)?);
            acc += 0.5 * (p - 2.0 * f0 + m) / (s2 * s2);
        }
        let w = self.drift(t);
        let p = f(&self.perturb(g, &w, s1)?);
        let m = f(&self.perturb(g, &w, -s1)?);
        Ok(acc + (p - m) / (2.0 * s1))
    }
}

#[derive(Clone, Debug)]
pub struct GeneratorReport {
    /// Left end of each tested interval.
    pub times: Vec<f64>,
    /// Mean over paths of `(f(g(t+Δ)) - f(g(t)))/Δ - (1/Δ)∫ Lf(g) ds`.
    pub defect: Vec<f64>,
    pub stderr: Vec<f64>,
    pub tolerance: Vec<f64>,
    pub pass: bool,
}

/// Dynkin-formula check of the scheme against its generator on every
/// interval between consecutive recorded samples. Passes when every
/// interval's defect is within `3·SE + c_dt·dt`.
pub fn generator_test(
    sde: &GroupSde,
    paths: &[GroupPath],
    f: &(dyn Fn(&GroupElement) -> f64 + Sync),
    c_dt: f64,
) -> Result<GeneratorReport> {
    let first = paths
        .first()
        .ok_or_else(|| Error::InvalidSpec("generator test needs paths".into()))?;
    let (len, dt, stride) = (first.len(), first.dt, first.stride);
    let span = stride as f64 * dt;
    let per_path: Vec<Vec<f64>> = paths
        .par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let vals: Vec<f64> = (0..len).map(|k| f(&p.sample(k))).collect();
            let gens = (0..len)
                .map(|k| sde.generator(f, &p.sample(k), p.time(k)))
                .collect::<Result<Vec<f64>>>()?;
            Ok((0..len - 1)
                .map(|k| (vals[k + 1] - vals[k]) / span - 0.5 * (gens[k] + gens[k + 1]))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut moments = Moments::new(len.saturating_sub(1));
    for d in &per_path {
        moments.push(d);
    }
    let defect = moments.mean().to_vec();
    let stderr = moments.stderr();
    let tolerance: Vec<f64> = stderr.iter().map(|s| 3.0 * s + c_dt * dt).collect();
    let pass = defect.iter().zip(&tolerance).all(|(d, t)| d.abs() <= *t);
    Ok(GeneratorReport {
        times: (0..len - 1).map(|k| first.time(k)).collect(),
        defect,
        stderr,
        tolerance,
        pass,
    })
}

#[derive(Clone, Debug)]
pub struct DriftEstimate {
    pub times: Vec<f64>,
    pub mean: Vec<AlgebraVector>,
    pub stderr: Vec<AlgebraVector>,
    /// Increments whose logarithm was undefined.
    pub excluded: usize,
}

fn increment_log(
    algebra: &LieAlgebra,
    chirality: Chirality,
    g0: &GroupElement,
    g1: &GroupElement,
) -> Result<AlgebraVector> {
    let inv = g0.inverse()?;
    let inc = match chirality {
        Chirality::Left => inv.compose(g1),
        Chirality::Right => g1.compose(&inv),
    };
    algebra.log(&inc)
}

/// Estimates the generalized derivative: the sample mean of the increment
/// logarithms divided by the step, plus `½ Σ ∇_{H_j} H_j`. Paths should be
/// recorded at every step.
pub fn drift_estimate(
    algebra: &LieAlgebra,
    connection: &Connection,
    noise: &[AlgebraVector],
    chirality: Chirality,
    paths: &[GroupPath],
) -> Result<DriftEstimate> {
    let first = paths
        .first()
        .ok_or_else(|| Error::InvalidSpec("drift estimate needs paths".into()))?;
    let (len, span) = (first.len(), first.stride as f64 * first.dt);
    let n = algebra.dim();
    let shift = connection_drift(n, noise, connection)?;
    let mut moments: Vec<Moments> = (0..len - 1).map(|_| Moments::new(n)).collect();
    let mut excluded = 0;
    for p in paths {
        for (k, m) in moments.iter_mut().enumerate() {
            match increment_log(algebra, chirality, &p.sample(k), &p.sample(k + 1)) {
                Ok(x) => m.push((x * (1.0 / span)).as_slice()),
                Err(Error::LogUndefined(_)) => excluded += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if excluded > 0 {
        log::warn!("drift estimate excluded {excluded} increments with undefined logarithm");
    }
    Ok(DriftEstimate {
        times: (0..len - 1).map(|k| first.time(k)).collect(),
        mean: moments
            .iter()
            .map(|m| AlgebraVector::from_slice(m.mean()) + shift.clone())
            .collect(),
        stderr: moments
            .iter()
            .map(|m| AlgebraVector::new(m.stderr()))
            .collect(),
        excluded,
    })
}

#[derive(Clone, Debug)]
pub struct AdvectedEnsemble {
    pub times: Vec<f64>,
    pub mean: Vec<UCoVector>,
    pub stderr: Vec<UCoVector>,
    pub n_traj: usize,
}

/// Mean and standard error of `α̃(t) = g(t)^{-1} α₀` (left) or
/// `α₀ g(t)^{-1}` (right) over the given paths.
pub fn advected_mean(
    algebra: &LieAlgebra,
    paths: &[GroupPath],
    rep: &Representation,
    alpha0: &UCoVector,
) -> Result<AdvectedEnsemble> {
    let first = paths
        .first()
        .ok_or_else(|| Error::InvalidSpec("advected mean needs paths".into()))?;
    let len = first.len();
    let mut moments: Vec<Moments> = (0..len).map(|_| Moments::new(rep.dim_u())).collect();
    for p in paths {
        for (k, m) in moments.iter_mut().enumerate() {
            m.push(rep.advect_dual(algebra, &p.sample(k), alpha0)?.as_slice());
        }
    }
    Ok(finish_advected(
        (0..len).map(|k| first.time(k)).collect(),
        &moments,
        paths.len(),
    ))
}

fn finish_advected(times: Vec<f64>, moments: &[Moments], n_traj: usize) -> AdvectedEnsemble {
    AdvectedEnsemble {
        times,
        mean: moments.iter().map(|m| UCoVector::from_slice(m.mean())).collect(),
        stderr: moments.iter().map(|m| UCoVector::new(m.stderr())).collect(),
        n_traj,
    }
}

/// Streaming ensemble run: advected mean and drift estimate at every
/// `stride`-th step, without storing paths.
#[derive(Clone, Debug)]
pub struct EnsembleSummary {
    pub advected: AdvectedEnsemble,
    /// Drift estimate from the single step starting at each output time
    /// (all output times except the last).
    pub drift: DriftEstimate,
}

pub fn run_ensemble(
    sde: &GroupSde,
    connection: &Connection,
    spec: &EnsembleSpec,
    rep: &Representation,
    alpha0: &UCoVector,
    stride: usize,
) -> Result<EnsembleSummary> {
    let stride = stride.max(1);
    let n_steps = spec.n_steps()?;
    let n_out = n_steps / stride + 1;
    let n_drift = (n_steps.saturating_sub(1)) / stride + 1;
    let n_drift = if n_steps == 0 { 0 } else { n_drift };
    let dim = sde.algebra.dim();
    let dim_u = rep.dim_u();
    let algebra = sde.algebra;
    let chunks: Vec<(Vec<Moments>, Vec<Moments>, usize)> = (0..spec.n_traj.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| -> Result<_> {
            let mut am: Vec<Moments> = (0..n_out).map(|_| Moments::new(dim_u)).collect();
            let mut dm: Vec<Moments> = (0..n_drift).map(|_| Moments::new(dim)).collect();
            let mut excluded = 0;
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(spec.n_traj);
            for id in lo..hi {
                let mut prev: Option<GroupElement> = None;
                sde.run(spec, id as u64, |k, g| {
                    if let Some(p) = prev.take() {
                        match increment_log(algebra, sde.chirality, &p, g) {
                            Ok(x) => dm[(k - 1) / stride].push((x * (1.0 / spec.dt)).as_slice()),
                            Err(Error::LogUndefined(_)) => excluded += 1,
                            Err(e) => return Err(e),
                        }
                    }
                    if k % stride == 0 {
                        am[k / stride].push(rep.advect_dual(algebra, g, alpha0)?.as_slice());
                        if k < n_steps {
                            prev = Some(g.clone());
                        }
                    }
                    Ok(())
                })?;
            }
            Ok((am, dm, excluded))
        })
        .collect::<Result<_>>()?;
    let mut am: Vec<Moments> = (0..n_out).map(|_| Moments::new(dim_u)).collect();
    let mut dm: Vec<Moments> = (0..n_drift).map(|_| Moments::new(dim)).collect();
    let mut excluded = 0;
    for (a, d, e) in &chunks {
        am.iter_mut().zip(a).for_each(|(x, y)| x.merge(y));
        dm.iter_mut().zip(d).for_each(|(x, y)| x.merge(y));
        excluded += e;
    }
    let shift = connection_drift(dim, &sde.noise, connection)?;
    let times: Vec<f64> = (0..n_out).map(|k| (k * stride) as f64 * spec.dt).collect();
    Ok(EnsembleSummary {
        drift: DriftEstimate {
            times: times[..n_drift].to_vec(),
            mean: dm
                .iter()
                .map(|m| AlgebraVector::from_slice(m.mean()) + shift.clone())
                .collect(),
            stderr: dm.iter().map(|m| AlgebraVector::new(m.stderr())).collect(),
            excluded,
        },
        advected: finish_advected(times, &am, spec.n_traj),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduced::integrate_advection;

    fn av(x: &[f64]) -> AlgebraVector {
        AlgebraVector::from_slice(x)
    }

    /// Probabilists' Gauss-Hermite rule, five points.
    const GH_NODES: [f64; 5] = [-2.8569700138728056, -1.3556261799742657, 0.0, 1.3556261799742657, 2.8569700138728056];
    const GH_WEIGHTS: [f64; 5] = [0.011257411327720691, 0.2220759220056126, 0.5333333333333333, 0.2220759220056126, 0.011257411327720691];

    #[test]
    fn deterministic_flow_is_one_exponential() {
        let g = LieAlgebra::so3();
        let conn = Connection::bi_invariant(&g, Chirality::Left);
        let u = av(&[0.3, -0.8, 0.5]);
        let uc = u.clone();
        let sde = GroupSde::new(&g, &conn, &[], Chirality::Left, true, move |_| uc.clone()).unwrap();
        let spec = EnsembleSpec::new(1, 1e-2, 1.0, 0).unwrap();
        let path = sde.simulate(&spec, 0, 1).unwrap();
        assert_eq!(path.sample(0), GroupElement::identity(3));
        let exact = g.exp(&(u * 1.0)).unwrap();
        assert!(path.sample(path.len() - 1).distance(&exact) < 1e-12);
    }

    #[test]
    fn abelian_path_matches_euler_maruyama() {
        let g = LieAlgebra::abelian(2);
        let conn = Connection::flat(&g, Chirality::Left);
        let h = vec![av(&[0.5, 0.1]), av(&[-0.2, 0.3]), av(&[0.0, 0.7])];
        let u = |t: f64| AlgebraVector::new(vec![t.cos(), 1.0 + t]);
        let sde = GroupSde::new(&g, &conn, &h, Chirality::Left, true, u).unwrap();
        let spec = EnsembleSpec::new(1, 1e-2, 0.5, 9).unwrap();
        let path = sde.simulate(&spec, 4, 1).unwrap();
        let rng = CounterRng::new(9);
        let mut x = [0.0, 0.0];
        for k in 0..50 {
            let t = k as f64 * 0.01;
            for (j, hj) in h.iter().enumerate() {
                let dw = rng.normal_at(4, (k * 3 + j) as u64) * 0.1;
                x[0] += hj[0] * dw;
                x[1] += hj[1] * dw;
            }
            x[0] += t.cos() * 0.01;
            x[1] += (1.0 + t) * 0.01;
            let m = path.sample(k + 1).mat;
            assert!((m[(0, 2)] - x[0]).abs() < 1e-13 && (m[(1, 2)] - x[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn abelian_generator_matches_gaussian_moments() {
        // f(x) = x1^2 on R^1 with dX = h dW + u dt: E f = (u t)^2 + h^2 t,
        // d/dt E f = 2u^2 t + h^2 = E[L f].
        let g = LieAlgebra::abelian(1);
        let conn = Connection::flat(&g, Chirality::Left);
        let (hv, uv) = (0.6, 0.8);
        let sde = GroupSde::new(&g, &conn, &[av(&[hv])], Chirality::Left, true, move |_| av(&[uv])).unwrap();
        let f = |e: &GroupElement| e.mat[(0, 1)].powi(2);
        let e = g.exp(&av(&[0.4])).unwrap();
        let lf = sde.generator(&f, &e, 0.0).unwrap();
        assert!((lf - (hv * hv + 2.0 * uv * 0.4)).abs() < 1e-8);
        let spec = EnsembleSpec::new(2000, 1e-2, 0.2, 1).unwrap();
        let paths = sde.simulate_ensemble(&spec, 5).unwrap();
        let report = generator_test(&sde, &paths, &f, 1.0).unwrap();
        assert!(report.pass, "{report:?}");
        let c = |_: &GroupElement| 1.0;
        let flat = generator_test(&sde, &paths, &c, 0.0).unwrap();
        assert!(flat.defect.iter().all(|d| d.abs() < 1e-9));
    }

    fn one_step_defect(sde: &GroupSde, dt: f64, f: &dyn Fn(&GroupElement) -> f64) -> f64 {
        let g = sde.algebra();
        let w = sde.drift(0.0);
        let mut mean = 0.0;
        for (a, wa) in GH_NODES.iter().zip(GH_WEIGHTS) {
            for (b, wb) in GH_NODES.iter().zip(GH_WEIGHTS) {
                for (c, wc) in GH_NODES.iter().zip(GH_WEIGHTS) {
                    let mut x = w.clone() * dt;
                    for (h, z) in sde.noise().iter().zip([a, b, c]) {
                        x.axpy(z * dt.sqrt(), h);
                    }
                    mean += wa * wb * wc * f(&g.exp(&x).unwrap());
                }
            }
        }
        let e = g.identity().unwrap();
        ((mean - f(&e)) / dt - sde.generator(f, &e, 0.0).unwrap()).abs()
    }

    #[test]
    fn scheme_has_weak_order_one() {
        let g = LieAlgebra::so3();
        let conn = Connection::bi_invariant(&g, Chirality::Left);
        let h: Vec<_> = (0..3).map(|i| g.basis(i) * 0.5).collect();
        let sde = GroupSde::new(&g, &conn, &h, Chirality::Left, true, |_| av(&[1.0, 0.3, -0.2])).unwrap();
        let m = nalgebra::DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, -0.3, 2.0, 0.1, 0.4, 0.0, 1.5]);
        let f = move |e: &GroupElement| (&e.mat * &m).trace();
        let d1 = one_step_defect(&sde, 0.02, &f);
        let d2 = one_step_defect(&sde, 0.01, &f);
        let ratio = d1 / d2;
        assert!((1.0..=4.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn drift_estimate_without_noise_is_exact() {
        let g = LieAlgebra::so3();
        let conn = Connection::bi_invariant(&g, Chirality::Right);
        let u = |t: f64| av(&[t.sin(), 0.5, -0.2]);
        let sde = GroupSde::new(&g, &conn, &[], Chirality::Right, true, u).unwrap();
        let spec = EnsembleSpec::new(3, 1e-2, 0.3, 5).unwrap();
        let paths = sde.simulate_ensemble(&spec, 1).unwrap();
        let est = drift_estimate(&g, &conn, &[], Chirality::Right, &paths).unwrap();
        for (t, m) in est.times.iter().zip(&est.mean) {
            assert!((m - &u(*t)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn abelian_drift_estimate_is_gaussian_mean() {
        let g = LieAlgebra::abelian(2);
        let conn = Connection::flat(&g, Chirality::Left);
        let h = vec![av(&[0.4, 0.0]), av(&[0.1, 0.3])];
        let sde = GroupSde::new(&g, &conn, &h, Chirality::Left, true, |_| av(&[1.0, -2.0])).unwrap();
        let spec = EnsembleSpec::new(1000, 1e-2, 0.05, 3).unwrap();
        let paths = sde.simulate_ensemble(&spec, 1).unwrap();
        let est = drift_estimate(&g, &conn, &h, Chirality::Left, &paths).unwrap();
        for (m, s) in est.mean.iter().zip(&est.stderr) {
            for (i, ui) in [1.0, -2.0].iter().enumerate() {
                assert!((m[i] - ui).abs() <= 3.0 * s[i] + 1e-9);
            }
        }
    }

    #[test]
    fn trivial_and_deterministic_advection() {
        let g = LieAlgebra::so3();
        let conn = Connection::bi_invariant(&g, Chirality::Left);
        let alpha0 = UCoVector::from_slice(&[0.2, -1.0, 0.5]);
        let u = |t: f64| av(&[t.sin(), 0.5, 0.0]);
        let sde = GroupSde::new(&g, &conn, &[], Chirality::Left, true, u).unwrap();
        let spec = EnsembleSpec::new(2, 1e-3, 0.5, 1).unwrap();
        let paths = sde.simulate_ensemble(&spec, 50).unwrap();
        let trivial = Representation::trivial(&g, 3, Chirality::Left).unwrap();
        let ens = advected_mean(&g, &paths, &trivial, &alpha0).unwrap();
        assert!(ens.mean.iter().all(|m| m == &alpha0));
        // Without noise the advected value follows dα/dt = -u α; the scheme is
        // first order in dt for time-dependent u.
        let rep = Representation::so3_vector(&g, Chirality::Left).unwrap();
        let ens = advected_mean(&g, &paths, &rep, &alpha0).unwrap();
        let ode = integrate_advection(&rep, &[], &u, &alpha0, 0.5, 1e-3).unwrap();
        for (k, m) in ens.mean.iter().enumerate() {
            assert!((m - &ode[k * 50]).max_abs() < 1e-3);
            assert!(ens.stderr[k].max_abs() < 1e-15);
        }
    }

    #[test]
    fn streaming_matches_stored_paths() {
        let g = LieAlgebra::so3();
        let conn = Connection::bi_invariant(&g, Chirality::Left);
        let h: Vec<_> = (0..3).map(|i| g.basis(i) * 0.3).collect();
        let sde = GroupSde::new(&g, &conn, &h, Chirality::Left, true, |t| av(&[t.sin(), 0.5, 0.0])).unwrap();
        let rep = Representation::so3_vector(&g, Chirality::Left).unwrap();
        let alpha0 = UCoVector::from_slice(&[0.0, 0.0, 1.0]);
        let spec = EnsembleSpec::new(150, 1e-2, 0.2, 77).unwrap();
        let paths = sde.simulate_ensemble(&spec, 5).unwrap();
        let stored = advected_mean(&g, &paths, &rep, &alpha0).unwrap();
        let streamed = run_ensemble(&sde, &conn, &spec, &rep, &alpha0, 5).unwrap();
        for (a, b) in stored.mean.iter().zip(&streamed.advected.mean) {
            assert!((a - b).max_abs() < 1e-14);
        }
        assert_eq!(streamed.drift.mean.len(), 4);
    }

    #[test]
    fn ensemble_is_independent_of_thread_count() {
        let g = LieAlgebra::so3();
        let conn = Connection::bi_invariant(&g, Chirality::Left);
        let h: Vec<_> = (0..3).map(|i| g.basis(i) * 0.3).collect();
        let sde = GroupSde::new(&g, &conn, &h, Chirality::Left, true, |t| av(&[t.sin(), 0.5, 0.0])).unwrap();
        let rep = Representation::so3_vector(&g, Chirality::Left).unwrap();
        let alpha0 = UCoVector::from_slice(&[1.0, 0.0, 0.0]);
        let spec = EnsembleSpec::new(300, 1e-2, 0.1, 5).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(&sde, &conn, &spec, &rep, &alpha0, 2).unwrap())
        };
        let (a, b) = (run(1), run(4));
        for (x, y) in a.advected.mean.iter().zip(&b.advected.mean) {
            assert_eq!(x.as_slice(), y.as_slice());
        }
        for (x, y) in a.drift.stderr.iter().zip(&b.drift.stderr) {
            assert_eq!(x.as_slice(), y.as_slice());
        }
    }

    #[test]
    fn spec_validation() {
        assert!(EnsembleSpec::new(10, 0.3, 1.0, 0).is_err());
        assert!(EnsembleSpec::new(0, 0.1, 1.0, 0).is_err());
        let g = LieAlgebra::new("bare", 1, vec![0.0]).unwrap();
        let conn = Connection::flat(&g, Chirality::Left);
        assert!(matches!(
            GroupSde::new(&g, &conn, &[], Chirality::Left, true, |_| av(&[1.0])),
            Err(Error::MissingMatrixRep(_))
        ));
    }
}
