//! Periodic pseudo-spectral fields on T² and T³ (side 2π).
//!
//! Fields are stored by their Fourier coefficients `hat[k] = (1/N) Σ_x f(x) e^{-ik·x}`
//! on a full complex grid, row-major with axis 0 slowest. Vector fields always carry
//! three components; on a 2D grid they describe T³ fields independent of θ₃.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{FluidError, Result};

const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub hat: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub c: [ScalarField; 3],
}

impl ScalarField {
    pub fn scale(&self, s: f64) -> ScalarField {
        ScalarField { hat: self.hat.iter().map(|z| z * s).collect() }
    }

    pub fn axpy(&mut self, s: f64, other: &ScalarField) {
        for (a, b) in self.hat.iter_mut().zip(&other.hat) {
            *a += b * s;
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.hat.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.hat.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

impl VectorField {
    pub fn from_components(c0: ScalarField, c1: ScalarField, c2: ScalarField) -> Self {
        VectorField { c: [c0, c1, c2] }
    }

    pub fn scale(&self, s: f64) -> VectorField {
        VectorField { c: self.c.clone().map(|f| f.scale(s)) }
    }

    pub fn axpy(&mut self, s: f64, other: &VectorField) {
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            a.axpy(s, b);
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(ScalarField::is_finite)
    }
}

/// Sidecar written next to a binary field dump.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DumpHeader {
    pub dims: usize,
    pub n: usize,
    pub components: usize,
    pub time: f64,
}

pub struct Grid {
    dims: usize,
    n: usize,
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    // integer wavenumber per index, Nyquist stored as -n/2
    wave: Vec<f64>,
    kmax: usize,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("dims", &self.dims).field("n", &self.n).finish()
    }
}

impl Grid {
    pub fn new(dims: usize, n: usize) -> Result<Self> {
        if dims != 2 && dims != 3 {
            return Err(FluidError::InvalidGrid(format!("dims must be 2 or 3, got {dims}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(FluidError::InvalidGrid(format!(
                "n must be a power of two >= 8, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let wave = (0..n)
            .map(|i| if i < n / 2 { i as f64 } else { i as f64 - n as f64 })
            .collect();
        Ok(Grid { dims, n, len: n.pow(dims as u32), forward, inverse, wave, kmax: n / 3 })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    /// Torus volume (2π)^dims.
    pub fn volume(&self) -> f64 {
        TAU.powi(self.dims as i32)
    }

    /// Largest retained wavenumber under the 2/3 rule.
    pub fn kmax(&self) -> usize {
        self.kmax
    }

    fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        if self.dims == 2 {
            [flat / n, flat % n, 0]
        } else {
            [flat / (n * n), (flat / n) % n, flat % n]
        }
    }

    /// Physical coordinates of grid point `flat`.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let h = self.spacing();
        let m = self.multi_index(flat);
        [m[0] as f64 * h, m[1] as f64 * h, if self.dims == 3 { m[2] as f64 * h } else { 0.0 }]
    }

    /// Integer wavevector of mode `flat`; the Nyquist entry is reported as -n/2.
    pub fn wavevector(&self, flat: usize) -> [f64; 3] {
        let m = self.multi_index(flat);
        [self.wave[m[0]], self.wave[m[1]], if self.dims == 3 { self.wave[m[2]] } else { 0.0 }]
    }

    fn is_nyquist(&self, idx: usize) -> bool {
        idx == self.n / 2
    }

    /// Wavevector used for differentiation: Nyquist components are zeroed so derivatives
    /// of real fields stay real.
    fn diff_wavevector(&self, flat: usize) -> [f64; 3] {
        let m = self.multi_index(flat);
        let mut k = self.wavevector(flat);
        for a in 0..self.dims {
            if self.is_nyquist(m[a]) {
                k[a] = 0.0;
            }
        }
        k
    }

    pub fn k2(&self, flat: usize) -> f64 {
        let k = self.wavevector(flat);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    fn retained(&self, flat: usize) -> bool {
        let k = self.wavevector(flat);
        k.iter().all(|v| v.abs() <= self.kmax as f64)
    }

    pub fn zeros(&self) -> ScalarField {
        ScalarField { hat: vec![Complex64::new(0.0, 0.0); self.len] }
    }

    pub fn zeros_vector(&self) -> VectorField {
        VectorField { c: [self.zeros(), self.zeros(), self.zeros()] }
    }

    pub fn constant(&self, value: f64) -> ScalarField {
        let mut f = self.zeros();
        f.hat[0] = Complex64::new(value, 0.0);
        f
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        if f.hat.len() != self.len {
            return Err(FluidError::Shape(format!(
                "field has {} coefficients, grid has {}",
                f.hat.len(),
                self.len
            )));
        }
        Ok(())
    }

    fn fft_axis(&self, data: &mut [Complex64], axis: usize, plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let stride = n.pow((self.dims - 1 - axis) as u32);
        if stride == 1 {
            plan.process(data);
            return;
        }
        let lines = self.len / n;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        // line l = (outer, inner) with outer over the slower axes, inner over the faster
        for l in 0..lines {
            let outer = l / stride;
            let inner = l % stride;
            let base = outer * stride * n + inner;
            for i in 0..n {
                buf[l * n + i] = data[base + i * stride];
            }
        }
        plan.process(&mut buf);
        for l in 0..lines {
            let outer = l / stride;
            let inner = l % stride;
            let base = outer * stride * n + inner;
            for i in 0..n {
                data[base + i * stride] = buf[l * n + i];
            }
        }
    }

    /// Forward transform of real samples.
    pub fn from_real(&self, values: &[f64]) -> Result<ScalarField> {
        if values.len() != self.len {
            return Err(FluidError::Shape(format!(
                "{} samples for a grid of {}",
                values.len(),
                self.len
            )));
        }
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for a in 0..self.dims {
            self.fft_axis(&mut data, a, &self.forward);
        }
        let s = 1.0 / self.len as f64;
        for z in &mut data {
            *z *= s;
        }
        Ok(ScalarField { hat: data })
    }

    /// Inverse transform; imaginary round-off is dropped.
    pub fn to_real(&self, f: &ScalarField) -> Vec<f64> {
        debug_assert_eq!(f.hat.len(), self.len);
        let mut data = f.hat.clone();
        for a in 0..self.dims {
            self.fft_axis(&mut data, a, &self.inverse);
        }
        data.into_iter().map(|z| z.re).collect()
    }

    pub fn scalar_from_fn(&self, f: impl Fn([f64; 3]) -> f64) -> ScalarField {
        let values: Vec<f64> = (0..self.len).map(|i| f(self.point(i))).collect();
        self.from_real(&values).expect("length matches grid")
    }

    pub fn vector_from_fn(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> VectorField {
        let samples: Vec<[f64; 3]> = (0..self.len).map(|i| f(self.point(i))).collect();
        let comp = |c: usize| {
            let v: Vec<f64> = samples.iter().map(|s| s[c]).collect();
            self.from_real(&v).expect("length matches grid")
        };
        VectorField { c: [comp(0), comp(1), comp(2)] }
    }

    pub fn vector_to_real(&self, v: &VectorField) -> [Vec<f64>; 3] {
        [self.to_real(&v.c[0]), self.to_real(&v.c[1]), self.to_real(&v.c[2])]
    }

    pub fn vector_from_real(&self, v: &[Vec<f64>; 3]) -> Result<VectorField> {
        Ok(VectorField {
            c: [self.from_real(&v[0])?, self.from_real(&v[1])?, self.from_real(&v[2])?],
        })
    }

    /// ∂f/∂θ_axis. Axes beyond `dims` differentiate to zero.
    pub fn deriv(&self, f: &ScalarField, axis: usize) -> ScalarField {
        let mut out = f.clone();
        if axis >= self.dims {
            out.hat.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            return out;
        }
        for (i, z) in out.hat.iter_mut().enumerate() {
            let k = self.diff_wavevector(i)[axis];
            *z *= Complex64::new(0.0, k);
        }
        out
    }

    pub fn grad(&self, f: &ScalarField) -> VectorField {
        VectorField { c: [self.deriv(f, 0), self.deriv(f, 1), self.deriv(f, 2)] }
    }

    pub fn div(&self, v: &VectorField) -> ScalarField {
        let mut out = self.deriv(&v.c[0], 0);
        out.axpy(1.0, &self.deriv(&v.c[1], 1));
        out.axpy(1.0, &self.deriv(&v.c[2], 2));
        out
    }

    /// Three-component curl; on 2D grids the θ₃-derivatives vanish.
    pub fn curl(&self, v: &VectorField) -> VectorField {
        let c0 = self.deriv(&v.c[2], 1).sub(&self.deriv(&v.c[1], 2));
        let c1 = self.deriv(&v.c[0], 2).sub(&self.deriv(&v.c[2], 0));
        let c2 = self.deriv(&v.c[1], 0).sub(&self.deriv(&v.c[0], 1));
        VectorField { c: [c0, c1, c2] }
    }

    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        let mut out = f.clone();
        for (i, z) in out.hat.iter_mut().enumerate() {
            let k = self.diff_wavevector(i);
            *z *= -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        }
        out
    }

    pub fn vector_laplacian(&self, v: &VectorField) -> VectorField {
        VectorField { c: v.c.clone().map(|f| self.laplacian(&f)) }
    }

    /// Leray projection onto divergence-free fields; the mean flow is kept.
    pub fn leray(&self, v: &VectorField) -> VectorField {
        let mut out = v.clone();
        for i in 0..self.len {
            let k = self.diff_wavevector(i);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                continue;
            }
            let kv = v.c[0].hat[i] * k[0] + v.c[1].hat[i] * k[1] + v.c[2].hat[i] * k[2];
            for (a, comp) in out.c.iter_mut().enumerate() {
                comp.hat[i] -= kv * (k[a] / k2);
            }
        }
        out
    }

    /// 2/3 rule: zero every mode with some |k_a| > n/3, including Nyquist.
    pub fn dealias(&self, f: &mut ScalarField) {
        for (i, z) in f.hat.iter_mut().enumerate() {
            if !self.retained(i) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn dealias_vector(&self, v: &mut VectorField) {
        for c in &mut v.c {
            self.dealias(c);
        }
    }

    pub fn is_dealiased(&self, f: &ScalarField) -> bool {
        f.hat.iter().enumerate().all(|(i, z)| self.retained(i) || *z == Complex64::new(0.0, 0.0))
    }

    /// Dealiased pointwise product. Inputs are truncated first, so the quadratic
    /// product is alias-free.
    pub fn nonlinear_product(&self, a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
        self.check(a)?;
        self.check(b)?;
        let mut ta = a.clone();
        let mut tb = b.clone();
        self.dealias(&mut ta);
        self.dealias(&mut tb);
        let pa = self.to_real(&ta);
        let pb = self.to_real(&tb);
        let prod: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
        let mut out = self.from_real(&prod)?;
        self.dealias(&mut out);
        Ok(out)
    }

    /// Forward transform of physical samples followed by truncation.
    pub fn project(&self, values: &[f64]) -> Result<ScalarField> {
        let mut f = self.from_real(values)?;
        self.dealias(&mut f);
        Ok(f)
    }

    pub fn mean(&self, f: &ScalarField) -> f64 {
        f.hat[0].re
    }

    pub fn integral(&self, f: &ScalarField) -> f64 {
        self.volume() * f.hat[0].re
    }

    /// Integral of a physical sample array by the (spectrally exact) rectangle rule.
    pub fn integral_real(&self, values: &[f64]) -> f64 {
        epsim_core::stats::compensated_sum(values.iter().copied()) * self.volume()
            / self.len as f64
    }

    pub fn l2_physical(&self, f: &ScalarField) -> f64 {
        let v = self.to_real(f);
        self.integral_real(&v.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt()
    }

    pub fn l2_spectral(&self, f: &ScalarField) -> f64 {
        let s = epsim_core::stats::compensated_sum(f.hat.iter().map(|z| z.norm_sqr()));
        (self.volume() * s).sqrt()
    }

    pub fn vector_l2(&self, v: &VectorField) -> f64 {
        v.c.iter().map(|c| self.l2_spectral(c).powi(2)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self, f: &ScalarField) -> f64 {
        self.to_real(f).iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Non-zero modes of a field as (wavevector, coefficient), for cheap off-grid evaluation.
    pub fn active_modes(&self, f: &ScalarField, threshold: f64) -> Vec<([f64; 3], Complex64)> {
        f.hat
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() > threshold)
            .map(|(i, z)| (self.wavevector(i), *z))
            .collect()
    }

    /// Write components as little-endian f64, row-major, component after component,
    /// with a `<path>.json` sidecar.
    pub fn dump(&self, path: &Path, fields: &[&ScalarField], time: f64) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for f in fields {
            self.check(f)?;
            for v in self.to_real(f) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        let header =
            DumpHeader { dims: self.dims, n: self.n, components: fields.len(), time };
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        std::fs::write(side, serde_json::to_string_pretty(&header)?)?;
        Ok(())
    }

    /// Read a dump written by [`Grid::dump`].
    pub fn load_dump(path: &Path) -> Result<(DumpHeader, Vec<Vec<f64>>)> {
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        let header: DumpHeader = serde_json::from_str(&std::fs::read_to_string(side)?)?;
        let bytes = std::fs::read(path)?;
        let len = header.n.pow(header.dims as u32);
        if bytes.len() != 8 * len * header.components {
            return Err(FluidError::Shape(format!(
                "dump holds {} bytes, header implies {}",
                bytes.len(),
                8 * len * header.components
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok((header, values.chunks(len).map(<[f64]>::to_vec).collect()))
    }
}

/// Fourth-order integrating-factor Runge-Kutta for systems `∂t f_i = κ_i Δf_i + N_i(f)`.
/// The diffusive part is integrated exactly per mode.
pub struct IfRk4 {
    dt: f64,
    e: Vec<Vec<f64>>,
    e2: Vec<Vec<f64>>,
}

impl IfRk4 {
    pub fn new(grid: &Grid, dt: f64, diffusivities: &[f64]) -> Self {
        let k2: Vec<f64> = (0..grid.len()).map(|i| {
            let k = grid.diff_wavevector(i);
            k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
        }).collect();
        let e = diffusivities.iter().map(|&m| k2.iter().map(|&q| (-m * q * dt).exp()).collect()).collect();
        let e2 = diffusivities
            .iter()
            .map(|&m| k2.iter().map(|&q| (-m * q * dt * 0.5).exp()).collect())
            .collect();
        IfRk4 { dt, e, e2 }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn apply(factor: &[Vec<f64>], y: &[ScalarField]) -> Vec<ScalarField> {
        y.iter()
            .zip(factor)
            .map(|(f, e)| ScalarField { hat: f.hat.iter().zip(e).map(|(z, s)| z * s).collect() })
            .collect()
    }

    fn combine(base: &[ScalarField], s: f64, k: &[ScalarField]) -> Vec<ScalarField> {
        base.iter()
            .zip(k)
            .map(|(b, k)| {
                let mut o = b.clone();
                o.axpy(s, k);
                o
            })
            .collect()
    }

    /// One step. `rhs` evaluates the non-diffusive part at a stage time offset.
    pub fn step<F>(&self, y: &[ScalarField], t: f64, mut rhs: F) -> Result<Vec<ScalarField>>
    where
        F: FnMut(&[ScalarField], f64) -> Result<Vec<ScalarField>>,
    {
        if y.len() != self.e.len() {
            return Err(FluidError::Shape(format!(
                "{} fields for {} diffusivities",
                y.len(),
                self.e.len()
            )));
        }
        let h = self.dt;
        let ey = Self::apply(&self.e2, y);
        let k1 = rhs(y, t)?;
        let s2 = Self::combine(&ey, 0.5 * h, &Self::apply(&self.e2, &k1));
        let k2 = rhs(&s2, t + 0.5 * h)?;
        let s3 = Self::combine(&ey, 0.5 * h, &k2);
        let k3 = rhs(&s3, t + 0.5 * h)?;
        let s4 = Self::combine(&Self::apply(&self.e, y), h, &Self::apply(&self.e2, &k3));
        let k4 = rhs(&s4, t + h)?;

        let mut out = Self::apply(&self.e, y);
        let k1e = Self::apply(&self.e, &k1);
        let k2e = Self::apply(&self.e2, &k2);
        let k3e = Self::apply(&self.e2, &k3);
        for i in 0..out.len() {
            out[i].axpy(h / 6.0, &k1e[i]);
            out[i].axpy(h / 3.0, &k2e[i]);
            out[i].axpy(h / 3.0, &k3e[i]);
            out[i].axpy(h / 6.0, &k4[i]);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid2() -> Grid {
        Grid::new(2, 16).unwrap()
    }

    fn max_diff(g: &Grid, a: &ScalarField, b: &ScalarField) -> f64 {
        g.to_real(a).iter().zip(g.to_real(b)).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    fn band_limited(g: &Grid, seed: u64) -> VectorField {
        let rng = epsim_core::rng::CounterRng::new(seed);
        let mut s = rng.stream(0);
        let mut coeffs = Vec::new();
        for _ in 0..3 {
            let mut c = Vec::new();
            for _ in 0..6 {
                c.push((s.normal(), s.normal(), s.normal(), s.normal()));
            }
            coeffs.push(c);
        }
        let d3 = g.dims() == 3;
        g.vector_from_fn(|x| {
            let mut out = [0.0; 3];
            for (a, cs) in coeffs.iter().enumerate() {
                for (m, (p, q, r, w)) in cs.iter().enumerate() {
                    let k = (m % 3 + 1) as f64;
                    let z = if d3 { x[2] } else { 0.0 };
                    out[a] += p * (k * x[0] + z).sin() + q * (k * x[1]).cos() + r * (x[0] - k * x[1] + 2.0 * z).sin() * w;
                }
            }
            out
        })
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(2, 12).is_err());
        assert!(Grid::new(2, 4).is_err());
        assert!(Grid::new(1, 16).is_err());
        assert!(Grid::new(3, 8).is_ok());
    }

    #[test]
    fn derivative_of_single_mode_is_exact() {
        let g = grid2();
        let f = g.scalar_from_fn(|x| x[0].sin());
        let df = g.deriv(&f, 0);
        let exact = g.scalar_from_fn(|x| x[0].cos());
        assert!(max_diff(&g, &df, &exact) < 1e-13);
        assert!(g.max_abs(&g.deriv(&f, 1)) < 1e-14);
    }

    #[test]
    fn laplacian_eigenfunction() {
        let g = Grid::new(3, 16).unwrap();
        let f = g.scalar_from_fn(|x| (3.0 * x[2] + 2.0 * x[0]).sin());
        let lap = g.laplacian(&f);
        assert!(max_diff(&g, &lap, &f.scale(-13.0)) < 1e-12);
    }

    #[test]
    fn vector_identities_hold() {
        for dims in [2, 3] {
            let g = Grid::new(dims, 16).unwrap();
            let a = band_limited(&g, 3);
            let dc = g.div(&g.curl(&a));
            assert!(g.max_abs(&dc) < 1e-12, "div curl {dims}D");
            let f = a.c[0].clone();
            let cg = g.curl(&g.grad(&f));
            for c in &cg.c {
                assert!(g.max_abs(c) < 1e-12, "curl grad {dims}D");
            }
        }
    }

    #[test]
    fn derivatives_commute() {
        let g = Grid::new(3, 16).unwrap();
        let f = band_limited(&g, 5).c[1].clone();
        let a = g.deriv(&g.deriv(&f, 0), 2);
        let b = g.deriv(&g.deriv(&f, 2), 0);
        assert!(max_diff(&g, &a, &b) < 1e-12);
        let l1 = g.laplacian(&g.deriv(&f, 1));
        let l2 = g.deriv(&g.laplacian(&f), 1);
        assert!(max_diff(&g, &l1, &l2) < 1e-11);
    }

    #[test]
    fn parseval() {
        let g = Grid::new(2, 32).unwrap();
        let f = band_limited(&g, 9).c[2].clone();
        let p = g.l2_physical(&f);
        let s = g.l2_spectral(&f);
        assert!((p - s).abs() < 1e-12 * p.max(1.0));
    }

    #[test]
    fn product_with_one_is_identity() {
        let g = grid2();
        let f = band_limited(&g, 1).c[0].clone();
        let mut ft = f.clone();
        g.dealias(&mut ft);
        let p = g.nonlinear_product(&f, &g.constant(1.0)).unwrap();
        assert!(max_diff(&g, &p, &ft) < 1e-13);
    }

    #[test]
    fn sin_cos_product() {
        let g = grid2();
        let s = g.scalar_from_fn(|x| x[0].sin());
        let c = g.scalar_from_fn(|x| x[0].cos());
        let p = g.nonlinear_product(&s, &c).unwrap();
        let exact = g.scalar_from_fn(|x| 0.5 * (2.0 * x[0]).sin());
        assert!(max_diff(&g, &p, &exact) < 1e-14);
    }

    #[test]
    fn aliasing_leaves_no_spurious_low_mode() {
        // n = 32 keeps |k| <= 10. cos(10θ)² has a 20-mode that aliases onto -12 and must vanish.
        let g = Grid::new(2, 32).unwrap();
        let f = g.scalar_from_fn(|x| (10.0 * x[0]).cos());
        let p = g.nonlinear_product(&f, &f).unwrap();
        let exact = g.constant(0.5);
        assert!(max_diff(&g, &p, &exact) < 1e-14);

        // Without truncation the product puts energy on storage index 20 (wavenumber -12).
        let raw: Vec<f64> = g.to_real(&f).iter().map(|v| v * v).collect();
        let rawf = g.from_real(&raw).unwrap();
        let idx_alias = 20 * 32;
        assert_eq!(g.wavevector(idx_alias)[0], -12.0);
        assert!(rawf.hat[idx_alias].norm() > 0.2);
        assert!(p.hat[idx_alias].norm() < 1e-15);

        // Nyquist-adjacent inputs are truncated before multiplying.
        let a = g.scalar_from_fn(|x| (15.0 * x[1]).cos());
        let b = g.scalar_from_fn(|x| (14.0 * x[1]).cos());
        let q = g.nonlinear_product(&a, &b).unwrap();
        assert!(q.max_coeff() < 1e-15);
        assert!(g.is_dealiased(&q));
    }

    #[test]
    fn leray_projects_to_divergence_free() {
        let g = Grid::new(3, 16).unwrap();
        let v = band_limited(&g, 11);
        let p = g.leray(&v);
        assert!(g.max_abs(&g.div(&p)) < 1e-12);
        // idempotent
        let pp = g.leray(&p);
        for a in 0..3 {
            assert!(max_diff(&g, &p.c[a], &pp.c[a]) < 1e-13);
        }
    }

    #[test]
    fn if_rk4_is_exact_for_pure_diffusion() {
        let g = grid2();
        let f = g.scalar_from_fn(|x| (3.0 * x[1]).sin());
        let mu = 0.07;
        let dt = 0.05;
        let stepper = IfRk4::new(&g, dt, &[mu]);
        let mut y = vec![f.clone()];
        for _ in 0..20 {
            y = stepper.step(&y, 0.0, |s, _| Ok(vec![g.zeros(); s.len()])).unwrap();
        }
        let exact = f.scale((-mu * 9.0 * 1.0f64).exp());
        assert!(max_diff(&g, &y[0], &exact) < 1e-14);
    }

    #[test]
    fn if_rk4_fourth_order_on_forced_decay() {
        // y' = -μk²y + cos(t) mode-wise; exact solution known
        let g = Grid::new(2, 8).unwrap();
        let mu = 0.5;
        let f0 = g.scalar_from_fn(|x| x[1].cos());
        let run = |steps: usize| {
            let dt = 1.0 / steps as f64;
            let st = IfRk4::new(&g, dt, &[mu]);
            let mut y = vec![f0.clone()];
            let mut t = 0.0;
            for _ in 0..steps {
                y = st.step(&y, t, |s, tt| Ok(vec![s[0].scale(0.0).add(&f0.scale(tt.cos()))])).unwrap();
                t += dt;
            }
            y[0].hat[1].re
        };
        let a: f64 = mu;
        // y(1) coefficient: e^{-a}(y0) + ∫ e^{-a(1-s)} cos s ds, y0 = 1/2
        let integral = (a * 1f64.cos() + 1f64.sin() - a * (-a).exp()) / (1.0 + a * a);
        let exact = 0.5 * (-a).exp() + 0.5 * integral;
        let e1 = (run(5) - exact).abs();
        let e2 = (run(10) - exact).abs();
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn dump_roundtrip() {
        let g = grid2();
        let f = g.scalar_from_fn(|x| x[0].sin() + 2.0);
        let dir = std::env::temp_dir().join(format!("epsim-dump-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.bin");
        g.dump(&path, &[&f, &f], 0.25).unwrap();
        let (h, comps) = Grid::load_dump(&path).unwrap();
        assert_eq!(h, DumpHeader { dims: 2, n: 16, components: 2, time: 0.25 });
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[1], g.to_real(&f));
        std::fs::remove_dir_all(dir).ok();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn transform_roundtrip(seed in 0u64..1000) {
            let g = Grid::new(2, 8).unwrap();
            let rng = epsim_core::rng::CounterRng::new(seed);
            let mut s = rng.stream(1);
            let v: Vec<f64> = (0..g.len()).map(|_| s.normal()).collect();
            let back = g.to_real(&g.from_real(&v).unwrap());
            for (a, b) in v.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-13);
            }
        }

        #[test]
        fn spectrum_is_hermitian(seed in 0u64..1000) {
            let g = Grid::new(2, 8).unwrap();
            let rng = epsim_core::rng::CounterRng::new(seed);
            let mut s = rng.stream(2);
            let v: Vec<f64> = (0..g.len()).map(|_| s.normal()).collect();
            let f = g.from_real(&v).unwrap();
            let n = g.n();
            for i in 0..n {
                for j in 0..n {
                    let a = f.hat[i * n + j];
                    let b = f.hat[((n - i) % n) * n + (n - j) % n];
                    prop_assert!((a - b.conj()).norm() < 1e-14);
                }
            }
        }
    }
}
