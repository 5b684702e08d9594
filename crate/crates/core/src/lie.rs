//! Finite-dimensional Lie algebras, their groups in a matrix representation,
//! and invariant affine connections given by coefficient arrays.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coords::{AlgebraVector, CoVector};
use crate::error::{check_dim, Error, Result};

/// Which translation the invariant objects are built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chirality {
    Left,
    Right,
}

impl Chirality {
    /// +1 for left, -1 for right. Right-invariant vector fields bracket to
    /// minus the algebra bracket, and the reduced equations flip sign with it.
    pub fn sign(self) -> f64 {
        match self {
            Chirality::Left => 1.0,
            Chirality::Right => -1.0,
        }
    }
}

/// Closed-form shortcuts available for the matrix group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    /// Standard hat basis of so(3); Rodrigues exp and closed-form log.
    So3,
    /// Orthogonal matrix group; compositions are re-orthonormalised.
    Orthogonal,
    General,
}

#[derive(Clone, Debug)]
pub struct MatrixRep {
    basis: Vec<DMatrix<f64>>,
    size: usize,
    /// Left inverse of the stacked basis, maps vec(X) to coordinates.
    vee_map: DMatrix<f64>,
    kind: GroupKind,
}

impl MatrixRep {
    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }
}

#[derive(Clone, Debug)]
pub struct LieAlgebra {
    name: String,
    dim: usize,
    c: Vec<f64>,
    rep: Option<Arc<MatrixRep>>,
}

const STRUCTURE_TOL: f64 = 1e-13;

impl LieAlgebra {
    /// Structure constants in row-major `c[(i*dim + j)*dim + k]`.
    pub fn new(name: impl Into<String>, dim: usize, c: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if dim == 0 {
            return Err(Error::InvalidAlgebra(format!("{name}: dimension must be positive")));
        }
        check_dim("structure constants", dim * dim * dim, c.len())?;
        if let Some(x) = c.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidAlgebra(format!("{name}: non-finite constant {x}")));
        }
        let alg = Self {
            name,
            dim,
            c,
            rep: None,
        };
        alg.validate()?;
        Ok(alg)
    }

    pub fn from_nested(name: impl Into<String>, c: &[Vec<Vec<f64>>]) -> Result<Self> {
        let dim = c.len();
        let mut flat = Vec::with_capacity(dim * dim * dim);
        for row in c {
            check_dim("structure constants", dim, row.len())?;
            for col in row {
                check_dim("structure constants", dim, col.len())?;
                flat.extend_from_slice(col);
            }
        }
        Self::new(name, dim, flat)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim;
        let scale = self.c.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let s = self.c(i, j, k) + self.c(j, i, k);
                    if s.abs() > STRUCTURE_TOL * scale {
                        return Err(Error::InvalidAlgebra(format!(
                            "{}: c[{i}][{j}][{k}] not antisymmetric",
                            self.name
                        )));
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = 0.0;
                        for m in 0..n {
                            s += self.c(i, j, m) * self.c(m, k, l)
                                + self.c(j, k, m) * self.c(m, i, l)
                                + self.c(k, i, m) * self.c(m, j, l);
                        }
                        if s.abs() > STRUCTURE_TOL * scale * scale {
                            return Err(Error::InvalidAlgebra(format!(
                                "{}: Jacobi identity fails at ({i},{j},{k},{l}) by {s:e}",
                                self.name
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Attach a faithful matrix representation `e_i -> basis[i]`.
    pub fn with_matrix_rep(mut self, basis: Vec<DMatrix<f64>>, kind: GroupKind) -> Result<Self> {
        check_dim("matrix representation", self.dim, basis.len())?;
        let size = basis[0].nrows();
        for b in &basis {
            if b.nrows() != size || b.ncols() != size {
                return Err(Error::InvalidAlgebra(format!(
                    "{}: representation matrices must all be {size}x{size}",
                    self.name
                )));
            }
        }
        let mut stacked = DMatrix::zeros(size * size, self.dim);
        for (i, b) in basis.iter().enumerate() {
            stacked.column_mut(i).copy_from_slice(b.as_slice());
        }
        let svd = stacked.clone().svd(true, true);
        let smax = svd.singular_values.max();
        if svd.singular_values.min() <= 1e-12 * smax.max(1.0) {
            return Err(Error::InvalidAlgebra(format!(
                "{}: representation matrices are linearly dependent",
                self.name
            )));
        }
        let vee_map = svd
            .pseudo_inverse(1e-14)
            .map_err(|e| Error::InvalidAlgebra(e.to_string()))?;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let comm = &basis[i] * &basis[j] - &basis[j] * &basis[i];
                let mut expect = DMatrix::zeros(size, size);
                for (k, b) in basis.iter().enumerate() {
                    expect += b * self.c(i, j, k);
                }
                if (comm - expect).amax() > 1e-12 {
                    return Err(Error::InvalidAlgebra(format!(
                        "{}: representation is not a homomorphism on ({i},{j})",
                        self.name
                    )));
                }
            }
        }
        if kind == GroupKind::So3 {
            let std = so3_hat_basis();
            if self.dim != 3 || basis.iter().zip(&std).any(|(a, b)| (a - b).amax() > 1e-14) {
                return Err(Error::InvalidAlgebra(format!(
                    "{}: group kind so3 requires the standard hat basis",
                    self.name
                )));
            }
        }
        self.rep = Some(Arc::new(MatrixRep {
            basis,
            size,
            vee_map,
            kind,
        }));
        Ok(self)
    }

    pub fn so3() -> Self {
        let mut c = vec![0.0; 27];
        for (i, j, k, s) in [
            (0, 1, 2, 1.0),
            (1, 2, 0, 1.0),
            (2, 0, 1, 1.0),
            (1, 0, 2, -1.0),
            (2, 1, 0, -1.0),
            (0, 2, 1, -1.0),
        ] {
            c[(i * 3 + j) * 3 + k] = s;
        }
        Self::new("so3", 3, c)
            .and_then(|a| a.with_matrix_rep(so3_hat_basis(), GroupKind::So3))
            .expect("so(3) is a Lie algebra")
    }

    /// Rotation `e1` and translations `e2, e3`, as 3x3 homogeneous matrices.
    pub fn se2() -> Self {
        let mut c = vec![0.0; 27];
        for (i, j, k, s) in [(0, 1, 2, 1.0), (1, 0, 2, -1.0), (0, 2, 1, -1.0), (2, 0, 1, 1.0)] {
            c[(i * 3 + j) * 3 + k] = s;
        }
        let e = |entries: &[(usize, usize, f64)]| {
            let mut m = DMatrix::zeros(3, 3);
            for &(r, col, v) in entries {
                m[(r, col)] = v;
            }
            m
        };
        let basis = vec![e(&[(0, 1, -1.0), (1, 0, 1.0)]), e(&[(0, 2, 1.0)]), e(&[(1, 2, 1.0)])];
        Self::new("se2", 3, c)
            .and_then(|a| a.with_matrix_rep(basis, GroupKind::General))
            .expect("se(2) is a Lie algebra")
    }

    /// `R^n` with zero bracket, represented by (n+1)x(n+1) translation matrices.
    pub fn abelian(n: usize) -> Self {
        let basis = (0..n)
            .map(|i| {
                let mut m = DMatrix::zeros(n + 1, n + 1);
                m[(i, n)] = 1.0;
                m
            })
            .collect();
        Self::new(format!("r{n}"), n, vec![0.0; n * n * n])
            .and_then(|a| a.with_matrix_rep(basis, GroupKind::General))
            .expect("abelian algebra")
    }

    /// `[e1, e2] = e3`, strictly upper-triangular 3x3 matrices.
    pub fn heisenberg() -> Self {
        let mut c = vec![0.0; 27];
        for (i, j, k, s) in [(0, 1, 2, 1.0), (1, 0, 2, -1.0)] {
            c[(i * 3 + j) * 3 + k] = s;
        }
        let e = |r: usize, col: usize| {
            let mut m = DMatrix::zeros(3, 3);
            m[(r, col)] = 1.0;
            m
        };
        Self::new("heisenberg", 3, c)
            .and_then(|a| a.with_matrix_rep(vec![e(0, 1), e(1, 2), e(0, 2)], GroupKind::General))
            .expect("Heisenberg algebra")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    pub fn structure_constants(&self) -> &[f64] {
        &self.c
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    pub fn matrix_rep(&self) -> Result<&MatrixRep> {
        self.rep
            .as_deref()
            .ok_or_else(|| Error::MissingMatrixRep(self.name.clone()))
    }

    pub fn has_matrix_rep(&self) -> bool {
        self.rep.is_some()
    }

    pub fn basis(&self, i: usize) -> AlgebraVector {
        AlgebraVector::basis(self.dim, i)
    }

    pub fn zero(&self) -> AlgebraVector {
        AlgebraVector::zeros(self.dim)
    }

    pub fn bracket(&self, u: &AlgebraVector, v: &AlgebraVector) -> Result<AlgebraVector> {
        check_dim("bracket", self.dim, u.dim())?;
        check_dim("bracket", self.dim, v.dim())?;
        Ok(self.bracket_unchecked(u, v))
    }

    pub(crate) fn bracket_unchecked(&self, u: &AlgebraVector, v: &AlgebraVector) -> AlgebraVector {
        let n = self.dim;
        let mut out = AlgebraVector::zeros(n);
        for i in 0..n {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = u[i] * v[j];
                if w == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[k] += w * self.c(i, j, k);
                }
            }
        }
        out
    }

    /// `<ad*_u mu, v> = <mu, [u, v]>`.
    pub fn ad_star(&self, u: &AlgebraVector, mu: &CoVector) -> Result<CoVector> {
        check_dim("ad_star", self.dim, u.dim())?;
        check_dim("ad_star", self.dim, mu.dim())?;
        Ok(self.ad_star_unchecked(u, mu))
    }

    pub(crate) fn ad_star_unchecked(&self, u: &AlgebraVector, mu: &CoVector) -> CoVector {
        let n = self.dim;
        let mut out = CoVector::zeros(n);
        for i in 0..n {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.c(i, j, k) * mu[k];
                }
                out[j] += u[i] * s;
            }
        }
        out
    }

    /// Matrix of `v -> [u, v]`.
    pub fn ad_matrix(&self, u: &AlgebraVector) -> Result<DMatrix<f64>> {
        check_dim("ad_matrix", self.dim, u.dim())?;
        let n = self.dim;
        Ok(DMatrix::from_fn(n, n, |k, j| {
            (0..n).map(|i| u[i] * self.c(i, j, k)).sum()
        }))
    }

    pub fn hat(&self, u: &AlgebraVector) -> Result<DMatrix<f64>> {
        check_dim("hat", self.dim, u.dim())?;
        let rep = self.matrix_rep()?;
        let mut m = DMatrix::zeros(rep.size, rep.size);
        for (i, b) in rep.basis.iter().enumerate() {
            if u[i] != 0.0 {
                m += b * u[i];
            }
        }
        Ok(m)
    }

    /// Coordinates of a matrix lying in the span of the representation.
    pub fn vee(&self, m: &DMatrix<f64>) -> Result<AlgebraVector> {
        let rep = self.matrix_rep()?;
        check_dim("vee", rep.size, m.nrows())?;
        check_dim("vee", rep.size, m.ncols())?;
        if rep.kind == GroupKind::So3 {
            return Ok(AlgebraVector::new(vec![
                0.5 * (m[(2, 1)] - m[(1, 2)]),
                0.5 * (m[(0, 2)] - m[(2, 0)]),
                0.5 * (m[(1, 0)] - m[(0, 1)]),
            ]));
        }
        let flat = nalgebra::DVector::from_column_slice(m.as_slice());
        Ok(AlgebraVector(&rep.vee_map * flat))
    }

    pub fn identity(&self) -> Result<GroupElement> {
        Ok(GroupElement::identity(self.matrix_rep()?.size))
    }

    pub fn exp(&self, u: &AlgebraVector) -> Result<GroupElement> {
        check_dim("exp", self.dim, u.dim())?;
        if !u.is_finite() {
            return Err(Error::NonFinite("exp argument".into()));
        }
        let rep = self.matrix_rep()?;
        if rep.kind == GroupKind::So3 {
            return Ok(GroupElement {
                mat: rodrigues(u[0], u[1], u[2]),
            });
        }
        let x = self.hat(u)?;
        if self.is_abelian() && rep.basis.iter().all(|b| (b * b).amax() == 0.0) {
            // Nilpotent of order two: the series stops after the linear term.
            return Ok(GroupElement {
                mat: DMatrix::identity(rep.size, rep.size) + x,
            });
        }
        Ok(GroupElement { mat: x.exp() })
    }

    /// Principal logarithm. Fails near the cut locus.
    pub fn log(&self, g: &GroupElement) -> Result<AlgebraVector> {
        let rep = self.matrix_rep()?;
        check_dim("log", rep.size, g.mat.nrows())?;
        if rep.kind == GroupKind::So3 {
            return so3_log(&g.mat).map(AlgebraVector::new);
        }
        let n = rep.size;
        let x = &g.mat - DMatrix::identity(n, n);
        let nx = x.norm();
        if nx >= 0.5 {
            return Err(Error::LogUndefined(format!(
                "|g - I| = {nx:.3} outside the series domain"
            )));
        }
        // log(I + X) = X - X^2/2 + X^3/3 - ...
        let mut term = x.clone();
        let mut acc = x.clone();
        for m in 2..200 {
            term = &term * &x;
            let add = &term * (if m % 2 == 0 { -1.0 } else { 1.0 } / m as f64);
            let size = add.amax();
            acc += add;
            if size < 1e-17 {
                break;
            }
        }
        self.vee(&acc)
    }

    /// `Ad_g u = g u g^{-1}` mapped back to coordinates.
    pub fn adjoint(&self, g: &GroupElement, u: &AlgebraVector) -> Result<AlgebraVector> {
        check_dim("adjoint", self.dim, u.dim())?;
        let rep = self.matrix_rep()?;
        if rep.kind == GroupKind::So3 {
            return Ok(AlgebraVector(&g.mat * &u.0));
        }
        let inv = g.inverse()?;
        self.vee(&(&g.mat * self.hat(u)? * &inv.mat))
    }
}

pub(crate) fn so3_hat_basis() -> Vec<DMatrix<f64>> {
    let hat = |x: f64, y: f64, z: f64| {
        DMatrix::from_row_slice(3, 3, &[0.0, -z, y, z, 0.0, -x, -y, x, 0.0])
    };
    vec![hat(1.0, 0.0, 0.0), hat(0.0, 1.0, 0.0), hat(0.0, 0.0, 1.0)]
}

fn rodrigues(x: f64, y: f64, z: f64) -> DMatrix<f64> {
    let th2 = x * x + y * y + z * z;
    let th = th2.sqrt();
    let (a, b) = if th < 1e-4 {
        (1.0 - th2 / 6.0 + th2 * th2 / 120.0, 0.5 - th2 / 24.0 + th2 * th2 / 720.0)
    } else {
        (th.sin() / th, (1.0 - th.cos()) / th2)
    };
    let k = DMatrix::from_row_slice(3, 3, &[0.0, -z, y, z, 0.0, -x, -y, x, 0.0]);
    let k2 = &k * &k;
    DMatrix::identity(3, 3) + k * a + k2 * b
}

fn so3_log(r: &DMatrix<f64>) -> Result<Vec<f64>> {
    let tr = r[(0, 0)] + r[(1, 1)] + r[(2, 2)];
    let cos = ((tr - 1.0) * 0.5).clamp(-1.0, 1.0);
    let th = cos.acos();
    let skew = [
        0.5 * (r[(2, 1)] - r[(1, 2)]),
        0.5 * (r[(0, 2)] - r[(2, 0)]),
        0.5 * (r[(1, 0)] - r[(0, 1)]),
    ];
    if th < 1e-4 {
        let f = 1.0 + th * th / 6.0;
        return Ok(skew.iter().map(|s| s * f).collect());
    }
    let sin = th.sin();
    if sin > 1e-3 {
        let f = th / sin;
        return Ok(skew.iter().map(|s| s * f).collect());
    }
    if sin < 1e-10 {
        return Err(Error::LogUndefined("rotation by pi".into()));
    }
    // Near pi: recover the axis from the symmetric part, sign from the skew part.
    let denom = 1.0 - cos;
    let nn = |i: usize, j: usize| (0.5 * (r[(i, j)] + r[(j, i)]) - if i == j { cos } else { 0.0 }) / denom;
    let diag = [nn(0, 0), nn(1, 1), nn(2, 2)];
    let p = (0..3)
        .max_by(|&a, &b| diag[a].total_cmp(&diag[b]))
        .unwrap_or(0);
    let np = diag[p].max(0.0).sqrt();
    let mut axis = [0.0; 3];
    for (i, a) in axis.iter_mut().enumerate() {
        *a = if i == p { np } else { nn(p, i) / np };
    }
    let dot: f64 = axis.iter().zip(&skew).map(|(a, s)| a * s).sum();
    let sgn = if dot < 0.0 { -1.0 } else { 1.0 };
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok(axis.iter().map(|a| sgn * th * a / norm).collect())
}

/// Element of a matrix Lie group.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub mat: DMatrix<f64>,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMatrix::identity(n, n),
        }
    }

    pub fn from_matrix(mat: DMatrix<f64>) -> Self {
        Self { mat }
    }

    pub fn size(&self) -> usize {
        self.mat.nrows()
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            mat: &self.mat * &other.mat,
        }
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        self.mat
            .clone()
            .try_inverse()
            .map(|mat| GroupElement { mat })
            .ok_or_else(|| Error::Singular("group element inverse".into()))
    }

    /// Nearest orthogonal matrix (polar factor).
    pub fn reorthonormalize(&mut self) {
        let svd = self.mat.clone().svd(true, true);
        if let (Some(u), Some(vt)) = (svd.u, svd.v_t) {
            self.mat = u * vt;
        }
    }

    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.size();
        (self.mat.transpose() * &self.mat - DMatrix::identity(n, n)).amax()
    }

    pub fn distance(&self, other: &GroupElement) -> f64 {
        (&self.mat - &other.mat).amax()
    }
}

/// Invariant affine connection `nabla_{e_i} e_j = sum_k gamma[i][j][k] e_k`.
#[derive(Clone, Debug)]
pub struct Connection {
    dim: usize,
    gamma: Vec<f64>,
    chirality: Chirality,
    torsion_free: bool,
    metric: Option<DMatrix<f64>>,
}

impl Connection {
    /// Arbitrary coefficients. A torsion-free claim is checked against the
    /// bracket of invariant vector fields of the given chirality.
    pub fn new(
        algebra: &LieAlgebra,
        gamma: Vec<f64>,
        chirality: Chirality,
        torsion_free: bool,
    ) -> Result<Self> {
        let n = algebra.dim();
        check_dim("connection coefficients", n * n * n, gamma.len())?;
        if gamma.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConnection("non-finite coefficient".into()));
        }
        let conn = Self {
            dim: n,
            gamma,
            chirality,
            torsion_free,
            metric: None,
        };
        if torsion_free {
            if let Some((i, j, k, d)) = conn.torsion_defect(algebra) {
                return Err(Error::InvalidConnection(format!(
                    "claimed torsion-free but T[{i}][{j}][{k}] = {d:e}"
                )));
            }
        }
        Ok(conn)
    }

    pub fn from_nested(
        algebra: &LieAlgebra,
        gamma: &[Vec<Vec<f64>>],
        chirality: Chirality,
        torsion_free: bool,
    ) -> Result<Self> {
        let n = algebra.dim();
        check_dim("connection coefficients", n, gamma.len())?;
        let mut flat = Vec::with_capacity(n * n * n);
        for row in gamma {
            check_dim("connection coefficients", n, row.len())?;
            for col in row {
                check_dim("connection coefficients", n, col.len())?;
                flat.extend_from_slice(col);
            }
        }
        Self::new(algebra, flat, chirality, torsion_free)
    }

    /// `Gamma = 0`. Torsion-free only on an abelian algebra.
    pub fn flat(algebra: &LieAlgebra, chirality: Chirality) -> Self {
        let n = algebra.dim();
        Self {
            dim: n,
            gamma: vec![0.0; n * n * n],
            chirality,
            torsion_free: algebra.is_abelian(),
            metric: None,
        }
    }

    /// `nabla_u v = ±½[u, v]`, the torsion-free connection whose geodesics are
    /// one-parameter subgroups.
    pub fn bi_invariant(algebra: &LieAlgebra, chirality: Chirality) -> Self {
        let s = 0.5 * chirality.sign();
        Self {
            dim: algebra.dim(),
            gamma: algebra.structure_constants().iter().map(|c| s * c).collect(),
            chirality,
            torsion_free: true,
            metric: None,
        }
    }

    /// Levi-Civita connection of the invariant metric with Gram matrix `metric`,
    /// from the Koszul formula.
    pub fn levi_civita(
        algebra: &LieAlgebra,
        metric: &DMatrix<f64>,
        chirality: Chirality,
    ) -> Result<Self> {
        let n = algebra.dim();
        check_dim("metric", n, metric.nrows())?;
        check_dim("metric", n, metric.ncols())?;
        if (metric - metric.transpose()).amax() > 1e-14 * metric.amax() {
            return Err(Error::InvalidConnection("metric is not symmetric".into()));
        }
        let chol = metric
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidConnection("metric is not positive definite".into()))?;
        let s = chirality.sign();
        // g(b(x, y), e_z) for basis vectors, with b the invariant-field bracket.
        let gb = |x: usize, y: usize, z: usize| -> f64 {
            s * (0..n).map(|m| algebra.c(x, y, m) * metric[(m, z)]).sum::<f64>()
        };
        let mut gamma = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                let rhs = nalgebra::DVector::from_fn(n, |c, _| {
                    0.5 * (gb(a, b, c) - gb(b, c, a) + gb(c, a, b))
                });
                let sol = chol.solve(&rhs);
                for k in 0..n {
                    gamma[(a * n + b) * n + k] = sol[k];
                }
            }
        }
        Ok(Self {
            dim: n,
            gamma,
            chirality,
            torsion_free: true,
            metric: Some(metric.clone()),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chirality(&self) -> Chirality {
        self.chirality
    }

    pub fn torsion_free(&self) -> bool {
        self.torsion_free
    }

    /// Gram matrix, present only for Levi-Civita connections.
    pub fn metric(&self) -> Option<&DMatrix<f64>> {
        self.metric.as_ref()
    }

    #[inline]
    pub fn gamma(&self, i: usize, j: usize, k: usize) -> f64 {
        self.gamma[(i * self.dim + j) * self.dim + k]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.gamma
    }

    /// First basis triple where `nabla_i e_j - nabla_j e_i != b(e_i, e_j)`.
    pub fn torsion_defect(&self, algebra: &LieAlgebra) -> Option<(usize, usize, usize, f64)> {
        let n = self.dim;
        let s = self.chirality.sign();
        let scale = self
            .gamma
            .iter()
            .chain(algebra.structure_constants())
            .fold(1.0_f64, |m, x| m.max(x.abs()));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let d = self.gamma(i, j, k) - self.gamma(j, i, k) - s * algebra.c(i, j, k);
                    if d.abs() > 1e-12 * scale {
                        return Some((i, j, k, d));
                    }
                }
            }
        }
        None
    }

    pub fn nabla(&self, u: &AlgebraVector, v: &AlgebraVector) -> Result<AlgebraVector> {
        check_dim("nabla", self.dim, u.dim())?;
        check_dim("nabla", self.dim, v.dim())?;
        Ok(self.nabla_unchecked(u, v))
    }

    pub(crate) fn nabla_unchecked(&self, u: &AlgebraVector, v: &AlgebraVector) -> AlgebraVector {
        let n = self.dim;
        let mut out = AlgebraVector::zeros(n);
        for i in 0..n {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = u[i] * v[j];
                if w == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[k] += w * self.gamma(i, j, k);
                }
            }
        }
        out
    }

    /// `R(u,v)w = nabla_u nabla_v w - nabla_v nabla_u w - nabla_{[u,v]} w`, with
    /// the bracket of invariant vector fields of this connection's chirality.
    pub fn curvature(
        &self,
        algebra: &LieAlgebra,
        u: &AlgebraVector,
        v: &AlgebraVector,
        w: &AlgebraVector,
    ) -> Result<AlgebraVector> {
        check_dim("curvature", self.dim, algebra.dim())?;
        for x in [u, v, w] {
            check_dim("curvature", self.dim, x.dim())?;
        }
        let uv = algebra.bracket_unchecked(u, v) * self.chirality.sign();
        let a = self.nabla_unchecked(u, &self.nabla_unchecked(v, w));
        let b = self.nabla_unchecked(v, &self.nabla_unchecked(u, w));
        let c = self.nabla_unchecked(&uv, w);
        Ok(a - b - c)
    }
}
