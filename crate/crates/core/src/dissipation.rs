//! Noise directions, the connection correction of the drift, and the
//! dissipation operator `K` on momenta.

use nalgebra::DMatrix;

use crate::coords::{AlgebraVector, CoVector};
use crate::error::{check_dim, Error, Result};
use crate::lie::{Connection, LieAlgebra};

/// Constant noise directions: `h1` drives the momentum equation, `h2` the
/// advected quantity.
#[derive(Clone, Debug, Default)]
pub struct NoiseBasis {
    pub h1: Vec<AlgebraVector>,
    pub h2: Vec<AlgebraVector>,
}

impl NoiseBasis {
    pub fn new(dim: usize, h1: Vec<AlgebraVector>, h2: Vec<AlgebraVector>) -> Result<Self> {
        for h in h1.iter().chain(&h2) {
            check_dim("noise vector", dim, h.dim())?;
            if !h.is_finite() {
                return Err(Error::NonFinite("noise vector".into()));
            }
        }
        Ok(Self { h1, h2 })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `sigma * e_i` for every basis vector, in both lists.
    pub fn scaled_basis(dim: usize, sigma: f64) -> Self {
        let h: Vec<_> = (0..dim).map(|i| AlgebraVector::basis(dim, i) * sigma).collect();
        Self {
            h1: h.clone(),
            h2: h,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.h1.is_empty() && self.h2.is_empty()
    }
}

/// `½ Σ_j ∇_{H_j} H_j`.
pub fn connection_drift(dim: usize, h: &[AlgebraVector], conn: &Connection) -> Result<AlgebraVector> {
    check_dim("connection drift", conn.dim(), dim)?;
    let mut out = AlgebraVector::zeros(dim);
    for hj in h {
        out += &conn.nabla(hj, hj)?;
    }
    Ok(out * 0.5)
}

/// `ũ = u - ½ Σ_j ∇_{H_j} H_j`.
pub fn u_tilde(u: &AlgebraVector, h: &[AlgebraVector], conn: &Connection) -> Result<AlgebraVector> {
    Ok(u - &connection_drift(u.dim(), h, conn)?)
}

/// Matrix form of `K`, assembled over the algebra basis:
/// `<K mu, v> = -<mu, ½ Σ_j (∇_{[v,H_j]} H_j + ∇_{H_j} [v,H_j])>`.
#[derive(Clone, Debug)]
pub struct KOperator {
    matrix: DMatrix<f64>,
}

impl KOperator {
    pub fn assemble(algebra: &LieAlgebra, h1: &[AlgebraVector], conn: &Connection) -> Result<Self> {
        let n = algebra.dim();
        check_dim("k_operator connection", n, conn.dim())?;
        for h in h1 {
            check_dim("k_operator noise", n, h.dim())?;
        }
        if !h1.is_empty() && !conn.torsion_free() {
            log::warn!("dissipation operator assembled with a connection that has torsion");
        }
        let mut matrix = DMatrix::zeros(n, n);
        for m in 0..n {
            let v = algebra.basis(m);
            let mut w = AlgebraVector::zeros(n);
            for h in h1 {
                let adv = algebra.bracket_unchecked(&v, h);
                w += &conn.nabla_unchecked(&adv, h);
                w += &conn.nabla_unchecked(h, &adv);
            }
            for k in 0..n {
                matrix[(m, k)] = -0.5 * w[k];
            }
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Row `m` holds the coefficients of `<K mu, e_m>` in `mu`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, mu: &CoVector) -> Result<CoVector> {
        check_dim("k_operator", self.dim(), mu.dim())?;
        Ok(CoVector(&self.matrix * &mu.0))
    }

    pub fn apply_adjoint(&self, v: &AlgebraVector) -> Result<AlgebraVector> {
        check_dim("k_star", self.dim(), v.dim())?;
        Ok(AlgebraVector(self.matrix.tr_mul(&v.0)))
    }
}

pub fn k_operator(
    algebra: &LieAlgebra,
    mu: &CoVector,
    noise: &NoiseBasis,
    conn: &Connection,
) -> Result<CoVector> {
    KOperator::assemble(algebra, &noise.h1, conn)?.apply(mu)
}

pub fn k_star(
    algebra: &LieAlgebra,
    v: &AlgebraVector,
    noise: &NoiseBasis,
    conn: &Connection,
) -> Result<AlgebraVector> {
    KOperator::assemble(algebra, &noise.h1, conn)?.apply_adjoint(v)
}

/// `-½ Σ_i (∇_{H_i} ∇_{H_i} u + R(u, H_i) H_i)`, defined for a Levi-Civita
/// connection with every `∇_{H_i} H_i` zero.
pub fn k_curvature_form(
    algebra: &LieAlgebra,
    u: &AlgebraVector,
    noise: &NoiseBasis,
    conn: &Connection,
) -> Result<AlgebraVector> {
    let n = algebra.dim();
    check_dim("k_curvature_form", n, u.dim())?;
    check_dim("k_curvature_form connection", n, conn.dim())?;
    if conn.metric().is_none() {
        return Err(Error::CurvatureHypothesis(
            "connection is not the Levi-Civita connection of a metric".into(),
        ));
    }
    let mut out = AlgebraVector::zeros(n);
    for (i, h) in noise.h1.iter().enumerate() {
        check_dim("k_curvature_form noise", n, h.dim())?;
        let nhh = conn.nabla_unchecked(h, h);
        let scale = h.norm().powi(2).max(1.0);
        if nhh.max_abs() > 1e-12 * scale {
            return Err(Error::CurvatureHypothesis(format!(
                "nabla_H H is nonzero for noise vector {i} (|.| = {:e})",
                nhh.max_abs()
            )));
        }
        out += &conn.nabla_unchecked(h, &conn.nabla_unchecked(h, u));
        out += &conn.curvature(algebra, u, h, h)?;
    }
    Ok(out * -0.5)
}
