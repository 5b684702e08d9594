//! Linear representations of the algebra on `U`, the induced dual action on
//! `U*`, and the diamond operator pairing them with the algebra dual.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coords::{AlgebraVector, CoVector, UCoVector, UVector};
use crate::error::{check_dim, Error, Result};
use crate::lie::{Chirality, GroupElement, LieAlgebra};

/// How a group element acts on `U`, given the matrix of the element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupAction {
    /// `g . a = g a` (a left action).
    Defining,
    /// `a . g = g^{-1} a` (a right action).
    DefiningInverse,
    Trivial,
}

#[derive(Clone, Debug)]
pub struct Representation {
    algebra_dim: usize,
    dim_u: usize,
    rho: Vec<DMatrix<f64>>,
    chirality: Chirality,
    group_action: Option<GroupAction>,
}

impl Representation {
    /// `rho[i]` is the matrix of `e_i` acting on `U`. For right chirality the
    /// matrices are right-action generators and must be an anti-homomorphism.
    pub fn new(
        algebra: &LieAlgebra,
        rho: Vec<DMatrix<f64>>,
        chirality: Chirality,
        group_action: Option<GroupAction>,
    ) -> Result<Self> {
        let n = algebra.dim();
        check_dim("representation generators", n, rho.len())?;
        let dim_u = rho.first().map(|m| m.nrows()).unwrap_or(0);
        if dim_u == 0 {
            return Err(Error::InvalidRepresentation("dim U must be positive".into()));
        }
        for m in &rho {
            if m.nrows() != dim_u || m.ncols() != dim_u {
                return Err(Error::InvalidRepresentation(format!(
                    "generators must all be {dim_u}x{dim_u}"
                )));
            }
        }
        let s = chirality.sign();
        for i in 0..n {
            for j in 0..n {
                let comm = (&rho[i] * &rho[j] - &rho[j] * &rho[i]) * s;
                let mut img = DMatrix::zeros(dim_u, dim_u);
                for (k, r) in rho.iter().enumerate() {
                    img += r * algebra.c(i, j, k);
                }
                let d = (comm - img).amax();
                if d > 1e-12 {
                    return Err(Error::InvalidRepresentation(format!(
                        "not a {chirality:?} representation on ({i},{j}): defect {d:e}"
                    )));
                }
            }
        }
        let rep = Self {
            algebra_dim: n,
            dim_u,
            rho,
            chirality,
            group_action,
        };
        if let Some(action) = group_action {
            rep.check_group_action(algebra, action)?;
        }
        Ok(rep)
    }

    fn check_group_action(&self, algebra: &LieAlgebra, action: GroupAction) -> Result<()> {
        match (action, self.chirality) {
            (GroupAction::Defining, Chirality::Right) | (GroupAction::DefiningInverse, Chirality::Left) => {
                return Err(Error::InvalidRepresentation(format!(
                    "{action:?} group action does not match {:?} chirality",
                    self.chirality
                )))
            }
            _ => {}
        }
        if action == GroupAction::Trivial {
            if self.rho.iter().any(|m| m.amax() != 0.0) {
                return Err(Error::InvalidRepresentation(
                    "trivial group action needs zero generators".into(),
                ));
            }
            return Ok(());
        }
        let size = algebra.matrix_rep()?.size();
        check_dim("group action on U", size, self.dim_u)?;
        let h = 1e-6;
        for i in 0..self.algebra_dim {
            let e = algebra.basis(i);
            let plus = self.group_matrix_with(algebra, &algebra.exp(&(e.clone() * h))?, action)?;
            let minus = self.group_matrix_with(algebra, &algebra.exp(&(e * -h))?, action)?;
            let d = ((plus - minus) / (2.0 * h) - &self.rho[i]).amax();
            if d > 1e-6 {
                return Err(Error::InvalidRepresentation(format!(
                    "group action is not generated by rho[{i}] (defect {d:e})"
                )));
            }
        }
        Ok(())
    }

    /// The vector representation of so(3) on R^3: `v . a = v x a` for left,
    /// `a . v = -v x a` for right (generated by `g^{-1}`).
    pub fn so3_vector(algebra: &LieAlgebra, chirality: Chirality) -> Result<Self> {
        let basis = algebra.matrix_rep()?.basis().to_vec();
        match chirality {
            Chirality::Left => Self::new(algebra, basis, chirality, Some(GroupAction::Defining)),
            Chirality::Right => Self::new(
                algebra,
                basis.into_iter().map(|m| -m).collect(),
                chirality,
                Some(GroupAction::DefiningInverse),
            ),
        }
    }

    pub fn trivial(algebra: &LieAlgebra, dim_u: usize, chirality: Chirality) -> Result<Self> {
        Self::new(
            algebra,
            vec![DMatrix::zeros(dim_u, dim_u); algebra.dim()],
            chirality,
            Some(GroupAction::Trivial),
        )
    }

    pub fn dim_u(&self) -> usize {
        self.dim_u
    }

    pub fn algebra_dim(&self) -> usize {
        self.algebra_dim
    }

    pub fn chirality(&self) -> Chirality {
        self.chirality
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.rho
    }

    pub fn group_action(&self) -> Option<GroupAction> {
        self.group_action
    }

    pub fn rho_of(&self, v: &AlgebraVector) -> Result<DMatrix<f64>> {
        check_dim("rho", self.algebra_dim, v.dim())?;
        let mut m = DMatrix::zeros(self.dim_u, self.dim_u);
        for (i, r) in self.rho.iter().enumerate() {
            if v[i] != 0.0 {
                m += r * v[i];
            }
        }
        Ok(m)
    }

    pub fn act_algebra(&self, v: &AlgebraVector, a: &UVector) -> Result<UVector> {
        check_dim("act_algebra", self.dim_u, a.dim())?;
        Ok(UVector(self.rho_of(v)? * &a.0))
    }

    /// `-rho(v)^T alpha`, so that `<v alpha, a> = -<alpha, v a>`.
    pub fn act_dual(&self, v: &AlgebraVector, alpha: &UCoVector) -> Result<UCoVector> {
        check_dim("act_dual", self.dim_u, alpha.dim())?;
        Ok(UCoVector(-(self.rho_of(v)?.tr_mul(&alpha.0))))
    }

    /// `<a diamond alpha, v> = <alpha, v a>`.
    pub fn diamond(&self, a: &UVector, alpha: &UCoVector) -> Result<CoVector> {
        check_dim("diamond", self.dim_u, a.dim())?;
        check_dim("diamond", self.dim_u, alpha.dim())?;
        Ok(CoVector::new(
            self.rho.iter().map(|r| alpha.0.dot(&(r * &a.0))).collect(),
        ))
    }

    fn group_matrix_with(
        &self,
        algebra: &LieAlgebra,
        g: &GroupElement,
        action: GroupAction,
    ) -> Result<DMatrix<f64>> {
        match action {
            GroupAction::Trivial => Ok(DMatrix::identity(self.dim_u, self.dim_u)),
            GroupAction::Defining => {
                check_dim("group action", self.dim_u, g.size())?;
                Ok(g.mat.clone())
            }
            GroupAction::DefiningInverse => {
                check_dim("group action", self.dim_u, g.size())?;
                if algebra.matrix_rep()?.kind() != crate::lie::GroupKind::General {
                    return Ok(g.mat.transpose());
                }
                Ok(g.inverse()?.mat)
            }
        }
    }

    /// Matrix of the group element acting on `U` (on the left for left
    /// chirality, on the right for right chirality).
    pub fn group_matrix(&self, algebra: &LieAlgebra, g: &GroupElement) -> Result<DMatrix<f64>> {
        let action = self.group_action.ok_or_else(|| {
            Error::InvalidRepresentation("no group action attached to the representation".into())
        })?;
        self.group_matrix_with(algebra, g, action)
    }

    pub fn act_group(&self, algebra: &LieAlgebra, g: &GroupElement, a: &UVector) -> Result<UVector> {
        check_dim("act_group", self.dim_u, a.dim())?;
        Ok(UVector(self.group_matrix(algebra, g)? * &a.0))
    }

    /// Induced action on `U*`: `<g alpha, g a> = <alpha, a>`.
    pub fn act_group_dual(
        &self,
        algebra: &LieAlgebra,
        g: &GroupElement,
        alpha: &UCoVector,
    ) -> Result<UCoVector> {
        check_dim("act_group_dual", self.dim_u, alpha.dim())?;
        let m = self.group_matrix(algebra, &g.inverse()?)?;
        Ok(UCoVector(m.tr_mul(&alpha.0)))
    }

    /// Advected value `g^{-1} alpha0` (left) or `alpha0 g^{-1}` (right); in
    /// both cases the transpose of the group matrix applied to `alpha0`.
    pub fn advect_dual(
        &self,
        algebra: &LieAlgebra,
        g: &GroupElement,
        alpha0: &UCoVector,
    ) -> Result<UCoVector> {
        check_dim("advect_dual", self.dim_u, alpha0.dim())?;
        Ok(UCoVector(self.group_matrix(algebra, g)?.tr_mul(&alpha0.0)))
    }
}
