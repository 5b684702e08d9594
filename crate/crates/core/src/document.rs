//! JSON documents describing an algebra, optionally with a connection, a
//! matrix representation of the group, and a representation on `U`.
//!
//! ```json
//! {"dim": 3, "c": [[[..]]], "gamma": [[[..]]], "rep": [[[..]]],
//!  "group": "so3", "chirality": "left", "torsion_free": true,
//!  "u_rep": {"rho": [[[..]]], "group_action": "defining"}}
//! ```
//! `c[i][j][k]` and `gamma[i][j][k]` are nested by index; `rep` and `rho` are
//! lists of row-major matrices.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{check_dim, Error, Result};
use crate::lie::{Chirality, Connection, GroupKind, LieAlgebra};
use crate::semidirect::{GroupAction, Representation};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDocument {
    #[serde(default)]
    pub name: Option<String>,
    pub dim: usize,
    pub c: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub gamma: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    pub rep: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    pub group: Option<GroupKind>,
    #[serde(default)]
    pub chirality: Option<Chirality>,
    #[serde(default)]
    pub torsion_free: Option<bool>,
    #[serde(default)]
    pub u_rep: Option<URepDocument>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct URepDocument {
    pub rho: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub chirality: Option<Chirality>,
    #[serde(default)]
    pub group_action: Option<GroupAction>,
}

#[derive(Clone, Debug)]
pub struct LoadedAlgebra {
    pub algebra: LieAlgebra,
    pub connection: Option<Connection>,
    pub representation: Option<Representation>,
}

fn matrix(rows: &[Vec<f64>], what: &'static str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map(|r| r.len()).unwrap_or(0);
    for r in rows {
        check_dim(what, m, r.len())?;
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

impl AlgebraDocument {
    pub fn build(&self) -> Result<LoadedAlgebra> {
        check_dim("algebra document c", self.dim, self.c.len())?;
        let name = self.name.clone().unwrap_or_else(|| "custom".into());
        let mut algebra = LieAlgebra::from_nested(name, &self.c)?;
        if let Some(rep) = &self.rep {
            let basis = rep
                .iter()
                .map(|m| matrix(m, "rep matrix"))
                .collect::<Result<Vec<_>>>()?;
            algebra = algebra.with_matrix_rep(basis, self.group.unwrap_or(GroupKind::General))?;
        } else if self.group.is_some() {
            return Err(Error::InvalidAlgebra("`group` given without `rep`".into()));
        }
        let chirality = self.chirality.unwrap_or(Chirality::Left);
        let connection = self
            .gamma
            .as_ref()
            .map(|g| {
                Connection::from_nested(&algebra, g, chirality, self.torsion_free.unwrap_or(false))
            })
            .transpose()?;
        let representation = self
            .u_rep
            .as_ref()
            .map(|u| {
                let rho = u
                    .rho
                    .iter()
                    .map(|m| matrix(m, "rho matrix"))
                    .collect::<Result<Vec<_>>>()?;
                Representation::new(&algebra, rho, u.chirality.unwrap_or(chirality), u.group_action)
            })
            .transpose()?;
        Ok(LoadedAlgebra {
            algebra,
            connection,
            representation,
        })
    }
}

pub fn parse(json: &str) -> Result<LoadedAlgebra> {
    let doc: AlgebraDocument = serde_json::from_str(json)?;
    doc.build()
}

pub fn load(path: impl AsRef<Path>) -> Result<LoadedAlgebra> {
    parse(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::AlgebraVector;

    const SO3: &str = r#"{
        "name": "so3",
        "dim": 3,
        "c": [[[0,0,0],[0,0,1],[0,-1,0]],
              [[0,0,-1],[0,0,0],[1,0,0]],
              [[0,1,0],[-1,0,0],[0,0,0]]],
        "gamma": [[[0,0,0],[0,0,0.5],[0,-0.5,0]],
                  [[0,0,-0.5],[0,0,0],[0.5,0,0]],
                  [[0,0.5,0],[-0.5,0,0],[0,0,0]]],
        "torsion_free": true,
        "rep": [[[0,0,0],[0,0,-1],[0,1,0]],
                [[0,0,1],[0,0,0],[-1,0,0]],
                [[0,-1,0],[1,0,0],[0,0,0]]],
        "group": "so3",
        "u_rep": {"rho": [[[0,0,0],[0,0,-1],[0,1,0]],
                          [[0,0,1],[0,0,0],[-1,0,0]],
                          [[0,-1,0],[1,0,0],[0,0,0]]],
                  "group_action": "defining"}
    }"#;

    #[test]
    fn loads_so3_document() {
        let loaded = parse(SO3).unwrap();
        let g = loaded.algebra;
        assert_eq!(g.structure_constants(), LieAlgebra::so3().structure_constants());
        let conn = loaded.connection.unwrap();
        assert!(conn.torsion_free());
        assert_eq!(conn.nabla(&g.basis(0), &g.basis(1)).unwrap(), g.basis(2) * 0.5);
        let rep = loaded.representation.unwrap();
        let r = g.exp(&AlgebraVector::from_slice(&[0.1, 0.2, 0.3])).unwrap();
        assert_eq!(rep.group_matrix(&g, &r).unwrap(), r.mat);
    }

    #[test]
    fn minimal_document() {
        let loaded = parse(r#"{"dim": 1, "c": [[[0]]]}"#).unwrap();
        assert_eq!(loaded.algebra.dim(), 1);
        assert!(loaded.connection.is_none());
        assert!(!loaded.algebra.has_matrix_rep());
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(parse(r#"{"dim": 1, "c": [[[0]]], "colour": 3}"#).is_err());
        assert!(parse(r#"{"dim": 2, "c": [[[0]]]}"#).is_err());
        let wrong = SO3.replace("\"torsion_free\": true", "\"torsion_free\": true, \"chirality\": \"right\"");
        assert!(matches!(parse(&wrong), Err(Error::InvalidConnection(_))));
    }
}
