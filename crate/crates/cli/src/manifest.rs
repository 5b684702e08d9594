//! Run manifests: the resolved config, its content hash, the built-in checks
//! and a hash of every artifact.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ExperimentKind;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtMost, limit, pass: value <= limit }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtLeast, limit, pass: value >= limit }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: ExperimentKind,
    pub config: Value,
    pub config_sha256: String,
    pub status: Status,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    pub artifacts: Vec<Artifact>,
    pub threads: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the compact JSON form without the output directory, so a rerun
/// elsewhere hashes equally.
pub fn config_hash(config: &Value) -> String {
    let mut c = config.clone();
    if let Value::Object(m) = &mut c {
        m.remove("out");
    }
    sha256_hex(serde_json::to_string(&c).expect("json value serializes").as_bytes())
}

pub fn artifact(dir: &Path, rel: &str) -> io::Result<Artifact> {
    let bytes = std::fs::read(dir.join(rel))?;
    Ok(Artifact { path: rel.into(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) })
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        std::fs::write(dir.join(MANIFEST_FILE), text + "\n")
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        serde_json::from_str(&std::fs::read_to_string(path)?).map_err(io::Error::other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn checks_treat_nan_as_failure() {
        assert!(!Check::at_most("x", f64::NAN, 1.0).pass);
        assert!(!Check::at_least("x", f64::NAN, 1.0).pass);
        assert!(Check::at_most("x", 1.0, 1.0).pass);
        assert!(Check::at_least("x", 2.0, 1.0).pass);
    }

    #[test]
    fn config_hash_depends_on_content_only() {
        let a: Value = serde_json::json!({"seed": 1, "out": "x"});
        let b: Value = serde_json::from_str(r#"{ "seed" : 1, "out" : "x" }"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&serde_json::json!({"seed": 2, "out": "x"})));
        assert_eq!(config_hash(&a), config_hash(&serde_json::json!({"seed": 1, "out": "elsewhere"})));
    }
}
