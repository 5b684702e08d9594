//! Experiment configuration: preset defaults merged with a user TOML file (or
//! the config block of an earlier manifest), then strictly deserialized.

use std::fmt;
use std::path::{Path, PathBuf};

use epsim_core::reduced::step_count;
use epsim_fluid::mhd::{Eos, InitialCondition, Viscosities};
use epsim_fluid::Grid;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::presets;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Reduced,
    Ensemble,
    Criticality,
    Mhd,
    Incompressible,
    FlowOracle,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Reduced => "reduced",
            ExperimentKind::Ensemble => "ensemble",
            ExperimentKind::Criticality => "criticality",
            ExperimentKind::Mhd => "mhd",
            ExperimentKind::Incompressible => "incompressible",
            ExperimentKind::FlowOracle => "flow-oracle",
        }
    }

    /// Config table holding the experiment's parameters.
    pub fn section(self) -> &'static str {
        match self {
            ExperimentKind::FlowOracle => "flow_oracle",
            k => k.name(),
        }
    }

    pub fn needs_system(self) -> bool {
        matches!(
            self,
            ExperimentKind::Reduced | ExperimentKind::Ensemble | ExperimentKind::Criticality
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const SECTIONS: [&str; 7] = [
    "system",
    "reduced",
    "ensemble",
    "criticality",
    "mhd",
    "incompressible",
    "flow_oracle",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub seed: u64,
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced: Option<ReducedConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criticality: Option<CriticalityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mhd: Option<MhdConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incompressible: Option<IncompressibleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_oracle: Option<FlowOracleConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagrangianKind {
    /// `l = ½⟨u, Iu⟩`.
    RigidBody,
    /// `l = ½⟨u, Iu⟩ − mgl⟨χ, α⟩`.
    HeavyTop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectionKind {
    /// Levi-Civita connection of the metric `diag(inertia)`.
    LeviCivita,
    BiInvariant,
}

/// An so(3) system with the vector representation on `U = R³`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub lagrangian: LagrangianKind,
    pub inertia: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mgl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<[f64; 3]>,
    pub chirality: epsim_core::lie::Chirality,
    pub connection: ConnectionKind,
    pub connection_correction: bool,
    /// Scale of the momentum noise basis `H¹ = σ₁·{e₁, e₂, e₃}`.
    pub noise_h1: f64,
    /// Scale of the advection noise basis `H²`.
    pub noise_h2: f64,
    pub u0: [f64; 3],
    pub alpha0: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedConfig {
    pub dt: f64,
    pub t_final: f64,
    pub output_stride: usize,
    pub directions: usize,
    pub residual_tolerance: f64,
    /// Bound on Casimir drift; checked only without noise.
    pub conservation_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VelocityConfig {
    Constant { value: [f64; 3] },
    /// `offset + amplitude·sin(frequency·t)`.
    Harmonic { offset: [f64; 3], amplitude: [f64; 3], frequency: f64 },
}

impl VelocityConfig {
    pub fn at(&self, t: f64) -> [f64; 3] {
        match self {
            VelocityConfig::Constant { value } => *value,
            VelocityConfig::Harmonic { offset, amplitude, frequency } => {
                let s = (frequency * t).sin();
                [0, 1, 2].map(|i| offset[i] + amplitude[i] * s)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub dt: f64,
    pub t_final: f64,
    pub output_stride: usize,
    pub velocity: VelocityConfig,
    /// The ensemble mean must lie within `3·stderr + dt_factor·dt` of the ODE.
    pub dt_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalityConfig {
    pub dt: f64,
    pub t_final: f64,
    pub directions: usize,
    /// Amplitude of the `sin(t)·e₁` perturbation of `u` used as the contrast run.
    pub perturbation: f64,
    /// Required ratio of perturbed to unperturbed `|dJ/dε|`, per direction.
    pub contrast: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MhdChecks {
    pub mass_drift: f64,
    pub div_b: f64,
    /// Per-step relative energy increase allowed; omit to skip the check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_step: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MhdConfig {
    pub dims: usize,
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    /// Diagnostics cadence in steps.
    pub output_every: usize,
    /// Field dump cadence in steps; 0 disables dumps.
    pub dump_every: usize,
    pub log_density_term: bool,
    pub eos: Eos,
    pub viscosities: Viscosities,
    pub initial: InitialCondition,
    pub checks: MhdChecks,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncompressibleChecks {
    pub divergence: f64,
    /// Max deviation from the decaying Taylor-Green solution; used only for
    /// that initial condition.
    pub closed_form: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncompressibleConfig {
    pub dims: usize,
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub output_every: usize,
    pub nu: f64,
    pub mu3: f64,
    pub initial: InitialCondition,
    pub checks: IncompressibleChecks,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowOracleConfig {
    /// PDE grid size.
    pub n: usize,
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Frozen Taylor-Green velocity amplitude.
    pub amplitude: f64,
    /// Particle lattice per batch.
    pub lattice: [usize; 2],
    pub batches: usize,
    /// Constant `C` in the allowance `C·(dt + n⁻²)`.
    pub allowance: f64,
    pub defect_tolerance: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("unknown preset `{0}` (available: {list})", list = presets::NAMES.join(", "))]
    UnknownPreset(String),
    #[error("config is for experiment `{found}` but `{wanted}` was requested")]
    ExperimentMismatch { wanted: String, found: String },
    #[error("missing table [{section}] for experiment `{experiment}`{hint}")]
    MissingSection { section: String, experiment: String, hint: String },
    #[error("table [{section}] is not used by experiment `{experiment}`")]
    UnusedSection { section: String, experiment: String },
    #[error("at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), message: message.into() }
}

/// Overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Reads a TOML config, or a JSON manifest whose `config` block is reused.
pub fn read_user_table(path: &Path) -> Result<Map<String, Value>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.into(), source })?;
    let parse = |message: String| ConfigError::Parse { path: path.into(), message };
    let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    if is_json {
        let v: Value = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
        match v.get("config") {
            Some(Value::Object(m)) => Ok(m.clone()),
            _ => Err(parse("JSON input must be a manifest with a `config` object".into())),
        }
    } else {
        let t: toml::Table = toml::from_str(&text).map_err(|e| parse(e.to_string()))?;
        match serde_json::to_value(t) {
            Ok(Value::Object(m)) => Ok(m),
            _ => Err(parse("top level is not a table".into())),
        }
    }
}

/// Recursive merge; tables combine, everything else in `over` replaces `base`.
/// Tagged tables (`kind = ...`) of a different kind replace wholesale.
pub fn merge(base: &mut Map<String, Value>, over: Map<String, Value>) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Object(b)), Value::Object(o))
                if o.get("kind").is_none() || o.get("kind") == b.get("kind") =>
            {
                merge(b, o)
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Resolve the config for `kind`: preset, then user file, then flags.
pub fn resolve(kind: ExperimentKind, ov: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let user = match &ov.config {
        Some(p) => read_user_table(p)?,
        None => Map::new(),
    };
    if let Some(found) = user.get("experiment") {
        if found.as_str() != Some(kind.name()) {
            return Err(ConfigError::ExperimentMismatch {
                wanted: kind.name().into(),
                found: found.to_string().trim_matches('"').into(),
            });
        }
    }
    let preset = ov
        .preset
        .clone()
        .or_else(|| user.get("preset").and_then(Value::as_str).map(String::from));
    let mut table = Map::new();
    if let Some(name) = &preset {
        let text = presets::get(name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?;
        let t: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: format!("<preset {name}>").into(),
            message: e.to_string(),
        })?;
        if let Ok(Value::Object(mut m)) = serde_json::to_value(t) {
            // Presets cover several experiments; keep only what this one reads.
            m.retain(|k, _| {
                !SECTIONS.contains(&k.as_str())
                    || k == kind.section()
                    || (k == "system" && kind.needs_system())
            });
            table = m;
        }
    }
    for k in user.keys() {
        let used = k == kind.section() || (k == "system" && kind.needs_system());
        if SECTIONS.contains(&k.as_str()) && !used {
            return Err(ConfigError::UnusedSection { section: k.clone(), experiment: kind.name().into() });
        }
    }
    merge(&mut table, user);
    table.insert("experiment".into(), Value::String(kind.name().into()));
    match &preset {
        Some(p) => table.insert("preset".into(), Value::String(p.clone())),
        None => table.remove("preset"),
    };
    if let Some(seed) = ov.seed {
        table.insert("seed".into(), Value::from(seed));
    }
    if let Some(out) = &ov.out {
        table.insert("out".into(), Value::String(out.to_string_lossy().into_owned()));
    } else if !table.contains_key("out") {
        let stem = match &preset {
            Some(p) => format!("runs/{p}-{}", kind.name()),
            None => format!("runs/{}", kind.name()),
        };
        table.insert("out".into(), Value::String(stem));
    }
    let mut needed = vec![kind.section()];
    if kind.needs_system() {
        needed.push("system");
    }
    for s in needed {
        if !table.contains_key(s) {
            let hint = match &preset {
                Some(p) => format!("; preset `{p}` does not define it"),
                None => "; give it in --config or pick a --preset".into(),
            };
            return Err(ConfigError::MissingSection {
                section: s.into(),
                experiment: kind.name().into(),
                hint,
            });
        }
    }
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(Value::Object(table)).map_err(|e| {
        ConfigError::Schema { path: e.path().to_string(), message: e.inner().to_string() }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(key: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive and finite, got {x}")))
    }
}

fn non_negative(key: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be non-negative and finite, got {x}")))
    }
}

fn steps(section: &str, t_final: f64, dt: f64) -> Result<usize, ConfigError> {
    positive(&format!("{section}.dt"), dt)?;
    step_count(t_final, dt).map_err(|e| invalid(&format!("{section}.t_final"), e.to_string()))
}

fn grid(section: &str, dims: usize, n: usize) -> Result<(), ConfigError> {
    Grid::new(dims, n).map(|_| ()).map_err(|e| invalid(&format!("{section}.n"), e.to_string()))
}

fn initial(section: &str, ic: &InitialCondition, dims: usize) -> Result<(), ConfigError> {
    let key = format!("{section}.initial");
    match *ic {
        InitialCondition::Abc { density, .. } if dims != 3 || density.abs() >= 1.0 => {
            Err(invalid(&key, "abc needs dims = 3 and |density| < 1"))
        }
        InitialCondition::DensityWave { density, .. } if density.abs() >= 1.0 => {
            Err(invalid(&key, "density-wave needs |density| < 1"))
        }
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    /// Checks beyond the schema, run before any compute.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(s) = &self.system {
            for (i, m) in s.inertia.iter().enumerate() {
                positive(&format!("system.inertia[{i}]"), *m)?;
            }
            non_negative("system.noise_h1", s.noise_h1)?;
            non_negative("system.noise_h2", s.noise_h2)?;
            match s.lagrangian {
                LagrangianKind::HeavyTop if s.mgl.is_none() || s.chi.is_none() => {
                    return Err(invalid("system", "heavy-top needs `mgl` and `chi`"));
                }
                LagrangianKind::RigidBody if s.mgl.is_some() || s.chi.is_some() => {
                    return Err(invalid("system", "rigid-body takes no `mgl` or `chi`"));
                }
                _ => {}
            }
        }
        if let Some(r) = &self.reduced {
            steps("reduced", r.t_final, r.dt)?;
            if r.output_stride == 0 {
                return Err(invalid("reduced.output_stride", "must be at least 1"));
            }
            positive("reduced.residual_tolerance", r.residual_tolerance)?;
            positive("reduced.conservation_tolerance", r.conservation_tolerance)?;
        }
        if let Some(e) = &self.ensemble {
            steps("ensemble", e.t_final, e.dt)?;
            if e.n_traj < 2 {
                return Err(invalid("ensemble.n_traj", "need at least 2 trajectories"));
            }
            if e.output_stride == 0 {
                return Err(invalid("ensemble.output_stride", "must be at least 1"));
            }
            non_negative("ensemble.dt_factor", e.dt_factor)?;
        }
        if let Some(c) = &self.criticality {
            steps("criticality", c.t_final, c.dt)?;
            if c.directions == 0 {
                return Err(invalid("criticality.directions", "must be at least 1"));
            }
            positive("criticality.contrast", c.contrast)?;
        }
        if let Some(m) = &self.mhd {
            grid("mhd", m.dims, m.n)?;
            steps("mhd", m.t_final, m.dt)?;
            if m.output_every == 0 {
                return Err(invalid("mhd.output_every", "must be at least 1"));
            }
            Eos::new(m.eos.kind, m.eos.gamma, m.eos.kappa).map_err(|e| invalid("mhd.eos", e.to_string()))?;
            m.viscosities.validate().map_err(|e| invalid("mhd.viscosities", e.to_string()))?;
            initial("mhd", &m.initial, m.dims)?;
        }
        if let Some(c) = &self.incompressible {
            grid("incompressible", c.dims, c.n)?;
            steps("incompressible", c.t_final, c.dt)?;
            if c.output_every == 0 {
                return Err(invalid("incompressible.output_every", "must be at least 1"));
            }
            non_negative("incompressible.nu", c.nu)?;
            non_negative("incompressible.mu3", c.mu3)?;
            initial("incompressible", &c.initial, c.dims)?;
        }
        if let Some(f) = &self.flow_oracle {
            grid("flow_oracle", 2, f.n)?;
            steps("flow_oracle", f.t_final, f.dt)?;
            non_negative("flow_oracle.nu", f.nu)?;
            if f.lattice[0] * f.lattice[1] < 1000 {
                return Err(invalid("flow_oracle.lattice", "need at least 1000 particles per batch"));
            }
            if f.batches == 0 {
                return Err(invalid("flow_oracle.batches", "must be at least 1"));
            }
            positive("flow_oracle.defect_tolerance", f.defect_tolerance)?;
        }
        Ok(())
    }

    /// Canonical JSON form, the input to the content hash.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn scratch(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("epsim-config-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn every_preset_resolves_for_its_experiments() {
        let table = [
            ("rigid-body", vec![ExperimentKind::Reduced, ExperimentKind::Criticality]),
            ("heavy-top", vec![ExperimentKind::Reduced, ExperimentKind::Criticality]),
            ("so3-advected", vec![ExperimentKind::Ensemble]),
            (
                "taylor-green",
                vec![ExperimentKind::Mhd, ExperimentKind::Incompressible, ExperimentKind::FlowOracle],
            ),
            ("orszag-tang-like", vec![ExperimentKind::Mhd, ExperimentKind::Incompressible]),
        ];
        for (p, kinds) in table {
            for k in kinds {
                let ov = Overrides { preset: Some(p.into()), ..Default::default() };
                let cfg = resolve(k, &ov).unwrap_or_else(|e| panic!("{p} {k}: {e}"));
                assert_eq!(cfg.experiment, k);
                assert!(cfg.to_json().get(k.section()).is_some());
            }
        }
    }

    #[test]
    fn preset_without_section_is_a_config_error() {
        let ov = Overrides { preset: Some("heavy-top".into()), ..Default::default() };
        assert!(matches!(resolve(ExperimentKind::Mhd, &ov), Err(ConfigError::MissingSection { .. })));
    }

    #[test]
    fn user_values_override_preset_and_flags_override_both() {
        let d = scratch("override");
        let p = write(&d, "c.toml", "seed = 5\n[criticality]\ndirections = 3\n");
        let ov = Overrides {
            config: Some(p),
            preset: Some("heavy-top".into()),
            seed: Some(11),
            ..Default::default()
        };
        let cfg = resolve(ExperimentKind::Criticality, &ov).unwrap();
        assert_eq!(cfg.seed, 11);
        let c = cfg.criticality.unwrap();
        assert_eq!(c.directions, 3);
        assert_eq!(c.dt, 1e-3);
    }

    #[test]
    fn missing_key_points_at_its_path() {
        let d = scratch("missing");
        let p = write(
            &d,
            "c.toml",
            "seed = 1\n[mhd]\ndims = 2\nn = 16\ndt = 0.01\nt_final = 0.1\noutput_every = 1\n",
        );
        let ov = Overrides { config: Some(p), ..Default::default() };
        match resolve(ExperimentKind::Mhd, &ov) {
            Err(ConfigError::Schema { path, message }) => {
                assert_eq!(path, "mhd");
                assert!(message.contains("dump_every"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let d = scratch("unknown");
        let p = write(&d, "c.toml", "[criticality]\nstep = 0.1\n");
        let ov = Overrides { config: Some(p), preset: Some("heavy-top".into()), ..Default::default() };
        match resolve(ExperimentKind::Criticality, &ov) {
            Err(ConfigError::Schema { path, message }) => {
                assert_eq!(path, "criticality.step");
                assert!(message.contains("unknown field `step`"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let p = write(&d, "d.toml", "[mhd]\nn = 8\n");
        let ov = Overrides { config: Some(p), preset: Some("heavy-top".into()), ..Default::default() };
        assert!(matches!(resolve(ExperimentKind::Criticality, &ov), Err(ConfigError::UnusedSection { .. })));
    }

    #[test]
    fn semantic_errors_are_caught_before_compute() {
        let d = scratch("semantic");
        for (text, key) in [
            ("[criticality]\ndt = 0.3\n", "criticality.t_final"),
            ("[criticality]\ndt = -1.0\n", "criticality.dt"),
            ("[system]\nmgl = 1.0\nlagrangian = \"rigid-body\"\n", "system"),
        ] {
            let p = write(&d, "e.toml", text);
            let ov = Overrides { config: Some(p), preset: Some("heavy-top".into()), ..Default::default() };
            match resolve(ExperimentKind::Criticality, &ov) {
                Err(ConfigError::Invalid { key: k, .. }) => assert_eq!(k, key),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn experiment_mismatch_is_rejected() {
        let d = scratch("mismatch");
        let p = write(&d, "c.toml", "experiment = \"mhd\"\n");
        let ov = Overrides { config: Some(p), preset: Some("heavy-top".into()), ..Default::default() };
        assert!(matches!(
            resolve(ExperimentKind::Criticality, &ov),
            Err(ConfigError::ExperimentMismatch { .. })
        ));
    }

    #[test]
    fn resolved_config_roundtrips_through_json() {
        let ov = Overrides { preset: Some("orszag-tang-like".into()), ..Default::default() };
        let cfg = resolve(ExperimentKind::Mhd, &ov).unwrap();
        let back: ExperimentConfig = serde_json::from_value(cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn merge_replaces_tagged_tables_of_another_kind() {
        let mut base = serde_json::json!({"a": {"kind": "x", "p": 1, "q": 2}, "b": {"r": 1}});
        let over = serde_json::json!({"a": {"kind": "y", "s": 3}, "b": {"t": 2}});
        let (Value::Object(b), Value::Object(o)) = (&mut base, over) else { unreachable!() };
        merge(b, o);
        assert_eq!(base, serde_json::json!({"a": {"kind": "y", "s": 3}, "b": {"r": 1, "t": 2}}));
        let mut base = serde_json::json!({"a": {"kind": "x", "p": 1}});
        let (Value::Object(b), Value::Object(o)) = (&mut base, serde_json::json!({"a": {"p": 5}})) else {
            unreachable!()
        };
        merge(b, o);
        assert_eq!(base, serde_json::json!({"a": {"kind": "x", "p": 5}}));
    }

    #[test]
    fn harmonic_velocity() {
        let v = VelocityConfig::Harmonic { offset: [0.0, 0.5, 0.0], amplitude: [1.0, 0.0, 0.0], frequency: 1.0 };
        let x = v.at(0.3);
        assert_eq!(x, [0.3f64.sin(), 0.5, 0.0]);
    }
}
