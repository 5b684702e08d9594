//! One runner per experiment. Each writes its CSVs into the output directory
//! and returns the built-in checks.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::manifest::Check;

pub mod criticality;
pub mod ensemble;
pub mod flow;
pub mod mhd;
pub mod reduced;
pub mod system;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] epsim_core::Error),
    #[error(transparent)]
    Fluid(#[from] epsim_fluid::FluidError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Missing(&'static str),
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    /// Paths relative to the output directory, in write order.
    pub artifacts: Vec<String>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    fn write_csv(
        &mut self,
        dir: &Path,
        rel: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    ) -> io::Result<()> {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        self.artifacts.push(rel.into());
        Ok(())
    }
}

fn join(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(",")
}

pub fn execute(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, RunError> {
    let need_system = || cfg.system.as_ref().ok_or(RunError::Missing("missing [system]"));
    match cfg.experiment {
        ExperimentKind::Reduced => reduced::run(
            need_system()?,
            cfg.reduced.as_ref().ok_or(RunError::Missing("missing [reduced]"))?,
            cfg.seed,
            out,
        ),
        ExperimentKind::Ensemble => ensemble::run(
            need_system()?,
            cfg.ensemble.as_ref().ok_or(RunError::Missing("missing [ensemble]"))?,
            cfg.seed,
            out,
        ),
        ExperimentKind::Criticality => criticality::run(
            need_system()?,
            cfg.criticality.as_ref().ok_or(RunError::Missing("missing [criticality]"))?,
            cfg.seed,
            out,
        ),
        ExperimentKind::Mhd => mhd::run(cfg.mhd.as_ref().ok_or(RunError::Missing("missing [mhd]"))?, out),
        ExperimentKind::Incompressible => mhd::run_incompressible(
            cfg.incompressible.as_ref().ok_or(RunError::Missing("missing [incompressible]"))?,
            out,
        ),
        ExperimentKind::FlowOracle => flow::run(
            cfg.flow_oracle.as_ref().ok_or(RunError::Missing("missing [flow_oracle]"))?,
            cfg.seed,
            out,
        ),
    }
}
