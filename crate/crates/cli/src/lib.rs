//! `ep-sim`: named, reproducible experiments over the reduced-dynamics and
//! fluid crates. A run resolves its config (preset, then TOML file, then
//! flags), writes CSVs into the output directory and a `manifest.json`
//! recording the resolved config, its hash, the checks and artifact hashes.
//!
//! Exit status: 0 when every built-in check passes, 1 on a failed check or a
//! runtime error, 2 on a configuration error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod presets;

use config::{ExperimentConfig, ExperimentKind, Overrides};
use experiments::Outcome;
use manifest::{Manifest, Status};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ep-sim", version, about = "Stochastic Euler-Poincaré and MHD experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the reduced equations; variational residual and Casimir checks.
    Reduced(RunArgs),
    /// Monte Carlo on SO(3) against the advection ODE.
    Ensemble(RunArgs),
    /// Action derivative along random variations of a solution.
    Criticality(RunArgs),
    /// Compressible MHD on the torus; mass, div B and energy checks.
    Mhd(RunArgs),
    /// Leray-projected solver; divergence and Taylor-Green checks.
    Incompressible(RunArgs),
    /// Particle oracles for the one-form, scalar and density equations.
    FlowOracle(RunArgs),
}

impl Command {
    pub fn split(&self) -> (ExperimentKind, &RunArgs) {
        match self {
            Command::Reduced(a) => (ExperimentKind::Reduced, a),
            Command::Ensemble(a) => (ExperimentKind::Ensemble, a),
            Command::Criticality(a) => (ExperimentKind::Criticality, a),
            Command::Mhd(a) => (ExperimentKind::Mhd, a),
            Command::Incompressible(a) => (ExperimentKind::Incompressible, a),
            Command::FlowOracle(a) => (ExperimentKind::FlowOracle, a),
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Preset supplying defaults (rigid-body, heavy-top, so3-advected,
    /// taylor-green, orszag-tang-like).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Result of a run: the manifest as written and the exit status.
pub struct RunReport {
    pub manifest: Manifest,
    pub exit_code: i32,
}

fn manifest_for(cfg: &ExperimentConfig, threads: usize, result: &Result<Outcome, String>) -> Manifest {
    let config = cfg.to_json();
    let (status, checks, metrics, error) = match result {
        Ok(o) => (
            if o.pass() { Status::Pass } else { Status::Fail },
            o.checks.clone(),
            o.metrics.clone(),
            None,
        ),
        Err(e) => (Status::Error, Vec::new(), Default::default(), Some(e.clone())),
    };
    Manifest {
        tool: "ep-sim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: cfg.experiment,
        config_sha256: manifest::config_hash(&config),
        config,
        status,
        checks,
        metrics,
        artifacts: Vec::new(),
        threads,
        error,
    }
}

/// Run a resolved config in a pool of `threads` workers (0: rayon default).
pub fn run_config(cfg: &ExperimentConfig, threads: usize) -> std::io::Result<RunReport> {
    let out: &Path = &cfg.out;
    std::fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(std::io::Error::other)?;
    let result = pool.install(|| experiments::execute(cfg, out)).map_err(|e| e.to_string());
    let mut m = manifest_for(cfg, pool.current_num_threads(), &result);
    if let Ok(o) = &result {
        for rel in &o.artifacts {
            m.artifacts.push(manifest::artifact(out, rel)?);
        }
    }
    m.write(out)?;
    let exit_code = match m.status {
        Status::Pass => EXIT_PASS,
        _ => EXIT_FAIL,
    };
    Ok(RunReport { manifest: m, exit_code })
}

fn print_summary(m: &Manifest, out: &Path) {
    for c in &m.checks {
        let rel = match c.relation {
            manifest::Relation::AtMost => "<=",
            manifest::Relation::AtLeast => ">=",
        };
        println!(
            "{} {}: {:.3e} {rel} {:.3e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.limit
        );
    }
    if let Some(e) = &m.error {
        println!("ERROR {e}");
    }
    let status = match m.status {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Error => "ERROR",
    };
    println!("{status} {} -> {}", m.experiment, out.join(manifest::MANIFEST_FILE).display());
}

/// Entry point shared by the binary and the tests; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let (kind, args) = cli.command.split();
    let ov = Overrides {
        config: args.config.clone(),
        preset: args.preset.clone(),
        seed: args.seed,
        out: args.out.clone(),
    };
    let cfg = match config::resolve(kind, &ov) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ep-sim: configuration error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run_config(&cfg, args.threads.unwrap_or(0)) {
        Ok(r) => {
            print_summary(&r.manifest, &cfg.out);
            r.exit_code
        }
        Err(e) => {
            eprintln!("ep-sim: cannot write to {}: {e}", cfg.out.display());
            EXIT_FAIL
        }
    }
}
