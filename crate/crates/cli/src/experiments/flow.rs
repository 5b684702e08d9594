use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use epsim_core::reduced::step_count;
use epsim_fluid::flow::{
    density_oracle, inner, inner_vector, scalar_oracle, simulate_batches, solve_one_form_pde,
    solve_scalar_pde, weak_form_compare, Allowance, FourierMode, OracleKind, OracleReport,
    SpectralVelocity,
};
use epsim_fluid::Grid;

use super::{Outcome, RunError};
use crate::config::FlowOracleConfig;
use crate::manifest::Check;

pub fn one_form0(x: [f64; 3]) -> [f64; 3] {
    [x[1].cos(), x[0].cos(), x[0].sin()]
}

pub fn scalar0(x: [f64; 3]) -> f64 {
    x[0].cos() + x[1].sin()
}

pub fn density0(x: [f64; 3]) -> f64 {
    1.0 + 0.3 * x[0].cos() + 0.3 * x[1].sin()
}

/// `(cos θ₂, 0, 0)`, `(0, cos θ₁, 0)`, `(0, 0, sin θ₁)`.
pub fn test_forms() -> [FourierMode; 3] {
    [
        FourierMode::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 0.0),
        FourierMode::new([0.0, 1.0, 0.0], [1.0, 0.0, 0.0], 0.0),
        FourierMode::new([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], -0.5 * PI),
    ]
}

/// `cos θ₁` and `sin θ₂`.
pub fn test_functions() -> [FourierMode; 2] {
    [
        FourierMode::new([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], 0.0),
        FourierMode::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], -0.5 * PI),
    ]
}

/// Frozen Taylor-Green velocity and the PDE side of the three oracles, which
/// do not depend on the particle seed.
pub struct OracleSetup {
    cfg: FlowOracleConfig,
    velocity: SpectralVelocity,
    steps: usize,
    pde_one_form: Vec<f64>,
    pde_scalar: Vec<f64>,
    pde_density: Vec<f64>,
}

impl OracleSetup {
    pub fn new(cfg: &FlowOracleConfig) -> epsim_fluid::Result<Self> {
        let g = Grid::new(2, cfg.n)?;
        let a = cfg.amplitude;
        let u = g.vector_from_fn(|x| [a * x[0].sin() * x[1].cos(), -a * x[0].cos() * x[1].sin(), 0.0]);
        let steps = step_count(cfg.t_final, cfg.dt)
            .map_err(|e| epsim_fluid::FluidError::InvalidParameter(e.to_string()))?;
        let at = solve_one_form_pde(&g, &u, &g.vector_from_fn(one_form0), cfg.nu, cfg.t_final, cfg.dt)?;
        let pde_one_form = test_forms().iter().map(|f| inner_vector(&g, &f.to_vector(&g), &at)).collect();
        let scalar_side = |f0: fn([f64; 3]) -> f64, kind| -> epsim_fluid::Result<Vec<f64>> {
            let b = solve_scalar_pde(&g, &u, &g.scalar_from_fn(f0), kind, cfg.nu, cfg.t_final, cfg.dt)?;
            Ok(test_functions().iter().map(|f| inner(&g, &f.to_scalar(&g), &b)).collect())
        };
        let pde_scalar = scalar_side(scalar0, OracleKind::Scalar)?;
        let pde_density = scalar_side(density0, OracleKind::Density)?;
        Ok(Self {
            cfg: cfg.clone(),
            velocity: SpectralVelocity::new(&g, &u),
            steps,
            pde_one_form,
            pde_scalar,
            pde_density,
        })
    }

    /// One-form, scalar and density reports from `batches` lattices of particles.
    pub fn run(&self, seed: u64, batches: usize) -> epsim_fluid::Result<[OracleReport; 3]> {
        let c = &self.cfg;
        let ps = simulate_batches(
            2,
            [c.lattice[0], c.lattice[1], 1],
            batches,
            seed,
            &self.velocity,
            c.nu,
            c.dt,
            self.steps,
        )?;
        let allowance = Allowance { c: c.allowance, dt: c.dt, n: c.n };
        Ok([
            weak_form_compare(&ps, &one_form0, &test_forms(), &self.pde_one_form, allowance)?,
            scalar_oracle(&ps, &scalar0, &test_functions(), &self.pde_scalar, allowance)?,
            density_oracle(&ps, &density0, &test_functions(), &self.pde_density, allowance)?,
        ])
    }
}

pub fn kind_name(k: OracleKind) -> &'static str {
    match k {
        OracleKind::OneForm => "one-form",
        OracleKind::Scalar => "scalar",
        OracleKind::Density => "density",
    }
}

pub fn run(f: &FlowOracleConfig, seed: u64, out: &Path) -> Result<Outcome, RunError> {
    let reports = OracleSetup::new(f)?.run(seed, f.batches)?;
    let mut o = Outcome::default();
    o.write_csv(out, "oracle.csv", |w| {
        writeln!(w, "kind,{}", OracleReport::CSV_HEADER)?;
        for r in &reports {
            let mut body = Vec::new();
            r.write_csv(&mut body)?;
            let text = String::from_utf8(body).expect("csv is ascii");
            for line in text.lines().skip(1) {
                writeln!(w, "{},{line}", kind_name(r.kind))?;
            }
        }
        Ok(())
    })?;
    for r in &reports {
        let name = kind_name(r.kind);
        let over = r
            .rows
            .iter()
            .map(|row| (row.monte_carlo - row.pde).abs() / row.tolerance)
            .fold(0.0, f64::max);
        o.checks.push(Check::at_most(&format!("{name}_defect_over_bound"), over, 1.0));
        o.checks.push(Check::at_most(
            &format!("{name}_relative_defect"),
            r.max_relative_defect(),
            f.defect_tolerance,
        ));
        o.metric(&format!("{name}_relative_defect"), r.max_relative_defect());
        o.metric(&format!("{name}_excluded"), r.excluded as f64);
    }
    o.metric("particles", reports[0].particles as f64);
    Ok(o)
}
