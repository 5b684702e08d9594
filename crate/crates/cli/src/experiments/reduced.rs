use std::io::Write;
use std::path::Path;

use epsim_core::action::criticality_directions;
use epsim_core::reduced::Trajectory;

use super::{system, Outcome, RunError};
use crate::config::{LagrangianKind, ReducedConfig, SystemConfig};
use crate::manifest::Check;

/// Largest `| |x_k| − |x_0| |` along a sequence of norms.
fn norm_drift(norms: impl Iterator<Item = f64>) -> f64 {
    let mut first = None;
    let mut worst = 0.0_f64;
    for n in norms {
        let n0 = *first.get_or_insert(n);
        worst = worst.max((n - n0).abs());
    }
    worst
}

pub fn run(s: &SystemConfig, r: &ReducedConfig, seed: u64, out: &Path) -> Result<Outcome, RunError> {
    let sys = system::build(s)?;
    let traj = sys.integrate(&system::initial_state(s), r.t_final, r.dt)?;
    let mut o = Outcome::default();

    let thin = Trajectory {
        dt: traj.dt * r.output_stride as f64,
        states: traj.states.iter().step_by(r.output_stride).cloned().collect(),
        momenta: traj.momenta.iter().step_by(r.output_stride).cloned().collect(),
    };
    let mut buf = Vec::new();
    sys.write_csv(&thin, &mut buf)?;
    o.write_csv(out, "trajectory.csv", |w| w.write_all(&buf))?;

    let curves = criticality_directions(3, r.t_final, r.directions, seed);
    let residuals = curves
        .iter()
        .map(|c| sys.variation_residual(&traj, c))
        .collect::<epsim_core::Result<Vec<f64>>>()?;
    o.write_csv(out, "residuals.csv", |w| {
        writeln!(w, "direction,residual")?;
        for (i, x) in residuals.iter().enumerate() {
            writeln!(w, "{i},{x:.16e}")?;
        }
        Ok(())
    })?;
    let max_residual = residuals.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    o.checks.push(Check::at_most("max_variation_residual", max_residual, r.residual_tolerance));

    let mu_drift = norm_drift(traj.momenta.iter().map(|m| m.norm()));
    let alpha_drift = norm_drift(traj.states.iter().map(|st| st.alpha.norm()));
    o.metric("max_variation_residual", max_residual);
    o.metric("mu_norm_drift", mu_drift);
    o.metric("alpha_norm_drift", alpha_drift);
    if s.noise_h1 == 0.0 && s.noise_h2 == 0.0 {
        o.checks.push(Check::at_most("alpha_norm_drift", alpha_drift, r.conservation_tolerance));
        if s.lagrangian == LagrangianKind::RigidBody {
            o.checks.push(Check::at_most("mu_norm_drift", mu_drift, r.conservation_tolerance));
        }
    }
    Ok(o)
}
