use std::io::Write;
use std::path::Path;

use epsim_core::action::criticality_check;
use epsim_core::{AlgebraVector, UCoVector};

use super::{system, Outcome, RunError};
use crate::config::{CriticalityConfig, SystemConfig};
use crate::manifest::Check;

pub fn run(s: &SystemConfig, c: &CriticalityConfig, seed: u64, out: &Path) -> Result<Outcome, RunError> {
    let sys = system::build(s)?;
    let traj = sys.integrate(&system::initial_state(s), c.t_final, c.dt)?;
    let (u, alpha): (Vec<AlgebraVector>, Vec<UCoVector>) =
        traj.states.iter().map(|st| (st.u.clone(), st.alpha.clone())).unzip();
    let report = criticality_check(&sys, &u, &alpha, c.dt, c.directions, seed)?;

    let perturbed: Vec<AlgebraVector> = u
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let mut y = x.clone();
            y[0] += c.perturbation * (k as f64 * c.dt).sin();
            y
        })
        .collect();
    let off = criticality_check(&sys, &perturbed, &alpha, c.dt, c.directions, seed)?;
    let contrast = report
        .derivatives
        .iter()
        .zip(&off.derivatives)
        .map(|(g, b)| b.abs() / g.abs())
        .fold(f64::INFINITY, f64::min);

    let mut o = Outcome::default();
    o.write_csv(out, "criticality.csv", |w| {
        writeln!(w, "direction,dj_solution,dj_perturbed")?;
        for (i, (g, b)) in report.derivatives.iter().zip(&off.derivatives).enumerate() {
            writeln!(w, "{i},{g:.16e},{b:.16e}")?;
        }
        Ok(())
    })?;
    o.checks.push(Check::at_most("max_abs_dj_deps", report.max_abs, report.threshold));
    o.checks.push(Check::at_least("min_perturbed_contrast", contrast, c.contrast));
    o.metric("max_abs_dj_deps", report.max_abs);
    o.metric("perturbed_max_abs_dj_deps", off.max_abs);
    o.metric("min_perturbed_contrast", contrast);
    Ok(o)
}
