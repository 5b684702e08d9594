use std::io::Write;
use std::path::Path;

use epsim_core::group_sde::{run_ensemble, EnsembleSpec, GroupSde};
use epsim_core::lie::LieAlgebra;
use epsim_core::reduced::integrate_advection;
use epsim_core::semidirect::Representation;
use epsim_core::{AlgebraVector, UCoVector};

use super::{join, system, Outcome, RunError};
use crate::config::{EnsembleConfig, SystemConfig};
use crate::manifest::Check;

pub fn run(s: &SystemConfig, e: &EnsembleConfig, seed: u64, out: &Path) -> Result<Outcome, RunError> {
    let g = LieAlgebra::so3();
    let conn = system::connection(&g, s)?;
    let rep = Representation::so3_vector(&g, s.chirality)?;
    let h2 = system::scaled_basis(s.noise_h2);
    let vel = e.velocity.clone();
    let sde = GroupSde::new(&g, &conn, &h2, s.chirality, s.connection_correction, move |t| {
        AlgebraVector::from_slice(&vel.at(t))
    })?;
    let alpha0 = UCoVector::from_slice(&s.alpha0);
    let spec = EnsembleSpec::new(e.n_traj, e.dt, e.t_final, seed)?;
    let summary = run_ensemble(&sde, &conn, &spec, &rep, &alpha0, e.output_stride)?;
    let ode = integrate_advection(&rep, &h2, &|t| sde.drift(t), &alpha0, e.t_final, e.dt)?;

    let adv = &summary.advected;
    let slack = e.dt_factor * e.dt;
    let mut worst = 0.0_f64;
    for (k, (m, se)) in adv.mean.iter().zip(&adv.stderr).enumerate() {
        let x = &ode[k * e.output_stride];
        for i in 0..3 {
            worst = worst.max((m[i] - x[i]).abs() / (3.0 * se[i] + slack));
        }
    }

    let mut o = Outcome::default();
    o.write_csv(out, "advected.csv", |w| {
        writeln!(w, "t,mean_1,mean_2,mean_3,stderr_1,stderr_2,stderr_3,ode_1,ode_2,ode_3")?;
        for (k, t) in adv.times.iter().enumerate() {
            let x = &ode[k * e.output_stride];
            let row = join(
                adv.mean[k].as_slice().iter().chain(adv.stderr[k].as_slice()).chain(x.as_slice()).copied(),
            );
            writeln!(w, "{t:.6e},{row}")?;
        }
        Ok(())
    })?;
    let d = &summary.drift;
    o.write_csv(out, "drift.csv", |w| {
        writeln!(w, "t,drift_1,drift_2,drift_3,stderr_1,stderr_2,stderr_3,expected_1,expected_2,expected_3")?;
        for (k, t) in d.times.iter().enumerate() {
            let exp = sde.drift(*t);
            let row =
                join(d.mean[k].as_slice().iter().chain(d.stderr[k].as_slice()).chain(exp.as_slice()).copied());
            writeln!(w, "{t:.6e},{row}")?;
        }
        Ok(())
    })?;
    o.checks.push(Check::at_most("ensemble_vs_ode_over_bound", worst, 1.0));
    o.metric("ensemble_vs_ode_over_bound", worst);
    o.metric("n_traj", adv.n_traj as f64);
    o.metric("drift_excluded", d.excluded as f64);
    Ok(o)
}
