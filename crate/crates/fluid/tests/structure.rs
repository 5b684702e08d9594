//! Reduced-size versions of the conservation, low-Mach and particle checks.

use std::f64::consts::PI;

use epsim_fluid::flow::{
    inner, inner_vector, scalar_oracle, simulate_batches, solve_one_form_pde, solve_scalar_pde,
    weak_form_compare, density_oracle, Allowance, FourierMode, OracleKind, SpectralVelocity,
};
use epsim_fluid::mhd::{Eos, IncompressibleSolver, InitialCondition, MhdSolver, Viscosities};
use epsim_fluid::Grid;

fn energy_increments(solver: &MhdSolver, ic: InitialCondition, dt: f64, steps: usize) -> Vec<f64> {
    let mut s = ic.build(solver.grid()).unwrap();
    let st = solver.integrator(dt);
    let mut e = solver.energy(&s);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        s = solver.step_with(&st, &s).unwrap();
        let en = solver.energy(&s);
        out.push(en - e);
        e = en;
    }
    out
}

#[test]
fn orszag_tang_energy_decays_with_exact_mass_and_div_b() {
    let g = Grid::new(2, 32).unwrap();
    let solver =
        MhdSolver::new(g, Eos::polytropic(5.0 / 3.0, 0.6).unwrap(), Viscosities::uniform(0.05).unwrap()).unwrap();
    let mut s = InitialCondition::OrszagTang { amplitude: 1.0, field: 1.0 }.build(solver.grid()).unwrap();
    let m0 = solver.mass(&s);
    let mut e = solver.energy(&s);
    let st = solver.integrator(5e-3);
    for _ in 0..60 {
        s = solver.step_with(&st, &s).unwrap();
        let d = solver.diagnostics(&s);
        assert!(d.energy - e <= 1e-10 * e, "energy rose by {}", d.energy - e);
        assert!((d.mass - m0).abs() <= 1e-10 * m0);
        assert!(d.div_b <= 1e-12);
        e = d.energy;
    }
}

#[test]
fn density_gradient_term_is_needed_for_decay() {
    let ic = InitialCondition::DensityWave { mean: 1.0, ripple: 0.1, density: 0.2 };
    let make = |on: bool| {
        let g = Grid::new(2, 32).unwrap();
        let mut s =
            MhdSolver::new(g, Eos::polytropic(1.4, 0.1).unwrap(), Viscosities::uniform(0.05).unwrap()).unwrap();
        s.log_density_term = on;
        s
    };
    let with = energy_increments(&make(true), ic, 5e-3, 20);
    let without = energy_increments(&make(false), ic, 5e-3, 20);
    assert!(with.iter().all(|&d| d <= 0.0));
    assert!(without.iter().any(|&d| d > 1e-10 * 29.0));
}

#[test]
fn stiff_compressible_run_tracks_incompressible_run() {
    let n = 32;
    let kappa = 686.0;
    let visc = 0.02;
    let start = |g: &Grid| {
        let mut s = InitialCondition::TaylorGreen { amplitude: 1.0 }.build(g).unwrap();
        s.u = s.u.add(&g.vector_from_fn(|x| [0.5 * (2.0 * x[1]).cos(), 0.5 * x[0].sin(), 0.0]));
        s
    };
    let comp = MhdSolver::new(
        Grid::new(2, n).unwrap(),
        Eos::polytropic(1.4, kappa).unwrap(),
        Viscosities::uniform(visc).unwrap(),
    )
    .unwrap();
    let inc = IncompressibleSolver::new(Grid::new(2, n).unwrap(), visc, visc).unwrap();
    let c = (1.4 * kappa).sqrt();
    let steps = 100;
    let dt = 0.25 / steps as f64;
    assert!(dt < comp.cfl_limit(&start(comp.grid())));
    let (stc, sti) = (comp.integrator(dt), inc.integrator(dt));
    let (mut sc, mut si) = (start(comp.grid()), start(inc.grid()));
    for _ in 0..steps {
        sc = comp.step_with(&stc, &sc).unwrap();
        si = inc.step_with(&sti, &si).unwrap();
    }
    let g = inc.grid();
    let rel = g.vector_l2(&sc.u.sub(&si.u)) / g.vector_l2(&si.u);
    let mach = comp.diagnostics(&sc).max_u / c;
    assert!(mach <= 0.1);
    assert!(rel < 0.02, "relative L2 difference {rel}");
    assert!(inc.divergence(&si) < 1e-12);
}

#[test]
fn particle_oracles_on_frozen_taylor_green() {
    let nu = 0.05;
    let dt = 2e-3;
    let steps = 50;
    let g = Grid::new(2, 32).unwrap();
    let u = g.vector_from_fn(|x| [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]);
    let vel = SpectralVelocity::new(&g, &u);
    let batches = simulate_batches(2, [40, 25, 1], 4, 99, &vel, nu, dt, steps).unwrap();
    let allowance = Allowance { c: 1.0, dt, n: 32 };

    let a0 = |x: [f64; 3]| [x[1].cos(), x[0].cos(), 0.0];
    let forms = [
        FourierMode::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 0.0),
        FourierMode::new([0.0, 1.0, 0.0], [1.0, 0.0, 0.0], 0.0),
    ];
    let at = solve_one_form_pde(&g, &u, &g.vector_from_fn(a0), nu, 0.1, dt).unwrap();
    let pde: Vec<f64> = forms.iter().map(|f| inner_vector(&g, &f.to_vector(&g), &at)).collect();
    let rep = weak_form_compare(&batches, &a0, &forms, &pde, allowance).unwrap();
    assert!(rep.pass() && rep.max_relative_defect() < 0.05, "{rep:?}");

    let b0 = |x: [f64; 3]| x[0].cos() + x[1].sin();
    let tests = [
        FourierMode::new([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], 0.0),
        FourierMode::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], -0.5 * PI),
    ];
    let b = solve_scalar_pde(&g, &u, &g.scalar_from_fn(b0), OracleKind::Scalar, nu, 0.1, dt).unwrap();
    let pde: Vec<f64> = tests.iter().map(|f| inner(&g, &f.to_scalar(&g), &b)).collect();
    let rep = scalar_oracle(&batches, &b0, &tests, &pde, allowance).unwrap();
    assert!(rep.pass() && rep.max_relative_defect() < 0.05, "{rep:?}");

    let d0 = |x: [f64; 3]| 1.0 + 0.3 * x[0].cos() + 0.3 * x[1].sin();
    let d = solve_scalar_pde(&g, &u, &g.scalar_from_fn(d0), OracleKind::Density, nu, 0.1, dt).unwrap();
    let pde: Vec<f64> = tests.iter().map(|f| inner(&g, &f.to_scalar(&g), &d)).collect();
    let rep = density_oracle(&batches, &d0, &tests, &pde, allowance).unwrap();
    assert!(rep.pass() && rep.max_relative_defect() < 0.05, "{rep:?}");
}
