use std::path::Path;
use std::process::{Command, Output};

use epsim_cli::manifest::{Manifest, Status};

fn ep_sim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ep-sim"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn criticality_preset_passes_and_reports_the_derivative() {
    let dir = tempfile::tempdir().unwrap();
    let o = ep_sim(dir.path(), &["criticality", "--preset", "heavy-top", "--out", "run"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = Manifest::read(&dir.path().join("run/manifest.json")).unwrap();
    assert_eq!(m.status, Status::Pass);
    let c = m.checks.iter().find(|c| c.name == "max_abs_dj_deps").unwrap();
    assert!(c.pass && c.value <= 1e-3);
    assert_eq!(m.config_sha256, epsim_cli::manifest::config_hash(&m.config));
    let a = &m.artifacts[0];
    let bytes = std::fs::read(dir.path().join("run").join(&a.path)).unwrap();
    assert_eq!(a.sha256, epsim_cli::manifest::sha256_hex(&bytes));
}

#[test]
fn missing_key_exits_2_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "seed = 1\n[flow_oracle]\nn = 32\nnu = 0.05\ndt = 1e-3\nt_final = 0.1\n",
    )
    .unwrap();
    let o = ep_sim(dir.path(), &["flow-oracle", "--config", "c.toml"]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("flow_oracle") && e.contains("missing field `amplitude`"), "{e}");
    assert!(!dir.path().join("runs").exists(), "no compute before validation");
}

#[test]
fn unknown_key_and_bad_values_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.toml"), "[mhd]\nresolution = 64\n").unwrap();
    let o = ep_sim(dir.path(), &["mhd", "--preset", "orszag-tang-like", "--config", "a.toml"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("mhd.resolution"), "{}", stderr(&o));

    std::fs::write(dir.path().join("b.toml"), "[mhd]\nn = 48\n").unwrap();
    let o = ep_sim(dir.path(), &["mhd", "--preset", "orszag-tang-like", "--config", "b.toml"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("mhd.n"), "{}", stderr(&o));

    let o = ep_sim(dir.path(), &["mhd", "--preset", "no-such-preset"]);
    assert_eq!(code(&o), 2);
    let o = ep_sim(dir.path(), &["mhd", "--preset", "heavy-top"]);
    assert_eq!(code(&o), 2);
    let o = ep_sim(dir.path(), &["mhd", "--bogus-flag"]);
    assert_eq!(code(&o), 2);
    let o = ep_sim(dir.path(), &["criticality", "--preset", "heavy-top", "--seed", "x"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn failed_check_exits_1_with_a_fail_manifest() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[criticality]\ncontrast = 1e12\n").unwrap();
    let o = ep_sim(
        dir.path(),
        &["criticality", "--preset", "heavy-top", "--config", "c.toml", "--out", "run"],
    );
    assert_eq!(code(&o), 1);
    let m = Manifest::read(&dir.path().join("run/manifest.json")).unwrap();
    assert_eq!(m.status, Status::Fail);
    assert!(m.checks.iter().any(|c| c.name == "min_perturbed_contrast" && !c.pass));
}

#[test]
fn runtime_error_exits_1_with_an_error_manifest() {
    // A compressible velocity field is rejected by the incompressible solver.
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "[incompressible]\ninitial = { kind = \"density-wave\", mean = 0.0, ripple = 0.5, density = 0.1 }\n",
    )
    .unwrap();
    let o = ep_sim(
        dir.path(),
        &["incompressible", "--preset", "taylor-green", "--config", "c.toml", "--out", "run"],
    );
    assert_eq!(code(&o), 1);
    let m = Manifest::read(&dir.path().join("run/manifest.json")).unwrap();
    assert_eq!(m.status, Status::Error);
    assert!(m.error.is_some());
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[ensemble]\nn_traj = 300\nt_final = 0.2\n").unwrap();
    let o = ep_sim(
        dir.path(),
        &["ensemble", "--preset", "so3-advected", "--config", "c.toml", "--seed", "4", "--out", "a"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = ep_sim(dir.path(), &["ensemble", "--config", "a/manifest.json", "--threads", "3", "--out", "b"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ma = Manifest::read(&dir.path().join("a/manifest.json")).unwrap();
    let mb = Manifest::read(&dir.path().join("b/manifest.json")).unwrap();
    assert_eq!(ma.config["seed"], 4);
    for (x, y) in ma.artifacts.iter().zip(&mb.artifacts) {
        assert_eq!(x.path, y.path);
        assert_eq!(x.sha256, y.sha256, "{}", x.path);
    }
    assert_eq!(mb.threads, 3);

    // A manifest from another experiment is refused.
    let o = ep_sim(dir.path(), &["mhd", "--config", "a/manifest.json"]);
    assert_eq!(code(&o), 2);
}
