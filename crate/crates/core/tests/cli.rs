//! End-to-end runs of the `stochhom` binary.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_stochhom");

const CONSTANT: &str = "\
microstructure.intensity = 0
integrand.matrix_phase = quadratic(1)
integrand.inclusion_phase = quadratic(1)
grid.cells_per_unit = 2
run.formula = dirichlet_trunc, periodization
run.lambdas = 0 2
run.R_list = 2
run.realizations = 1
";

const POISSON: &str = "\
microstructure.intensity = 0.4
microstructure.radius = 0.5
integrand.inclusion_phase = indicator_ball(2, quadratic(0.2))
grid.cells_per_unit = 2
solver.k_schedule = 1, 4, 16
run.formula = dirichlet_trunc, periodization
run.lambdas = 0.6 0.8
run.R_list = 4
run.realizations = 3
";

fn stochhom(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.cfg");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn cell_prints_the_phase_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT);
    let out = stochhom(&["cell", "--config", &cfg]);
    assert!(out.status.success());
    let v: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((v - 4.0).abs() < 1e-12, "{v}");
}

#[test]
fn check_exits_zero() {
    let out = stochhom(&["check"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn usage_errors() {
    assert_eq!(stochhom(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(stochhom(&["check", "--nope"]).status.code(), Some(2));
    assert_eq!(stochhom(&["homogenize"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "integrand.p = 0.5\n");
    let out = stochhom(&["homogenize", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("integrand.p"));
}

#[test]
fn thread_count_and_reruns_leave_csvs_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), POISSON);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    for (out, threads) in [(&a, "1"), (&b, "8"), (&c, "1")] {
        let o = stochhom(&["homogenize", "--config", &cfg, "--threads", threads, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["solves.csv", "summary.csv"] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
        assert_eq!(read(&a, name), read(&c, name), "{name}");
    }
    let d = dir.path().join("d");
    stochhom(&["homogenize", "--config", &cfg, "--seed", "99", "--out", d.to_str().unwrap()]);
    assert_ne!(read(&a, "summary.csv"), read(&d, "summary.csv"));
}

#[test]
fn seed_does_not_move_constant_means() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    stochhom(&["homogenize", "--config", &cfg, "--seed", "1", "--out", a.to_str().unwrap()]);
    stochhom(&["homogenize", "--config", &cfg, "--seed", "2", "--out", b.to_str().unwrap()]);
    assert_eq!(read(&a, "summary.csv"), read(&b, "summary.csv"));
    let report = read(&a, "report.txt");
    assert!(report.contains("run.master_seed = 1"));
}

#[test]
fn infeasible_estimate_exits_zero_with_flag() {
    let dir = tempfile::tempdir().unwrap();
    // Inclusions on every corner of Q_R and |Λ| outside the rigid ball.
    let cfg = write_config(
        dir.path(),
        "microstructure.kind = lattice\nmicrostructure.spacing = 4\nmicrostructure.offset = 2\nmicrostructure.radius = 1\n\
         integrand.inclusion_phase = indicator_ball(1, zero)\ngrid.cells_per_unit = 2\n\
         solver.k_schedule = 1, 4, 16, 64, 256, 1024\nrun.lambdas = 2 2\nrun.R_list = 4\nrun.realizations = 1\n",
    );
    let out = stochhom(&["homogenize", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary = read(dir.path(), "summary.csv");
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4], "inf");
    assert_eq!(row[7], "1");
}

#[test]
fn sample_oracle_and_sweep_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), POISSON);
    let out = dir.path().to_str().unwrap();
    assert!(stochhom(&["sample", "--config", &cfg, "--out", out, "--index", "2"]).status.success());
    let s = stochhom::microstructure::parse_sample(&read(dir.path(), "sample_2.txt")).unwrap();
    assert_eq!(s.bbox.side, 4.0);

    // No oracle for a 2D Poisson medium.
    assert_eq!(stochhom(&["oracle", "--config", &cfg, "--out", out]).status.code(), Some(1));
    let cfg = write_config(dir.path(), CONSTANT);
    let o = stochhom(&["oracle", "--config", &cfg, "--out", out]);
    assert!(o.status.success());
    assert!(read(dir.path(), "oracle.csv").contains("oracle,0.0000000000000000e0,2.0000000000000000e0,2.0000000000000000e0,4.0000000000000000e0"));

    let o = stochhom(&["sweep", "--config", &cfg, "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sweep = read(dir.path(), "sweep.csv");
    assert_eq!(sweep.lines().filter(|l| l.starts_with("t,")).count(), 6);
}
