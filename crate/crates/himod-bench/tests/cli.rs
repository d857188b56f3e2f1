use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use himod::io::read_csv;

const SMALL_ADR: &str = "\
problem = adr
mesh.elements = 10
modes.state = 4
domain = 1:10, 15:25, 70:80, 20:30
training.size = 12
testing.size = 5
rom.n = 4
offline.sizes = 6, 12
speedup.sizes = 1, 2
timing.repetitions = 1
timing.queries = 2
field.nx = 11
field.ny = 5
";

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.conf");
    fs::write(&path, text).unwrap();
    path
}

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_himod-bench")).args(args).output().unwrap()
}

fn run_in(dir: &Path, conf: &Path, sub: &str, extra: &[&str]) -> Output {
    let out = dir.join("out");
    let mut args = vec![sub, "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bench(&args)
}

#[test]
fn empty_training_set_is_rejected_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SMALL_ADR);
    let out = run_in(dir.path(), &conf, "eig-decay", &["--m", "0"]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), &format!("{SMALL_ADR}mesh.elemnts = 3\n"));
    let out = run_in(dir.path(), &conf, "eig-decay", &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mesh.elemnts"));
}

#[test]
fn error_sweep_writes_versioned_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SMALL_ADR);
    let out = run_in(dir.path(), &conf, "error-vs-n", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (schema, header, rows) = read_csv(dir.path().join("out/error_vs_n.csv")).unwrap();
    assert_eq!(schema, "error-vs-n");
    assert_eq!(header[0], "method");
    // Both methods, N = 1..4.
    assert_eq!(rows.len(), 8);
    let (schema, _, log) = read_csv(dir.path().join("out/greedy_log.csv")).unwrap();
    assert_eq!(schema, "greedy-log");
    assert_eq!(log.len(), 4);
    assert!(dir.path().join("out/summary.txt").exists());
}

#[test]
fn same_seeds_give_identical_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let conf = write_config(dir.path(), SMALL_ADR);
        let out = run_in(dir.path(), &conf, "error-vs-n", &["--seed", "9"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let out = run_in(dir.path(), &conf, "eig-decay", &["--seed", "9"]);
        assert!(out.status.success());
    }
    for file in ["error_vs_n.csv", "spectrum.csv"] {
        let x = fs::read_to_string(a.path().join("out").join(file)).unwrap();
        let y = fs::read_to_string(b.path().join("out").join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
    // The seed is honoured: a different one selects a different training set.
    let c = tempfile::tempdir().unwrap();
    let conf = write_config(c.path(), SMALL_ADR);
    assert!(run_in(c.path(), &conf, "eig-decay", &["--seed", "10"]).status.success());
    let x = fs::read_to_string(a.path().join("out/spectrum.csv")).unwrap();
    let z = fs::read_to_string(c.path().join("out/spectrum.csv")).unwrap();
    assert_ne!(x, z);
}

#[test]
fn infsup_sweep_needs_a_stokes_config() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SMALL_ADR);
    let out = run_in(dir.path(), &conf, "infsup-sweep", &[]);
    assert!(!out.status.success());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn all_runs_every_adr_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SMALL_ADR);
    let out = run_in(dir.path(), &conf, "all", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["spectrum.csv", "error_vs_n.csv", "speedup.csv", "offline_cost.csv", "field.csv"] {
        let (schema, _, rows) = read_csv(dir.path().join("out").join(file)).unwrap();
        assert!(!schema.is_empty() && !rows.is_empty(), "{file}");
    }
    assert!(!dir.path().join("out/infsup.csv").exists());
    let (_, header, rows) = read_csv(dir.path().join("out/field.csv")).unwrap();
    assert_eq!(header, ["x", "y", "u_himod", "u_hipod", "u_hirb"]);
    assert_eq!(rows.len(), 11 * 5);
}

#[test]
fn small_stokes_run() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(
        dir.path(),
        "problem = stokes\nmesh.elements = 6\ntraining.size = 8\ntesting.size = 3\ninfsup.supremizers = 2\n",
    );
    let out = run_in(dir.path(), &conf, "infsup-sweep", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (schema, header, rows) = read_csv(dir.path().join("out/infsup.csv")).unwrap();
    assert_eq!(schema, "infsup-sweep");
    assert_eq!(header, ["n_s", "beta_reduced", "beta_himod"]);
    assert_eq!(rows.len(), 3);
}
