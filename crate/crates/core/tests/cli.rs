//! End-to-end runs of the `thinhomog` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use thinhomog::harness::{parse_config, CsvTable};

const BIN: &str = env!("CARGO_BIN_EXE_thinhomog");

const SMALL: &str = "\
[domain]
bottom = trig(2; 1 sin 1)
top = trig(2; 1 cos 1)
alpha = 0.5
beta = 0.5
epsilons = 0.1, 0.05

[study]
probes = 3
";

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("study.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(kind: &str, config: &Path, out: &Path, extra: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.arg(kind).arg("--config").arg(config).arg("--out").arg(out).args(extra);
    cmd.env_remove("THINHOMOG_SEED");
    if let Some(s) = seed {
        cmd.env("THINHOMOG_SEED", s);
    }
    cmd.output().unwrap()
}

fn body(path: &Path) -> String {
    CsvTable::parse(&std::fs::read_to_string(path).unwrap()).unwrap().body()
}

#[test]
fn ladder_run_writes_tables_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = run("ladder", &cfg, &out, &[], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.cfg", "ladder.csv", "checks.csv", "ladder.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let hash = parse_config(&std::fs::read_to_string(out.join("config.cfg")).unwrap()).unwrap().hash();
    let table = CsvTable::parse(&std::fs::read_to_string(out.join("ladder.csv")).unwrap()).unwrap();
    assert!(table.provenance.contains(&("config_sha256".to_string(), hash.clone())));
    assert_eq!(table.rows.len(), 2);
    assert!(std::fs::read_to_string(out.join("ladder.svg")).unwrap().contains(&hash));
}

#[test]
fn outputs_are_reproducible_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("resolvent", &cfg, &a, &["--jobs", "1"], None).status.code(), Some(0));
    assert_eq!(run("resolvent", &cfg, &b, &["--jobs", "4"], None).status.code(), Some(0));
    for f in ["resolvent.csv", "checks.csv"] {
        assert_eq!(body(&a.join(f)), body(&b.join(f)), "{f}");
    }
    assert_eq!(std::fs::read(a.join("config.cfg")).unwrap(), std::fs::read(b.join("config.cfg")).unwrap());
}

#[test]
fn seed_environment_variable_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("resolvent", &cfg, &a, &[], None).status.code(), Some(0));
    let o = run("resolvent", &cfg, &b, &[], Some("7"));
    assert_eq!(o.status.code(), Some(0));
    let t = CsvTable::parse(&std::fs::read_to_string(b.join("resolvent.csv")).unwrap()).unwrap();
    assert!(t.column("seed").unwrap().iter().all(|s| *s == Some(7.0)));
    assert_eq!(parse_config(&std::fs::read_to_string(b.join("config.cfg")).unwrap()).unwrap().seed, 7);
    assert_ne!(body(&a.join("resolvent.csv")), body(&b.join("resolvent.csv")));
}

#[test]
fn invalid_seed_in_environment_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    assert_eq!(run("resolvent", &cfg, &dir.path().join("o"), &[], Some("seven")).status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_two_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("alpha = 0.5", "alpha = 1"));
    let o = run("ladder", &cfg, &dir.path().join("o"), &[], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4"), "{err}");
    assert!(err.contains("allow_out_of_hypothesis"), "{err}");
}

#[test]
fn bad_arguments_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    assert_eq!(run("ladder", &cfg, &dir.path().join("o"), &["--jobs", "0"], None).status.code(), Some(2));
    assert_eq!(run("nonsense", &cfg, &dir.path().join("o"), &[], None).status.code(), Some(2));
    let missing = dir.path().join("missing.cfg");
    assert_eq!(run("ladder", &missing, &dir.path().join("o"), &[], None).status.code(), Some(2));
}

#[test]
fn negative_control_is_flagged_and_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run("ladder", &configs().join("resonant.cfg"), &out, &[], None);
    assert_eq!(o.status.code(), Some(1));
    let checks = std::fs::read_to_string(out.join("checks.csv")).unwrap();
    assert!(checks.contains("# hypothesis = outside"), "{checks}");
    assert!(checks.contains("hypothesis flag,true"), "{checks}");
}
