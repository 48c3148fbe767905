use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anticoncentration-lab"))
}

fn scenario(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(rel)
}

fn run(sub: &str, rel: &str, out: &Path) -> Output {
    bin()
        .args([sub, "--scenario"])
        .arg(scenario(rel))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

/// Column `name` of the only data row.
fn cell(csv_text: &str, name: &str) -> String {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let header = r.headers().unwrap().clone();
    let i = header.iter().position(|h| h == name).unwrap();
    let rec = r.records().next().unwrap().unwrap();
    rec[i].to_string()
}

#[test]
fn empty_target_is_never_hit() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("bound", "empty-set.json", dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("empty-set.csv")).unwrap();
    assert_eq!(cell(&text, "rho_s"), "0/1");
    assert_eq!(cell(&text, "sound"), "true");
}

#[test]
fn ten_coins_split_after_the_first_step() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("bound", "ten-coins-partition.json", dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("ten-coins-partition.csv")).unwrap();
    assert_eq!(cell(&text, "intervals"), "{1..1};{2..10}");
    assert_eq!(cell(&text, "block_rhos"), "1/2;63/256");
    assert_eq!(cell(&text, "rho"), "63/256");
    assert!(dir.path().join("ten-coins-partition.trace.json").exists());
    assert!(dir.path().join("ten-coins-partition.scenario.json").exists());
}

#[test]
fn unpartitionable_walk_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("bound", "errors/unpartitionable.json", dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("rho^{1/(2^{k+1}-1)} > p0"), "{err}");
}

#[test]
fn subcommand_must_match_task() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("mine", "empty-set.json", dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("task is `bound`"));
}

#[test]
fn unknown_mode_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["run", "--mode", "nope", "--scenario"])
        .arg(scenario("empty-set.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn syntax_errors_carry_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"task\": \"bound\",\n  \"group\": Z\n}\n").unwrap();
    let o = bin().args(["run", "--scenario"]).arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        assert_eq!(run("bound", "dihedral-random-walk.json", dir.path()).status.code(), Some(0));
    }
    for f in ["dihedral-random-walk.csv", "dihedral-random-walk.scenario.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
}

#[test]
fn verify_all_writes_a_summary() {
    let out = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["verify-all", "--scenarios"])
        .arg(scenario(""))
        .arg("--out")
        .arg(out.path())
        .env("ANTICONCENTRATION_LAB_WORKERS", "4")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let summary = std::fs::read_to_string(out.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("file,exit_code,message\n"));
    assert!(summary.contains("ten-coins-partition.json,0,"));
    assert!(out.path().join("erdos").join("erdos.csv").exists());
}

#[test]
fn verify_all_reports_the_worst_exit_code() {
    let out = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["verify-all", "--scenarios"])
        .arg(scenario("errors"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
