//! End-to-end tests of the `relam` binary against the bundled vault
//! fixture: exit codes, artifact sets per subcommand, determinism,
//! and the seed override.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relam"))
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/vault")
}

/// Copies the bundled fixture into a fresh temp dir so runs can't
/// trample each other or the checked-in files.
fn fixture_copy() -> TempDir {
    let dir = TempDir::new().expect("temp dir");
    for entry in fs::read_dir(fixture_dir()).expect("fixture dir") {
        let entry = entry.expect("fixture entry");
        fs::copy(entry.path(), dir.path().join(entry.file_name())).expect("copy fixture file");
    }
    dir
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn relam");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn artifact_names(out_dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(out_dir)
        .expect("output dir")
        .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn missing_config_exits_2() {
    let out = bin()
        .args(["design", "--config", "/definitely/not/here.toml"])
        .output()
        .expect("spawn relam");
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error:"), "stderr was: {stderr}");
}

#[test]
fn invalid_config_exits_2() {
    let dir = TempDir::new().expect("temp dir");
    let path = dir.path().join("bad.toml");
    fs::write(&path, "seed = 1\nbogus_key = true\n").expect("write config");
    let out = bin()
        .args(["design", "--config"])
        .arg(&path)
        .output()
        .expect("spawn relam");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));
}

#[test]
fn missing_inventory_file_exits_3() {
    let dir = fixture_copy();
    fs::remove_file(dir.path().join("inventory.csv")).expect("drop inventory");
    let out = bin()
        .args(["allocate", "--config"])
        .arg(dir.path().join("config.toml"))
        .output()
        .expect("spawn relam");
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("allocate stage failed"), "stderr was: {stderr}");
}

#[test]
fn design_writes_only_layout_artifacts() {
    let dir = fixture_copy();
    run_ok(&[
        "design",
        "--config",
        dir.path().join("config.toml").to_str().unwrap(),
    ]);
    assert_eq!(
        artifact_names(&dir.path().join("out")),
        ["contours.csv", "elements.csv", "mesh.obj"]
    );
}

#[test]
fn full_run_writes_the_report_bundle_and_prints_a_summary() {
    let dir = fixture_copy();
    let out = run_ok(&[
        "all",
        "--config",
        dir.path().join("config.toml").to_str().unwrap(),
    ]);
    assert_eq!(
        artifact_names(&dir.path().join("out")),
        [
            "contours.csv",
            "cutplan.csv",
            "elements.csv",
            "fablog_0.jsonl",
            "fablog_1.jsonl",
            "mesh.obj",
            "nails.csv",
            "report.csv",
            "report.svg",
            "subassemblies.csv",
            "summary.txt"
        ]
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("wrote "), "stdout was: {stdout}");
    assert!(stdout.contains("assembly summary"), "stdout was: {stdout}");
    assert!(
        String::from_utf8_lossy(&out.stderr).is_empty(),
        "fixture run should not warn"
    );
}

#[test]
fn rerun_is_byte_identical() {
    let dir = fixture_copy();
    let config = dir.path().join("config.toml");
    run_ok(&["all", "--config", config.to_str().unwrap()]);
    let out_dir = dir.path().join("out");
    let first: Vec<(String, Vec<u8>)> = artifact_names(&out_dir)
        .into_iter()
        .map(|n| {
            let bytes = fs::read(out_dir.join(&n)).expect("read artifact");
            (n, bytes)
        })
        .collect();
    run_ok(&["all", "--config", config.to_str().unwrap()]);
    for (name, bytes) in &first {
        let again = fs::read(out_dir.join(name)).expect("re-read artifact");
        assert_eq!(&again, bytes, "{name} changed between identical runs");
    }
}

#[test]
fn seed_override_changes_the_simulation() {
    let dir = fixture_copy();
    let config = dir.path().join("config.toml");
    run_ok(&["simulate", "--config", config.to_str().unwrap()]);
    let baseline = fs::read(dir.path().join("out/fablog_0.jsonl")).expect("read fablog");
    run_ok(&["simulate", "--config", config.to_str().unwrap(), "--seed", "99"]);
    let reseeded = fs::read(dir.path().join("out/fablog_0.jsonl")).expect("read fablog");
    assert_ne!(baseline, reseeded, "seed override had no effect on the fab log");
    // Elements are design-time output and must not depend on the seed.
    run_ok(&["design", "--config", config.to_str().unwrap(), "--seed", "1234"]);
    let elements = fs::read_to_string(dir.path().join("out/elements.csv")).expect("read elements");
    let elements_base = {
        run_ok(&["design", "--config", config.to_str().unwrap()]);
        fs::read_to_string(dir.path().join("out/elements.csv")).expect("read elements")
    };
    assert_eq!(elements, elements_base);
}

#[test]
fn out_override_redirects_artifacts() {
    let dir = fixture_copy();
    let alt = dir.path().join("elsewhere");
    run_ok(&[
        "design",
        "--config",
        dir.path().join("config.toml").to_str().unwrap(),
        "--out",
        alt.to_str().unwrap(),
    ]);
    assert!(alt.join("elements.csv").is_file());
    assert!(!dir.path().join("out").exists());
}
