//! Contract tests for the command-line front end: exit codes, strict
//! parsing diagnostics, artifact formats and reproducibility.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_collar"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("collar-cli-tests").join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn missing_config_file_exits_3() {
    let out = bin()
        .args(["scalar", "--config", "/definitely/not/here.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let msg = stderr(&out);
    assert!(
        msg.contains("/definitely/not/here.toml"),
        "io diagnostic lacks the offending path: {msg}"
    );
}

#[test]
fn unknown_check_filter_exits_2() {
    let dir = scratch("bad-filter");
    let out = bin()
        .args(["verify", "--check", "guass"])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let msg = stderr(&out);
    assert!(msg.contains("guass"), "diagnostic lacks the filter: {msg}");
    assert!(msg.contains("gauss"), "diagnostic lacks the group list: {msg}");
}

#[test]
fn unknown_key_exits_2_with_line_diagnostic() {
    let dir = scratch("unknown-key");
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, "theory = \"scalar\"\nspeling = 1\n").unwrap();
    let out = bin().arg("scalar").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("line 2"), "diagnostic lacks a line number: {msg}");
    assert!(msg.contains("speling"), "diagnostic lacks the key: {msg}");
}

#[test]
fn theory_subcommand_mismatch_exits_2() {
    let dir = scratch("mismatch");
    let cfg = dir.join("ym.toml");
    std::fs::write(&cfg, "theory = \"yangmills\"\n[grid]\nsizes = [8, 8]\nspacings = [0.5, 0.5]\n")
        .unwrap();
    let out = bin().arg("scalar").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("yangmills"), "{}", stderr(&out));
}

#[test]
fn run_deeper_than_the_collar_exits_2() {
    let dir = scratch("deep-run");
    let cfg = dir.join("deep.toml");
    std::fs::write(
        &cfg,
        "theory = \"scalar\"\n[collar]\nepsilon = 0.5\ndt = 0.01\nsteps = 100\n",
    )
    .unwrap();
    let out = bin().arg("scalar").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("collar"), "{}", stderr(&out));
}

#[test]
fn scalar_defaults_pass_and_write_artifacts() {
    let dir = scratch("scalar-defaults");
    let out = bin().arg("scalar").arg("--out").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let report = std::fs::read_to_string(dir.join("scalar.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(json["theory"], "scalar");
    assert_eq!(json["overall_pass"], true);
    assert!(json.get("wall_clock_seconds").is_none(), "timing must stay out of the report");

    let energy = std::fs::read_to_string(dir.join("scalar_energy.csv")).unwrap();
    assert!(energy.starts_with("t,energy\n"), "header row is mandatory");
    assert_eq!(energy.lines().count(), 102, "one row per step plus header");
    let trajectory = std::fs::read_to_string(dir.join("scalar_trajectory.csv")).unwrap();
    assert!(trajectory.starts_with("t,site,phi,p\n"));
}

#[test]
fn psm_and_ym_defaults_pass() {
    for sub in ["psm", "ym"] {
        let dir = scratch(&format!("{sub}-defaults"));
        let out = bin().arg(sub).arg("--out").arg(&dir).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{sub}: {}", stderr(&out));
        let report = std::fs::read_to_string(dir.join(format!("{sub}.json"))).unwrap();
        let json: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert_eq!(json["overall_pass"], true, "{sub}");
    }
}

#[test]
fn pca_writes_both_chain_reports() {
    let dir = scratch("pca-chains");
    let out = bin().arg("pca").arg("--out").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for name in ["pca_regular.json", "pca_two_step.json"] {
        let chain: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap();
        assert!(chain["stabilized"].as_bool().unwrap(), "{name}");
    }
}

#[test]
fn filtered_verify_is_reproducible_across_out_dirs() {
    let mut blobs = Vec::new();
    for name in ["verify-a", "verify-b"] {
        let dir = scratch(name);
        let out = bin()
            .args(["verify", "--check", "pca", "--out"])
            .arg(&dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        blobs.push(std::fs::read(dir.join("verify.json")).unwrap());
    }
    assert_eq!(blobs[0], blobs[1], "reports must not depend on the output path");
}

#[test]
fn seed_flag_changes_the_report_seed() {
    let dir = scratch("seeded");
    let out = bin()
        .args(["verify", "--check", "pca", "--seed", "7", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("verify.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 7);
}
