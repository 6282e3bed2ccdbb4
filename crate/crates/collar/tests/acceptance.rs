//! Acceptance gate: one test per advertised guarantee, each printing a
//! single pass or fail line. Tolerances are pinned inside the criterion
//! implementations; these tests only refuse to average, widen or skip.

use collar::report::CheckRecord;
use collar::verify;
use std::process::Command;
use std::time::Instant;

fn run(filter: &str) -> Vec<CheckRecord> {
    let rep = verify::run_all(0, Some(filter)).expect("criterion run");
    assert!(
        !rep.checks.is_empty(),
        "filter \"{filter}\" selected no checks"
    );
    rep.checks
}

fn gate(number: usize, label: &str, records: &[CheckRecord]) {
    let pass = records.iter().all(|r| r.pass);
    println!(
        "[{}] criterion {:02}: {}",
        if pass { "PASS" } else { "FAIL" },
        number,
        label
    );
    for r in records {
        if !r.pass {
            println!(
                "       offending check {} = {:.6e} (tolerance {:.3e})",
                r.name, r.value, r.tolerance
            );
        }
    }
    assert!(pass, "criterion {number} failed: {label}");
}

#[test]
fn criterion_01_constraint_chains_are_exact() {
    let t0 = Instant::now();
    let records = run("pca");
    let elapsed = t0.elapsed().as_secs_f64();
    gate(1, "hand-sized constraint chains reproduce exact counts", &records);
    assert!(
        elapsed < 1.0,
        "constraint chains took {elapsed:.2}s, budget is 1s"
    );
}

#[test]
fn criterion_02_regularity_dichotomy() {
    gate(
        2,
        "kernel Hessian block separates regular from degenerate theories",
        &run("regularity"),
    );
}

#[test]
fn criterion_03_scalar_convergence_order() {
    gate(
        3,
        "scalar step error drops fourfold when the step is halved",
        &run("scalar_convergence"),
    );
}

#[test]
fn criterion_04_energy_drift_order() {
    gate(
        4,
        "energy drift refines at second order for scalar and gauge runs",
        &run("energy"),
    );
}

#[test]
fn criterion_05_symplectic_form_transport() {
    gate(
        5,
        "the flow transports the boundary form within certificate tolerance",
        &run("symplectic"),
    );
}

#[test]
fn criterion_06_adjointness_and_charges() {
    gate(
        6,
        "discrete adjointness and moment-map identities hold to roundoff",
        &run("noether"),
    );
}

#[test]
fn criterion_07_gauss_preservation() {
    gate(
        7,
        "Gauss residual is exact abelian and second order nonabelian",
        &run("gauss"),
    );
}

#[test]
fn criterion_08_sigma_model_constraints() {
    gate(
        8,
        "sigma-model constraints generate the advertised flows coisotropically",
        &run("sigma_model"),
    );
}

#[test]
fn criterion_09_euclidean_generating_functional() {
    gate(
        9,
        "boundary fluxes are the gradient of the Euclidean action",
        &run("euclidean"),
    );
}

#[test]
fn criterion_10_reduction_census() {
    gate(
        10,
        "reduction census matches closed-form dimension counts",
        &run("census"),
    );
}

#[test]
fn criterion_11_certificates_are_reproducible() {
    let t0 = Instant::now();
    let bin = env!("CARGO_BIN_EXE_collar");
    let tmp = std::env::temp_dir().join("collar-acceptance-verify");
    let mut outputs = Vec::new();
    for sub in ["one", "two"] {
        let dir = tmp.join(sub);
        let status = Command::new(bin)
            .args(["verify", "--out"])
            .arg(&dir)
            .output()
            .expect("spawn verify");
        assert!(
            status.status.success(),
            "verify run failed:\n{}",
            String::from_utf8_lossy(&status.stdout)
        );
        outputs.push(std::fs::read(dir.join("verify.json")).expect("read report"));
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let identical = outputs[0] == outputs[1];
    println!(
        "[{}] criterion 11: repeated certification is byte-identical ({elapsed:.1}s)",
        if identical && elapsed < 300.0 { "PASS" } else { "FAIL" }
    );
    assert!(identical, "verify reports differ between identical runs");
    assert!(elapsed < 300.0, "two verify runs took {elapsed:.1}s, budget is 300s");
}
