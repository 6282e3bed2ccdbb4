//! Constraint recursion on three hand-sized systems: one where the kernel
//! constraints are solvable (regular branch), one that cascades through
//! secondary and tertiary constraints down to nothing, and one that
//! stabilizes with a leftover null direction, i.e. gauge freedom.
//!
//! Run with `cargo run --example constraint_chain`.

use collar::presym::{
    check_regularity, demo_regular, demo_two_step, pca_run, quadratic_system, PcaOptions,
    PcaReport,
};
use nalgebra::{DMatrix, DVector};

fn print_chain(label: &str, report: &PcaReport) {
    println!("{label} (ambient dimension {})", report.ambient_dim);
    println!("  step  added  total  manifold dim  residual");
    for s in &report.steps {
        println!(
            "  {:>4}  {:>5}  {:>5}  {:>12}  {:.2e}",
            s.index, s.constraints_added, s.constraints_total, s.dim, s.constraint_residual
        );
    }
    println!(
        "  final dim {}  gauge {}  reduced {}  dynamics residual {:.2e}",
        report.final_dim, report.gauge_dim, report.reduced_dim, report.dynamics_residual
    );
    let reg = &report.regularity;
    println!(
        "  kernel block: dim {} rank {} -> {}",
        reg.kernel_dim,
        reg.block_rank,
        if reg.regular { "regular" } else { "degenerate" }
    );
    println!();
}

fn main() -> collar::Result<()> {
    let opts = PcaOptions::default();

    let (sys, witness) = demo_regular();
    let report = pca_run(&sys, &witness, &opts)?;
    print_chain("regular branch", &report);

    let (sys, witness) = demo_two_step();
    let report = pca_run(&sys, &witness, &opts)?;
    print_chain("cascading constraints", &report);

    // Coordinates (q, p, b1, b2) with omega = dq ^ dp and H = p^2/2 + b1^2/2.
    // b1 is forced to zero, b2 never enters H, so the recursion stabilizes on
    // a 3-dimensional manifold whose restricted form still kills b2: a gauge
    // direction, and the kernel Hessian block is rank deficient.
    let mut omega = DMatrix::zeros(4, 4);
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    let mut hess = DMatrix::zeros(4, 4);
    hess[(1, 1)] = 1.0;
    hess[(2, 2)] = 1.0;
    let sys = quadratic_system(omega, hess)?;
    let witness = DVector::from_vec(vec![0.5, 0.2, 0.3, -0.4]);
    let report = pca_run(&sys, &witness, &opts)?;
    print_chain("gauge direction survives", &report);

    let reg = check_regularity(&sys, &witness, 1e-9)?;
    println!(
        "dichotomy at the witness: kernel {} vs block rank {}, singular values in [{:.2e}, {:.2e}]",
        reg.kernel_dim, reg.block_rank, reg.min_singular_value, reg.max_singular_value
    );
    Ok(())
}
