//! Finite-dimensional presymplectic systems and the constraint recursion.
//!
//! A system is R^n with a constant skew form Omega and a smooth Hamiltonian
//! given by value, gradient and Hessian closures. Conventions, fixed once:
//! Omega(u, v) = u^T A v, and the dynamics equation i_X Omega = dH reads
//! A^T X = grad H, so the solver works with -A.
//!
//! The recursion is the usual one: starting from the whole space, each step
//! pairs grad H against a basis of the symplectic orthogonal of the current
//! tangent space and keeps the directions whose gradients raise the rank of
//! the accumulated constraint set. Everything is linearized at a witness
//! point that is re-projected onto the constraint set by a damped Newton
//! iteration after every step, so curvature of the constraint set shows up
//! only through the recorded projection distances, not as silent error.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::util::RandomStream;
use crate::{Error, Result};

pub struct PresymplecticSystem {
    pub dim: usize,
    pub omega: DMatrix<f64>,
    hamiltonian: Box<dyn Fn(&DVector<f64>) -> f64>,
    gradient: Box<dyn Fn(&DVector<f64>) -> DVector<f64>>,
    hessian: Box<dyn Fn(&DVector<f64>) -> DMatrix<f64>>,
}

impl PresymplecticSystem {
    pub fn new(
        omega: DMatrix<f64>,
        hamiltonian: Box<dyn Fn(&DVector<f64>) -> f64>,
        gradient: Box<dyn Fn(&DVector<f64>) -> DVector<f64>>,
        hessian: Box<dyn Fn(&DVector<f64>) -> DMatrix<f64>>,
    ) -> Result<Self> {
        let dim = omega.nrows();
        if omega.ncols() != dim {
            return Err(Error::Config(format!(
                "presymplectic form must be square, got {}x{}",
                omega.nrows(),
                omega.ncols()
            )));
        }
        check_skew(&omega)?;
        Ok(PresymplecticSystem {
            dim,
            omega,
            hamiltonian,
            gradient,
            hessian,
        })
    }

    pub fn h(&self, x: &DVector<f64>) -> f64 {
        (self.hamiltonian)(x)
    }

    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(x)
    }

    pub fn hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.hessian)(x)
    }

    /// Max mismatch between the supplied derivatives and central finite
    /// differences at `point`, probing a few reproducible random directions.
    /// Adapters are required to keep this at discretization noise.
    pub fn derivative_self_test(&self, point: &DVector<f64>, seed: u64) -> f64 {
        let n = self.dim;
        let delta = 1e-5 * (1.0 + point.norm());
        let mut worst = 0.0f64;
        let mut rng = RandomStream::new(seed, "presym-self-test");
        for _ in 0..4 {
            let mut dir = DVector::zeros(n);
            for i in 0..n {
                dir[i] = rng.next_symmetric();
            }
            let nn = dir.norm();
            if nn == 0.0 {
                continue;
            }
            dir /= nn;
            let xp = point + &dir * delta;
            let xm = point - &dir * delta;
            let fd_h = (self.h(&xp) - self.h(&xm)) / (2.0 * delta);
            let an_h = self.grad(point).dot(&dir);
            worst = worst.max((fd_h - an_h).abs() / (1.0 + an_h.abs()));
            let fd_g = (self.grad(&xp) - self.grad(&xm)) / (2.0 * delta);
            let an_g = self.hess(point) * &dir;
            worst = worst.max((fd_g - &an_g).norm() / (1.0 + an_g.norm()));
        }
        worst
    }
}

fn check_skew(omega: &DMatrix<f64>) -> Result<()> {
    let scale = omega.amax().max(1.0);
    let defect = (omega + omega.transpose()).amax();
    if defect > 1e-12 * scale {
        return Err(Error::Config(format!(
            "form is not antisymmetric: |Omega + Omega^T| = {defect:.3e}"
        )));
    }
    Ok(())
}

/// Orthonormal basis of ker(A) for a skew form, via SVD. Rejects non-skew
/// input rather than silently symmetrizing it.
pub fn kernel_basis(omega: &DMatrix<f64>, tol_rank: f64) -> Result<DMatrix<f64>> {
    check_skew(omega)?;
    Ok(null_space(omega, tol_rank))
}

/// Orthonormal basis of the null space of `mat` (acting on column vectors).
/// Wide matrices are zero-padded to square first so the SVD returns the full
/// right factor; padding changes neither singular values nor the null space.
/// Going through the Gram matrix instead would square the conditioning and
/// push exact zeros above a 1e-9 relative cut.
fn null_space(mat: &DMatrix<f64>, tol_rank: f64) -> DMatrix<f64> {
    let n = mat.ncols();
    let m = mat.nrows();
    if m == 0 || n == 0 {
        return DMatrix::identity(n, n);
    }
    let work = if m >= n {
        mat.clone()
    } else {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(mat);
        p
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("right factor requested");
    let cut = tol_rank * svd.singular_values.amax();
    let kernel: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cut)
        .collect();
    let mut out = DMatrix::zeros(n, kernel.len());
    for (c, &i) in kernel.iter().enumerate() {
        out.set_column(c, &v_t.row(i).transpose());
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DynamicsSolution {
    #[serde(skip)]
    pub vector_field: DVector<f64>,
    pub residual: f64,
    pub solvable: bool,
}

/// Least-squares solve of i_X Omega = grad H at `point` over the whole space.
/// `residual` is relative; `solvable` applies the given tolerance.
pub fn solve_dynamics(
    sys: &PresymplecticSystem,
    point: &DVector<f64>,
    tol: f64,
) -> DynamicsSolution {
    let rhs = sys.grad(point);
    let lhs = -&sys.omega;
    let x = lstsq(&lhs, &rhs, 1e-12);
    let res = (&lhs * &x - &rhs).norm() / rhs.norm().max(1.0);
    DynamicsSolution {
        vector_field: x,
        residual: res,
        solvable: res <= tol,
    }
}

/// Minimum-norm least-squares solution of M x = b.
fn lstsq(m: &DMatrix<f64>, b: &DVector<f64>, eps_rel: f64) -> DVector<f64> {
    let svd = m.clone().svd(true, true);
    let eps = eps_rel * svd.singular_values.amax().max(f64::MIN_POSITIVE);
    svd.solve(b, eps).expect("svd solve with both factors")
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub kernel_dim: usize,
    pub block_rank: usize,
    pub regular: bool,
    pub min_singular_value: f64,
    pub max_singular_value: f64,
}

/// Restricts the Hessian of H at `point` to ker(Omega) and reports whether
/// that block has full rank. Full rank means the kernel-direction constraints
/// can be solved for the kernel variables; a rank defect is the degenerate
/// branch of the dichotomy.
pub fn check_regularity(
    sys: &PresymplecticSystem,
    point: &DVector<f64>,
    tol_rank: f64,
) -> Result<RegularityReport> {
    let z = kernel_basis(&sys.omega, tol_rank)?;
    let k = z.ncols();
    if k == 0 {
        return Ok(RegularityReport {
            kernel_dim: 0,
            block_rank: 0,
            regular: true,
            min_singular_value: 0.0,
            max_singular_value: 0.0,
        });
    }
    let hess = sys.hess(point);
    // Rank against the ambient Hessian scale, not the block's own largest
    // singular value: a kernel block that is identically zero must count as
    // rank zero, and relative-to-itself thresholds cannot see that.
    let scale = hess.amax().max(f64::MIN_POSITIVE);
    let block = z.transpose() * hess * &z;
    let svd = block.svd(false, false);
    let max_sv = svd.singular_values.amax();
    let min_sv = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let rank = svd
        .singular_values
        .iter()
        .filter(|s| **s > tol_rank * scale)
        .count();
    Ok(RegularityReport {
        kernel_dim: k,
        block_rank: rank,
        regular: rank == k,
        min_singular_value: min_sv,
        max_singular_value: max_sv,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PcaOptions {
    pub tol_rank: f64,
    pub tol_constraint: f64,
    pub max_steps: usize,
    pub newton_max_iter: usize,
}

impl Default for PcaOptions {
    fn default() -> Self {
        PcaOptions {
            tol_rank: 1e-9,
            tol_constraint: 1e-10,
            max_steps: 32,
            newton_max_iter: 60,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PcaStep {
    pub index: usize,
    pub constraints_added: usize,
    pub constraints_total: usize,
    pub dim: usize,
    pub witness_distance: f64,
    pub constraint_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PcaReport {
    pub ambient_dim: usize,
    pub steps: Vec<PcaStep>,
    pub stabilized: bool,
    pub final_dim: usize,
    pub gauge_dim: usize,
    pub reduced_dim: usize,
    pub dynamics_residual: f64,
    pub regularity: RegularityReport,
}

/// Runs the constraint recursion, linearized at a witness point.
pub fn pca_run(
    sys: &PresymplecticSystem,
    witness: &DVector<f64>,
    opts: &PcaOptions,
) -> Result<PcaReport> {
    let n = sys.dim;
    if witness.len() != n {
        return Err(Error::Config(format!(
            "witness has dimension {}, system has {n}",
            witness.len()
        )));
    }
    let a = &sys.omega;
    let mut x = witness.clone();
    let mut dirs: Vec<DVector<f64>> = Vec::new();
    let mut tangent = DMatrix::<f64>::identity(n, n);
    let mut steps: Vec<PcaStep> = Vec::new();
    let mut stabilized = false;

    for index in 1..=opts.max_steps {
        // Directions Omega-orthogonal to the current tangent space.
        let w_basis = null_space(&(tangent.transpose() * a), opts.tol_rank);

        // Keep candidates whose gradients raise the rank of the accumulated
        // constraint set, all evaluated at the current witness.
        let hx = sys.hess(&x);
        let mut ortho: Vec<DVector<f64>> = Vec::new();
        for w in &dirs {
            let mut g = &hx * w;
            for q in &ortho {
                let c = q.dot(&g);
                g -= q * c;
            }
            let nn = g.norm();
            if nn > 0.0 {
                ortho.push(g / nn);
            }
        }
        let mut added = 0usize;
        for j in 0..w_basis.ncols() {
            let w = w_basis.column(j).into_owned();
            let g0 = &hx * &w;
            let mut g = g0.clone();
            for q in &ortho {
                let c = q.dot(&g);
                g -= q * c;
            }
            // Second orthogonalization pass keeps the rank test honest when
            // candidates are nearly dependent.
            for q in &ortho {
                let c = q.dot(&g);
                g -= q * c;
            }
            let nn = g.norm();
            if nn > opts.tol_rank * (1.0 + g0.norm()) {
                ortho.push(g / nn);
                dirs.push(w);
                added += 1;
            }
        }

        if added == 0 {
            stabilized = true;
            steps.push(PcaStep {
                index,
                constraints_added: 0,
                constraints_total: dirs.len(),
                dim: tangent.ncols(),
                witness_distance: 0.0,
                constraint_residual: constraint_norm(sys, &x, &dirs),
            });
            break;
        }

        let (distance, residual) = project_witness(sys, &mut x, &dirs, opts)?;
        let jac = constraint_jacobian(sys, &x, &dirs);
        tangent = null_space(&jac, opts.tol_rank);
        steps.push(PcaStep {
            index,
            constraints_added: added,
            constraints_total: dirs.len(),
            dim: tangent.ncols(),
            witness_distance: distance,
            constraint_residual: residual,
        });
    }

    let final_dim = tangent.ncols();
    let (gauge_dim, reduced_dim) = if final_dim == 0 {
        (0, 0)
    } else {
        // Same scale convention as check_regularity: a pullback that is all
        // roundoff must rank as zero, so compare against the ambient form.
        let restricted = tangent.transpose() * a * &tangent;
        let svd = restricted.svd(false, false);
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let rank = svd
            .singular_values
            .iter()
            .filter(|s| **s > opts.tol_rank * scale)
            .count();
        (final_dim - rank, rank)
    };

    // i_X Omega = dH with X constrained to the final tangent space; after
    // stabilization this must close at witness-projection accuracy.
    let rhs = sys.grad(&x);
    let dynamics_residual = if final_dim == 0 {
        rhs.norm() / rhs.norm().max(1.0)
    } else {
        let m = -a * &tangent;
        let xi = lstsq(&m, &rhs, 1e-12);
        (&m * &xi - &rhs).norm() / rhs.norm().max(1.0)
    };

    let regularity = check_regularity(sys, &x, opts.tol_rank)?;

    Ok(PcaReport {
        ambient_dim: n,
        steps,
        stabilized,
        final_dim,
        gauge_dim,
        reduced_dim,
        dynamics_residual,
        regularity,
    })
}

fn constraint_values(sys: &PresymplecticSystem, x: &DVector<f64>, dirs: &[DVector<f64>]) -> DVector<f64> {
    let g = sys.grad(x);
    DVector::from_iterator(dirs.len(), dirs.iter().map(|w| g.dot(w)))
}

fn constraint_norm(sys: &PresymplecticSystem, x: &DVector<f64>, dirs: &[DVector<f64>]) -> f64 {
    if dirs.is_empty() {
        0.0
    } else {
        constraint_values(sys, x, dirs).amax()
    }
}

fn constraint_jacobian(sys: &PresymplecticSystem, x: &DVector<f64>, dirs: &[DVector<f64>]) -> DMatrix<f64> {
    let hx = sys.hess(x);
    let mut jac = DMatrix::zeros(dirs.len(), sys.dim);
    for (r, w) in dirs.iter().enumerate() {
        let row = &hx * w;
        jac.set_row(r, &row.transpose());
    }
    jac
}

/// Damped Newton projection of the witness onto the zero set of the
/// accumulated constraints. Returns (distance moved, final residual).
fn project_witness(
    sys: &PresymplecticSystem,
    x: &mut DVector<f64>,
    dirs: &[DVector<f64>],
    opts: &PcaOptions,
) -> Result<(f64, f64)> {
    let start = x.clone();
    let mut c = constraint_values(sys, x, dirs);
    for _ in 0..opts.newton_max_iter {
        if c.amax() <= opts.tol_constraint {
            return Ok(((&*x - &start).norm(), c.amax()));
        }
        let jac = constraint_jacobian(sys, x, dirs);
        let step = lstsq(&jac, &(-&c), 1e-12);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &*x + &step * lambda;
            let ct = constraint_values(sys, &trial, dirs);
            if ct.norm() < c.norm() * (1.0 - 0.25 * lambda) || ct.amax() <= opts.tol_constraint {
                *x = trial;
                c = ct;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::Numerical(format!(
                "witness projection stalled at residual {:.3e}",
                c.amax()
            )));
        }
    }
    if c.amax() <= opts.tol_constraint {
        Ok(((&*x - &start).norm(), c.amax()))
    } else {
        Err(Error::Numerical(format!(
            "witness projection did not converge: residual {:.3e}",
            c.amax()
        )))
    }
}

/// System with quadratic Hamiltonian H(x) = x' S x / 2 and constant Omega.
/// The closures are exact, so constraint chains on these instances are pure
/// linear algebra with no differentiation error.
pub fn quadratic_system(omega: DMatrix<f64>, hess: DMatrix<f64>) -> Result<PresymplecticSystem> {
    let h1 = hess.clone();
    let h2 = hess.clone();
    PresymplecticSystem::new(
        omega,
        Box::new(move |x: &DVector<f64>| 0.5 * (x.transpose() * &h1 * x)[(0, 0)]),
        Box::new(move |x: &DVector<f64>| &h2 * x),
        Box::new(move |_| hess.clone()),
    )
}

/// Hand-sized regular instance with a standard witness: coordinates
/// (q, p, b1, b2), Omega = dq ^ dp, H = p^2/2 + (b1^2 + b2^2)/2 + q b1.
/// One constraint step lands on {b1 = -q, b2 = 0} and stabilizes; the
/// kernel Hessian block is the identity, so the instance is regular.
pub fn demo_regular() -> (PresymplecticSystem, DVector<f64>) {
    let mut omega = DMatrix::zeros(4, 4);
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    let mut hess = DMatrix::zeros(4, 4);
    hess[(1, 1)] = 1.0;
    hess[(2, 2)] = 1.0;
    hess[(3, 3)] = 1.0;
    hess[(0, 2)] = 1.0;
    hess[(2, 0)] = 1.0;
    let witness = DVector::from_vec(vec![0.4, -0.3, 0.2, 0.1]);
    (quadratic_system(omega, hess).unwrap(), witness)
}

/// Hand-sized singular instance with a standard witness: coordinates
/// (q, p, b), Omega = dq ^ dp, H = p^2/2 + q b. The Hessian kernel block
/// vanishes and the chain walks down one dimension per step to the origin.
pub fn demo_two_step() -> (PresymplecticSystem, DVector<f64>) {
    let mut omega = DMatrix::zeros(3, 3);
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    let mut hess = DMatrix::zeros(3, 3);
    hess[(1, 1)] = 1.0;
    hess[(0, 2)] = 1.0;
    hess[(2, 0)] = 1.0;
    let witness = DVector::from_vec(vec![0.3, -0.2, 0.5]);
    (quadratic_system(omega, hess).unwrap(), witness)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical_omega_with_kernel(pairs: usize, kernel: usize) -> DMatrix<f64> {
        let n = 2 * pairs + kernel;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..pairs {
            a[(2 * i, 2 * i + 1)] = 1.0;
            a[(2 * i + 1, 2 * i)] = -1.0;
        }
        a
    }

    #[test]
    fn kernel_basis_finds_null_directions_and_rejects_non_skew() {
        let a = canonical_omega_with_kernel(1, 1);
        let z = kernel_basis(&a, 1e-9).unwrap();
        assert_eq!(z.ncols(), 1);
        assert!((z[(2, 0)].abs() - 1.0).abs() < 1e-12);
        assert!(z[(0, 0)].abs() < 1e-12 && z[(1, 0)].abs() < 1e-12);

        let full = canonical_omega_with_kernel(1, 0);
        assert_eq!(kernel_basis(&full, 1e-9).unwrap().ncols(), 0);

        let mut bad = canonical_omega_with_kernel(1, 0);
        bad[(0, 0)] = 0.5;
        assert!(kernel_basis(&bad, 1e-9).is_err());
    }

    #[test]
    fn solve_dynamics_recovers_the_symplectic_flow() {
        // H = (q^2 + p^2)/2 on the plane: X = (p, -q).
        let sys =
            quadratic_system(canonical_omega_with_kernel(1, 0), DMatrix::identity(2, 2)).unwrap();
        let x0 = DVector::from_vec(vec![0.7, -0.4]);
        let sol = solve_dynamics(&sys, &x0, 1e-10);
        assert!(sol.solvable);
        assert!((sol.vector_field[0] + 0.4).abs() < 1e-12);
        assert!((sol.vector_field[1] + 0.7).abs() < 1e-12);
    }

    #[test]
    fn solve_dynamics_flags_kernel_obstruction() {
        // grad H has a component along ker Omega: no solution anywhere with
        // beta != 0, and the residual says by how much.
        let sys =
            quadratic_system(canonical_omega_with_kernel(1, 1), DMatrix::identity(3, 3)).unwrap();
        let sol = solve_dynamics(&sys, &DVector::from_vec(vec![0.2, 0.1, 0.9]), 1e-10);
        assert!(!sol.solvable);
        assert!(sol.residual > 0.5);
        let on_surface = solve_dynamics(&sys, &DVector::from_vec(vec![0.2, 0.1, 0.0]), 1e-10);
        assert!(on_surface.solvable);
    }

    #[test]
    fn derivative_self_test_accepts_consistent_closures() {
        let mut hess = DMatrix::identity(4, 4);
        hess[(0, 3)] = 1.0;
        hess[(3, 0)] = 1.0;
        let sys = quadratic_system(canonical_omega_with_kernel(1, 2), hess).unwrap();
        let x = DVector::from_vec(vec![0.3, -0.2, 0.5, 0.1]);
        assert!(sys.derivative_self_test(&x, 42) < 1e-8);
    }

    // The demo instances are hand-worked chains kept as frozen expectations.

    #[test]
    fn regular_toy_stabilizes_in_one_constraint_step() {
        let (sys, witness) = demo_regular();
        let report = pca_run(&sys, &witness, &PcaOptions::default()).unwrap();
        assert!(report.stabilized);
        assert_eq!(report.steps.len(), 2);
        assert_eq!(report.steps[0].constraints_added, 2);
        assert_eq!(report.steps[0].dim, 2);
        assert_eq!(report.steps[1].constraints_added, 0);
        assert_eq!(report.final_dim, 2);
        assert_eq!(report.gauge_dim, 0);
        assert_eq!(report.reduced_dim, 2);
        assert!(report.dynamics_residual < 1e-9);
        assert!(report.regularity.regular);
        assert_eq!(report.regularity.kernel_dim, 2);
        assert_eq!(report.regularity.block_rank, 2);
        // The witness really moved onto {b1 = -q, b2 = 0}.
        assert!(report.steps[0].witness_distance > 0.1);
        assert!(report.steps[0].constraint_residual < 1e-10);
    }

    #[test]
    fn singular_toy_walks_down_to_the_origin() {
        let (sys, witness) = demo_two_step();
        let report = pca_run(&sys, &witness, &PcaOptions::default()).unwrap();
        assert!(report.stabilized);
        // One new constraint per step: q, then p, then b.
        assert_eq!(report.steps.len(), 4);
        let added: Vec<usize> = report.steps.iter().map(|s| s.constraints_added).collect();
        assert_eq!(added, vec![1, 1, 1, 0]);
        let dims: Vec<usize> = report.steps.iter().map(|s| s.dim).collect();
        assert_eq!(dims, vec![2, 1, 0, 0]);
        assert_eq!(report.final_dim, 0);
        assert_eq!(report.gauge_dim, 0);
        assert_eq!(report.reduced_dim, 0);
        assert!(!report.regularity.regular);
        assert_eq!(report.regularity.kernel_dim, 1);
        assert_eq!(report.regularity.block_rank, 0);
        assert!(report.dynamics_residual < 1e-9);
    }

    #[test]
    fn pca_rejects_dimension_mismatch() {
        let (sys, _) = demo_regular();
        let witness = DVector::from_vec(vec![0.0; 3]);
        assert!(pca_run(&sys, &witness, &PcaOptions::default()).is_err());
    }

    proptest::proptest! {
        #[test]
        fn kernel_vectors_annihilate_random_skew_forms(seed in 0u64..64, n in 2usize..7) {
            let mut rng = RandomStream::new(seed, "skew");
            let mut raw = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    raw[(i, j)] = rng.next_symmetric();
                }
            }
            let a = &raw - raw.transpose();
            let z = kernel_basis(&a, 1e-9).unwrap();
            // Skew rank is even, so kernel dimension has the parity of n.
            proptest::prop_assert_eq!(z.ncols() % 2, n % 2);
            for j in 0..z.ncols() {
                let v = z.column(j);
                proptest::prop_assert!((&a * v).norm() < 1e-9 * a.amax());
                proptest::prop_assert!((v.norm() - 1.0).abs() < 1e-10);
            }
        }
    }
}
