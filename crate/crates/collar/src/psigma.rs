//! Poisson sigma-model boundary data on a circle.
//!
//! Target coordinates phi^a, momenta p_a and a gauge input beta_a per site.
//! The boundary Hamiltonian is H = sum_s w_s [ -beta_a D phi^a
//! + Lambda^{ab}(phi) p_a beta_b ] with D the central difference, and the
//! kernel-direction constraint is Psi^a = -D phi^a - Lambda^{ab} p_b,
//! independent of beta: this is the degenerate branch of the dichotomy, the
//! beta block of the Hessian vanishes identically.
//!
//! Everything here is checked against the discrete form itself. The
//! Hamiltonian vector field of a constraint is written in closed form so that
//! i_X Omega = d Psi holds exactly, and the coisotropy defect is measured as
//! the worst pairwise bracket of constraints on (approximately) constrained
//! data: exactly zero for constant Lambda on a uniform grid, O(h^2) for the
//! Lie-Poisson structure, where the central-difference product rule defect
//! enters.

use nalgebra::{DMatrix, DVector};

use crate::lattice::{LatticeGrid, ScalarField};
use crate::presym::PresymplecticSystem;
use crate::util::pairwise_sum;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PoissonStructure {
    /// Constant antisymmetric Lambda on R^r.
    Constant { lambda: DMatrix<f64> },
    /// Lie-Poisson structure on su(2)*: Lambda^{ab}(phi) = eps^{abc} phi_c.
    Su2,
    /// r = 2 with Lambda^{01} = c0 + c2 |phi|^2; Jacobi holds for free in
    /// two dimensions.
    Polynomial { c0: f64, c2: f64 },
}

impl PoissonStructure {
    pub fn constant(lambda: DMatrix<f64>) -> Result<Self> {
        if lambda.nrows() != lambda.ncols() {
            return Err(Error::Config("Poisson matrix must be square".into()));
        }
        let defect = (&lambda + lambda.transpose()).amax();
        if defect > 1e-12 * lambda.amax().max(1.0) {
            return Err(Error::Config(format!(
                "Poisson matrix is not antisymmetric (defect {defect:.3e})"
            )));
        }
        Ok(PoissonStructure::Constant { lambda })
    }

    pub fn target_dim(&self) -> usize {
        match self {
            PoissonStructure::Constant { lambda } => lambda.nrows(),
            PoissonStructure::Su2 => 3,
            PoissonStructure::Polynomial { .. } => 2,
        }
    }

    pub fn lambda(&self, phi: &[f64]) -> DMatrix<f64> {
        match self {
            PoissonStructure::Constant { lambda } => lambda.clone(),
            PoissonStructure::Su2 => {
                let mut m = DMatrix::zeros(3, 3);
                m[(0, 1)] = phi[2];
                m[(1, 0)] = -phi[2];
                m[(1, 2)] = phi[0];
                m[(2, 1)] = -phi[0];
                m[(2, 0)] = phi[1];
                m[(0, 2)] = -phi[1];
                m
            }
            PoissonStructure::Polynomial { c0, c2 } => {
                let v = c0 + c2 * (phi[0] * phi[0] + phi[1] * phi[1]);
                let mut m = DMatrix::zeros(2, 2);
                m[(0, 1)] = v;
                m[(1, 0)] = -v;
                m
            }
        }
    }

    /// d Lambda^{ab} / d phi^c.
    pub fn dlambda(&self, phi: &[f64], c: usize) -> DMatrix<f64> {
        let r = self.target_dim();
        match self {
            PoissonStructure::Constant { .. } => DMatrix::zeros(r, r),
            PoissonStructure::Su2 => {
                let mut e = [0.0; 3];
                e[c] = 1.0;
                PoissonStructure::Su2.lambda(&e)
            }
            PoissonStructure::Polynomial { c2, .. } => {
                let mut m = DMatrix::zeros(2, 2);
                m[(0, 1)] = 2.0 * c2 * phi[c];
                m[(1, 0)] = -2.0 * c2 * phi[c];
                m
            }
        }
    }

    /// d^2 Lambda^{ab} / d phi^c d phi^e.
    pub fn d2lambda(&self, _phi: &[f64], c: usize, e: usize) -> DMatrix<f64> {
        let r = self.target_dim();
        match self {
            PoissonStructure::Constant { .. } | PoissonStructure::Su2 => DMatrix::zeros(r, r),
            PoissonStructure::Polynomial { c2, .. } => {
                let mut m = DMatrix::zeros(2, 2);
                if c == e {
                    m[(0, 1)] = 2.0 * c2;
                    m[(1, 0)] = -2.0 * c2;
                }
                m
            }
        }
    }

    /// Worst Jacobi identity defect over the sample points:
    /// sum_d Lambda^{ad} d_d Lambda^{bc} + cyclic.
    pub fn jacobi_defect(&self, samples: &[Vec<f64>]) -> f64 {
        let r = self.target_dim();
        let mut worst = 0.0f64;
        for phi in samples {
            let lam = self.lambda(phi);
            let dlam: Vec<DMatrix<f64>> = (0..r).map(|d| self.dlambda(phi, d)).collect();
            for a in 0..r {
                for b in 0..r {
                    for c in 0..r {
                        let mut j = 0.0;
                        for d in 0..r {
                            j += lam[(a, d)] * dlam[d][(b, c)]
                                + lam[(b, d)] * dlam[d][(c, a)]
                                + lam[(c, d)] * dlam[d][(a, b)];
                        }
                        worst = worst.max(j.abs());
                    }
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsmState {
    pub phi: ScalarField,
    pub p: ScalarField,
}

impl PsmState {
    pub fn zeros(grid: &LatticeGrid, r: usize) -> Self {
        PsmState {
            phi: ScalarField::zeros(grid, r),
            p: ScalarField::zeros(grid, r),
        }
    }
}

fn require_circle(grid: &LatticeGrid) -> Result<()> {
    if grid.dim != 1 {
        return Err(Error::Config(
            "the sigma-model boundary is one-dimensional".into(),
        ));
    }
    Ok(())
}

/// Central difference of each component along the circle.
fn central_d(grid: &LatticeGrid, f: &ScalarField) -> ScalarField {
    let h = grid.spacing[0];
    let mut out = ScalarField::zeros(grid, f.comp);
    for s in 0..grid.site_count() {
        let sp = grid.neighbor(s, 0, 1);
        let sm = grid.neighbor(s, 0, -1);
        for c in 0..f.comp {
            *out.at_mut(s, c) = (f.at(sp, c) - f.at(sm, c)) / (2.0 * h);
        }
    }
    out
}

fn site_slice(f: &ScalarField, s: usize) -> &[f64] {
    &f.data[s * f.comp..(s + 1) * f.comp]
}

/// H = sum_s w_s [ -beta_a (D phi)^a + Lambda^{ab}(phi_s) p_a beta_b ].
pub fn boundary_hamiltonian(
    grid: &LatticeGrid,
    ps: &PoissonStructure,
    phi: &ScalarField,
    p: &ScalarField,
    beta: &ScalarField,
) -> Result<f64> {
    require_circle(grid)?;
    let r = ps.target_dim();
    let dphi = central_d(grid, phi);
    let mut cells = Vec::with_capacity(grid.site_count());
    for s in 0..grid.site_count() {
        let lam = ps.lambda(site_slice(phi, s));
        let mut v = 0.0;
        for a in 0..r {
            v -= beta.at(s, a) * dphi.at(s, a);
            for b in 0..r {
                v += lam[(a, b)] * p.at(s, a) * beta.at(s, b);
            }
        }
        cells.push(grid.weight[s] * v);
    }
    Ok(pairwise_sum(&cells))
}

/// The kernel-direction constraint Psi^a(s) = -(D phi)^a - Lambda^{ab} p_b.
pub fn constraint_psi(
    grid: &LatticeGrid,
    ps: &PoissonStructure,
    phi: &ScalarField,
    p: &ScalarField,
) -> Result<ScalarField> {
    require_circle(grid)?;
    let r = ps.target_dim();
    let dphi = central_d(grid, phi);
    let mut out = ScalarField::zeros(grid, r);
    for s in 0..grid.site_count() {
        let lam = ps.lambda(site_slice(phi, s));
        for a in 0..r {
            let mut v = -dphi.at(s, a);
            for b in 0..r {
                v -= lam[(a, b)] * p.at(s, b);
            }
            *out.at_mut(s, a) = v;
        }
    }
    Ok(out)
}

/// Minimal-norm momenta solving Psi = 0 sitewise by least squares, together
/// with the worst leftover constraint value. For an invertible Lambda the
/// leftover is zero; for the Lie-Poisson structure the obstruction is the
/// component of D phi along phi, an O(h^2) quantity on smooth sphere data.
pub fn solve_constraint_momentum(
    grid: &LatticeGrid,
    ps: &PoissonStructure,
    phi: &ScalarField,
) -> Result<(ScalarField, f64)> {
    require_circle(grid)?;
    let r = ps.target_dim();
    let dphi = central_d(grid, phi);
    let mut p = ScalarField::zeros(grid, r);
    for s in 0..grid.site_count() {
        let lam = ps.lambda(site_slice(phi, s));
        let rhs = DVector::from_iterator(r, (0..r).map(|a| -dphi.at(s, a)));
        let svd = lam.svd(true, true);
        let eps = 1e-10 * svd.singular_values.amax().max(f64::MIN_POSITIVE);
        let sol = svd
            .solve(&rhs, eps)
            .map_err(|e| Error::Numerical(format!("sitewise solve failed: {e}")))?;
        for a in 0..r {
            *p.at_mut(s, a) = sol[a];
        }
    }
    let psi = constraint_psi(grid, ps, phi, &p)?;
    let worst = psi.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((p, worst))
}

/// Gradient of the constraint Psi^a(s) with respect to (phi, p).
pub fn constraint_gradient(
    grid: &LatticeGrid,
    ps: &PoissonStructure,
    phi: &ScalarField,
    p: &ScalarField,
    a: usize,
    s: usize,
) -> (ScalarField, ScalarField) {
    let r = ps.target_dim();
    let h = grid.spacing[0];
    let mut dphi = ScalarField::zeros(grid, r);
    let mut dp = ScalarField::zeros(grid, r);
    let sp = grid.neighbor(s, 0, 1);
    let sm = grid.neighbor(s, 0, -1);
    *dphi.at_mut(sp, a) -= 1.0 / (2.0 * h);
    *dphi.at_mut(sm, a) += 1.0 / (2.0 * h);
    let lam = ps.lambda(site_slice(phi, s));
    for c in 0..r {
        let dl = ps.dlambda(site_slice(phi, s), c);
        let mut v = 0.0;
        for b in 0..r {
            v -= dl[(a, b)] * p.at(s, b);
        }
        *dphi.at_mut(s, c) += v;
        *dp.at_mut(s, c) = -lam[(a, c)];
    }
    (dphi, dp)
}

/// Hamiltonian vector field of Psi^a(s) for Omega = sum w dphi ^ dp:
/// w X_phi = dPsi/dp and w X_p = -dPsi/dphi, so i_X Omega = dPsi by
/// construction, with no discretization slack.
pub fn constraint_vector_field(
    grid: &LatticeGrid,
    ps: &PoissonStructure,
    phi: &ScalarField,
    p: &ScalarField,
    a: usize,
    s: usize,
) -> (ScalarField, ScalarField) {
    let (dphi, dp) = constraint_gradient(grid, ps, phi, p, a, s);
    let r = ps.target_dim();
    let mut xphi = ScalarField::zeros(grid, r);
    let mut xp = ScalarField::zeros(grid, r);
    for z in 0..grid.site_count() {
        for c in 0..r {
            *xphi.at_mut(z, c) = dp.at(z, c) / grid.weight[z];
            *xp.at_mut(z, c) = -dphi.at(z, c) / grid.weight[z];
        }
    }
    (xphi, xp)
}

/// Gradient of the smeared constraint C_u = sum_s w_s u_a(s) Psi^a(s).
pub fn smeared_constraint_gradient(
    grid: &LatticeGrid,
    ps: &PoissonStructure,
    phi: &ScalarField,
    p: &ScalarField,
    u: &ScalarField,
) -> (ScalarField, ScalarField) {
    let r = ps.target_dim();
    let n = grid.site_count();
    let mut wu = u.clone();
    for s in 0..n {
        for a in 0..r {
            *wu.at_mut(s, a) *= grid.weight[s];
        }
    }
    // D is skew under the plain sum, so the derivative part of the gradient
    // is +D(w u) with no transpose bookkeeping.
    let dwu = central_d(grid, &wu);
    let mut dphi = ScalarField::zeros(grid, r);
    let mut dp = ScalarField::zeros(grid, r);
    for s in 0..n {
        let w = grid.weight[s];
        let lam = ps.lambda(site_slice(phi, s));
        for c in 0..r {
            let dl_c = ps.dlambda(site_slice(phi, s), c);
            let mut v = dwu.at(s, c);
            for a in 0..r {
                for b in 0..r {
                    v -= w * u.at(s, a) * dl_c[(a, b)] * p.at(s, b);
                }
            }
            *dphi.at_mut(s, c) = v;
            let mut vp = 0.0;
            for a in 0..r {
                vp -= w * u.at(s, a) * lam[(a, c)];
            }
            *dp.at_mut(s, c) = vp;
        }
    }
    (dphi, dp)
}

/// Worst Poisson bracket |{C_u, C_v}| over a fixed family of smooth test
/// profiles. Site constraints are densities whose raw pairwise brackets do
/// not converge under refinement; smearing against smooth covectors is the
/// statement that does. On constrained data this is the coisotropy
/// certificate: exactly zero for constant Lambda on a uniform grid, O(h^2)
/// otherwise.
pub fn coisotropy_residual(
    grid: &LatticeGrid,
    ps: &PoissonStructure,
    phi: &ScalarField,
    p: &ScalarField,
) -> Result<f64> {
    require_circle(grid)?;
    let r = ps.target_dim();
    let length = grid.shape[0] as f64 * grid.spacing[0];
    let mut profiles = Vec::new();
    for m in 1..=2 {
        let k = 2.0 * std::f64::consts::PI * m as f64 / length;
        profiles.push(ScalarField::from_fn(grid, r, |x, a| {
            (k * x[0] + 0.4 * (a + 1) as f64).cos()
        }));
        profiles.push(ScalarField::from_fn(grid, r, |x, a| {
            (k * x[0] + 0.7 * (a + 1) as f64).sin()
        }));
    }
    let grads: Vec<_> = profiles
        .iter()
        .map(|u| smeared_constraint_gradient(grid, ps, phi, p, u))
        .collect();
    let mut worst = 0.0f64;
    for (dphi_v, dp_v) in &grads {
        for (dphi_u, dp_u) in &grads {
            // {C_u, C_v} = dC_v . X_u with w X_u = (dC_u/dp, -dC_u/dphi).
            let mut acc = 0.0;
            for s in 0..grid.site_count() {
                for a in 0..r {
                    acc += (dphi_v.at(s, a) * dp_u.at(s, a)
                        - dp_v.at(s, a) * dphi_u.at(s, a))
                        / grid.weight[s];
                }
            }
            worst = worst.max(acc.abs());
        }
    }
    Ok(worst)
}

fn time_derivative(
    grid: &LatticeGrid,
    ps: &PoissonStructure,
    state: &PsmState,
    beta: &ScalarField,
) -> (ScalarField, ScalarField) {
    let r = ps.target_dim();
    let n = grid.site_count();
    // D(w beta) first, then divide by w, so the pairing stays exact on any
    // weight profile.
    let mut wbeta = beta.clone();
    for s in 0..n {
        for a in 0..r {
            *wbeta.at_mut(s, a) *= grid.weight[s];
        }
    }
    let dwbeta = central_d(grid, &wbeta);
    let mut dphi = ScalarField::zeros(grid, r);
    let mut dp = ScalarField::zeros(grid, r);
    for s in 0..n {
        let lam = ps.lambda(site_slice(&state.phi, s));
        for a in 0..r {
            let mut v = 0.0;
            for b in 0..r {
                v += lam[(a, b)] * beta.at(s, b);
            }
            *dphi.at_mut(s, a) = v;
            let mut w = -dwbeta.at(s, a) / grid.weight[s];
            let dl_a = ps.dlambda(site_slice(&state.phi, s), a);
            for b in 0..r {
                for c in 0..r {
                    w -= dl_a[(b, c)] * state.p.at(s, b) * beta.at(s, c);
                }
            }
            *dp.at_mut(s, a) = w;
        }
    }
    (dphi, dp)
}

/// One explicit-midpoint step with the gauge input beta held fixed.
pub fn psm_step(
    grid: &LatticeGrid,
    ps: &PoissonStructure,
    state: &PsmState,
    beta: &ScalarField,
    dt: f64,
) -> Result<PsmState> {
    require_circle(grid)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("time step {dt} must be positive and finite")));
    }
    let r = ps.target_dim();
    if state.phi.comp != r || state.p.comp != r || beta.comp != r {
        return Err(Error::Config(
            "state components do not match the Poisson structure".into(),
        ));
    }
    let (k1phi, k1p) = time_derivative(grid, ps, state, beta);
    let mut mid = state.clone();
    for i in 0..mid.phi.data.len() {
        mid.phi.data[i] += 0.5 * dt * k1phi.data[i];
        mid.p.data[i] += 0.5 * dt * k1p.data[i];
    }
    let (k2phi, k2p) = time_derivative(grid, ps, &mid, beta);
    let mut next = state.clone();
    for i in 0..next.phi.data.len() {
        next.phi.data[i] += dt * k2phi.data[i];
        next.p.data[i] += dt * k2p.data[i];
    }
    if next.phi.data.iter().chain(&next.p.data).all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::Numerical("sigma-model state became non-finite".into()))
    }
}

/// The discrete model as a presymplectic system with coordinates
/// (phi, p, beta) and Omega = sum_s w_s dphi^a_s ^ dp_a_s.
pub fn as_presymplectic(grid: &LatticeGrid, ps: &PoissonStructure) -> Result<PresymplecticSystem> {
    require_circle(grid)?;
    let r = ps.target_dim();
    let n = grid.site_count();
    let dim = 3 * n * r;
    let mut omega = DMatrix::zeros(dim, dim);
    for s in 0..n {
        for a in 0..r {
            omega[(s * r + a, (n + s) * r + a)] = grid.weight[s];
            omega[((n + s) * r + a, s * r + a)] = -grid.weight[s];
        }
    }

    let unpack = move |grid: &LatticeGrid, x: &DVector<f64>| {
        let n = grid.site_count();
        let mut phi = ScalarField::zeros(grid, r);
        let mut p = ScalarField::zeros(grid, r);
        let mut beta = ScalarField::zeros(grid, r);
        for s in 0..n {
            for a in 0..r {
                *phi.at_mut(s, a) = x[s * r + a];
                *p.at_mut(s, a) = x[(n + s) * r + a];
                *beta.at_mut(s, a) = x[(2 * n + s) * r + a];
            }
        }
        (phi, p, beta)
    };

    let g1 = grid.clone();
    let g2 = grid.clone();
    let g3 = grid.clone();
    let ps1 = ps.clone();
    let ps2 = ps.clone();
    let ps3 = ps.clone();

    // Central difference matrix, for the derivative couplings.
    let mut dmat: DMatrix<f64> = DMatrix::zeros(n, n);
    let h = grid.spacing[0];
    for s in 0..n {
        dmat[(s, grid.neighbor(s, 0, 1))] += 1.0 / (2.0 * h);
        dmat[(s, grid.neighbor(s, 0, -1))] -= 1.0 / (2.0 * h);
    }
    let weights: Vec<f64> = grid.weight.clone();

    PresymplecticSystem::new(
        omega,
        Box::new(move |x| {
            let (phi, p, beta) = unpack(&g1, x);
            boundary_hamiltonian(&g1, &ps1, &phi, &p, &beta).expect("validated grid")
        }),
        Box::new(move |x| {
            let (phi, p, beta) = unpack(&g2, x);
            let n = g2.site_count();
            let mut wbeta = beta.clone();
            for s in 0..n {
                for a in 0..r {
                    *wbeta.at_mut(s, a) *= g2.weight[s];
                }
            }
            let dwbeta = central_d(&g2, &wbeta);
            let psi = constraint_psi(&g2, &ps2, &phi, &p).expect("validated grid");
            let mut g = DVector::zeros(x.len());
            for s in 0..n {
                let w = g2.weight[s];
                let lam = ps2.lambda(site_slice(&phi, s));
                for a in 0..r {
                    let dl_a = ps2.dlambda(site_slice(&phi, s), a);
                    let mut dh_phi = dwbeta.at(s, a);
                    for b in 0..r {
                        for c in 0..r {
                            dh_phi += w * dl_a[(b, c)] * p.at(s, b) * beta.at(s, c);
                        }
                    }
                    g[s * r + a] = dh_phi;
                    let mut dh_p = 0.0;
                    for c in 0..r {
                        dh_p += lam[(a, c)] * beta.at(s, c);
                    }
                    g[(n + s) * r + a] = w * dh_p;
                    g[(2 * n + s) * r + a] = w * psi.at(s, a);
                }
            }
            g
        }),
        Box::new(move |x| {
            let (phi, p, beta) = unpack(&g3, x);
            let n = g3.site_count();
            let mut hess = DMatrix::zeros(x.len(), x.len());
            let iphi = |s: usize, a: usize| s * r + a;
            let ip = |s: usize, a: usize| (n + s) * r + a;
            let ib = |s: usize, a: usize| (2 * n + s) * r + a;
            for s in 0..n {
                let w = weights[s];
                let phi_s = site_slice(&phi, s).to_vec();
                let lam = ps3.lambda(&phi_s);
                let dls: Vec<DMatrix<f64>> = (0..r).map(|c| ps3.dlambda(&phi_s, c)).collect();
                for a in 0..r {
                    for e in 0..r {
                        // phi-phi: second derivative of the Lambda term.
                        let d2 = ps3.d2lambda(&phi_s, a, e);
                        let mut v = 0.0;
                        for b in 0..r {
                            for c in 0..r {
                                v += d2[(b, c)] * p.at(s, b) * beta.at(s, c);
                            }
                        }
                        hess[(iphi(s, a), iphi(s, e))] += w * v;
                        // phi-p: d_a Lambda^{ec} beta_c.
                        let mut vp = 0.0;
                        for c in 0..r {
                            vp += dls[a][(e, c)] * beta.at(s, c);
                        }
                        hess[(iphi(s, a), ip(s, e))] += w * vp;
                        hess[(ip(s, e), iphi(s, a))] += w * vp;
                        // phi-beta, same-site part: d_a Lambda^{be} p_b.
                        let mut vb = 0.0;
                        for b in 0..r {
                            vb += dls[a][(b, e)] * p.at(s, b);
                        }
                        hess[(iphi(s, a), ib(s, e))] += w * vb;
                        hess[(ib(s, e), iphi(s, a))] += w * vb;
                        // p-beta: w Lambda^{ae}.
                        hess[(ip(s, a), ib(s, e))] += w * lam[(a, e)];
                        hess[(ib(s, e), ip(s, a))] += w * lam[(a, e)];
                    }
                }
            }
            // Derivative coupling between beta(s) and phi(s'):
            // d^2 H / d beta_a(s) d phi^a(s') = -w_s Dmat[s, s'].
            for s in 0..n {
                for s2 in 0..n {
                    let c = -weights[s] * dmat[(s, s2)];
                    if c != 0.0 {
                        for a in 0..r {
                            hess[(ib(s, a), iphi(s2, a))] += c;
                            hess[(iphi(s2, a), ib(s, a))] += c;
                        }
                    }
                }
            }
            hess
        }),
    )
}
