//! Real scalar field on the boundary slice.
//!
//! Boundary data is (phi, p) together with a vector field beta that the
//! kernel-direction constraint determines as beta = (d phi - p eta0)#.
//! With that constraint inserted the boundary Hamiltonian collapses to
//! -1/2 |d phi - p eta0|^2 - 1/2 |p|^2 + int V, and its semi-discrete time
//! derivative cancels exactly because div is the exact negative adjoint of
//! grad. Time stepping is leapfrog when eta0 vanishes (the system is then
//! separable) and the implicit midpoint rule otherwise.
//!
//! The Euclidean side discretizes the collar action with a trapezoid rule in
//! collar time. Its first variation at a discrete solution is exactly the
//! boundary flux pairing, so the generating-functional identity and the
//! symmetry of the Dirichlet-to-Neumann map are checked against finite
//! differences of the action itself, not against a continuum formula.

use nalgebra::{DMatrix, DVector};

use crate::lattice::{
    div, eta0_contract, grad, sharp, LatticeGrid, Pairing, ScalarField, VectorField,
};
use crate::presym::PresymplecticSystem;
use crate::util::pairwise_sum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec {
    Free,
    /// V(u) = m^2 u^2.
    Mass { m: f64 },
    /// V(u) = lambda u^4.
    Quartic { lambda: f64 },
}

impl PotentialSpec {
    pub fn v(&self, u: f64) -> f64 {
        match self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::Mass { m } => m * m * u * u,
            PotentialSpec::Quartic { lambda } => lambda * u.powi(4),
        }
    }

    pub fn dv(&self, u: f64) -> f64 {
        match self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::Mass { m } => 2.0 * m * m * u,
            PotentialSpec::Quartic { lambda } => 4.0 * lambda * u.powi(3),
        }
    }

    pub fn d2v(&self, u: f64) -> f64 {
        match self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::Mass { m } => 2.0 * m * m,
            PotentialSpec::Quartic { lambda } => 12.0 * lambda * u * u,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarState {
    pub phi: ScalarField,
    pub p: ScalarField,
}

impl ScalarState {
    pub fn zeros(grid: &LatticeGrid) -> Self {
        ScalarState {
            phi: ScalarField::zeros(grid, 1),
            p: ScalarField::zeros(grid, 1),
        }
    }
}

/// d/dx^2 with the metric: div(sharp(grad f)).
pub fn laplacian(grid: &LatticeGrid, f: &ScalarField) -> ScalarField {
    div(grid, &sharp(grid, &grad(grid, f)))
}

/// The kernel-direction constraint solved for beta:
/// beta^j = g^{ij} (d_i phi - eta0_i p).
pub fn solve_beta(grid: &LatticeGrid, phi: &ScalarField, p: &ScalarField) -> VectorField {
    let mut a = grad(grid, phi);
    for s in 0..grid.site_count() {
        for k in 0..grid.dim {
            *a.at_mut(s, k, 0) -= grid.eta0[s][k] * p.at(s, 0);
        }
    }
    sharp(grid, &a)
}

/// Boundary Hamiltonian with beta kept as an independent field:
/// H = -<beta, d phi> - 1/2 <p, p> + <p, eta0(beta)> + 1/2 <beta, beta> + int V.
pub fn boundary_hamiltonian(
    grid: &LatticeGrid,
    pot: &PotentialSpec,
    phi: &ScalarField,
    p: &ScalarField,
    beta: &VectorField,
) -> f64 {
    let dphi = grad(grid, phi);
    let beta_tilde = eta0_contract(grid, beta);
    let mut h = -dphi.inner(beta, grid);
    h += -0.5 * p.inner(p, grid);
    h += p.inner(&beta_tilde, grid);
    h += 0.5 * beta.inner(beta, grid);
    h + potential_integral(grid, pot, phi)
}

fn potential_integral(grid: &LatticeGrid, pot: &PotentialSpec, phi: &ScalarField) -> f64 {
    let cell: Vec<f64> = (0..grid.site_count())
        .map(|s| grid.weight[s] * pot.v(phi.at(s, 0)))
        .collect();
    pairwise_sum(&cell)
}

/// The conserved monitor: the boundary Hamiltonian with the constraint
/// inserted, H|C = -1/2 |d phi - p eta0|^2 - 1/2 |p|^2 + int V.
pub fn energy(grid: &LatticeGrid, pot: &PotentialSpec, state: &ScalarState) -> f64 {
    let mut a = grad(grid, &state.phi);
    for s in 0..grid.site_count() {
        for k in 0..grid.dim {
            *a.at_mut(s, k, 0) -= grid.eta0[s][k] * state.p.at(s, 0);
        }
    }
    -0.5 * a.inner(&a, grid) - 0.5 * state.p.inner(&state.p, grid)
        + potential_integral(grid, pot, &state.phi)
}

/// Advective CFL number dt * c_max / h_min with c_max the largest sitewise
/// wave speed sqrt(lambda_max(g^{-1})). Above 1 the leapfrog step is outside
/// its stability region for the fastest mode.
pub fn cfl_number(grid: &LatticeGrid, dt: f64) -> f64 {
    let mut c_max = 0.0f64;
    for gi in &grid.metric_inv {
        let lam = if grid.dim == 1 {
            gi[0]
        } else {
            // Largest eigenvalue of the symmetric 2x2 block.
            let tr = gi[0] + gi[3];
            let det = gi[0] * gi[3] - gi[1] * gi[2];
            0.5 * tr + (0.25 * tr * tr - det).max(0.0).sqrt()
        };
        c_max = c_max.max(lam.max(0.0).sqrt());
    }
    let h_min = grid.spacing[..grid.dim]
        .iter()
        .fold(f64::INFINITY, |a, b| a.min(*b));
    dt * c_max / h_min
}

fn time_derivative(
    grid: &LatticeGrid,
    pot: &PotentialSpec,
    state: &ScalarState,
) -> (ScalarField, ScalarField) {
    let beta = solve_beta(grid, &state.phi, &state.p);
    let beta_tilde = eta0_contract(grid, &beta);
    let div_beta = div(grid, &beta);
    let mut dphi = ScalarField::zeros(grid, 1);
    let mut dp = ScalarField::zeros(grid, 1);
    for s in 0..grid.site_count() {
        *dphi.at_mut(s, 0) = -state.p.at(s, 0) + beta_tilde.at(s, 0);
        *dp.at_mut(s, 0) = -div_beta.at(s, 0) - pot.dv(state.phi.at(s, 0));
    }
    (dphi, dp)
}

fn check_finite(state: &ScalarState) -> Result<()> {
    let ok = state.phi.data.iter().chain(&state.p.data).all(|v| v.is_finite());
    if ok {
        Ok(())
    } else {
        Err(Error::Numerical("scalar state became non-finite".into()))
    }
}

/// One structure-preserving step: leapfrog (Strang) for eta0 = 0, implicit
/// midpoint otherwise. Both are symplectic for the weighted canonical form.
pub fn boundary_step(
    grid: &LatticeGrid,
    pot: &PotentialSpec,
    state: &ScalarState,
    dt: f64,
) -> Result<ScalarState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("time step {dt} must be positive and finite")));
    }
    let separable = grid.eta0.iter().all(|e| *e == [0.0; 2]);
    let next = if separable {
        strang_step(grid, pot, state, dt)
    } else {
        midpoint_step(grid, pot, state, dt)?
    };
    check_finite(&next)?;
    Ok(next)
}

fn kick(grid: &LatticeGrid, pot: &PotentialSpec, state: &mut ScalarState, dt: f64) {
    let lap = laplacian(grid, &state.phi);
    for s in 0..grid.site_count() {
        *state.p.at_mut(s, 0) += dt * (-lap.at(s, 0) - pot.dv(state.phi.at(s, 0)));
    }
}

fn strang_step(
    grid: &LatticeGrid,
    pot: &PotentialSpec,
    state: &ScalarState,
    dt: f64,
) -> ScalarState {
    let mut st = state.clone();
    kick(grid, pot, &mut st, 0.5 * dt);
    for s in 0..grid.site_count() {
        *st.phi.at_mut(s, 0) -= dt * st.p.at(s, 0);
    }
    kick(grid, pot, &mut st, 0.5 * dt);
    st
}

fn midpoint_step(
    grid: &LatticeGrid,
    pot: &PotentialSpec,
    state: &ScalarState,
    dt: f64,
) -> Result<ScalarState> {
    let scale = state
        .phi
        .data
        .iter()
        .chain(&state.p.data)
        .fold(1.0f64, |a, b| a.max(b.abs()));
    let (d0phi, d0p) = time_derivative(grid, pot, state);
    let mut next = state.clone();
    for s in 0..grid.site_count() {
        *next.phi.at_mut(s, 0) += dt * d0phi.at(s, 0);
        *next.p.at_mut(s, 0) += dt * d0p.at(s, 0);
    }
    for _ in 0..200 {
        let mut mid = state.clone();
        for i in 0..mid.phi.data.len() {
            mid.phi.data[i] = 0.5 * (state.phi.data[i] + next.phi.data[i]);
            mid.p.data[i] = 0.5 * (state.p.data[i] + next.p.data[i]);
        }
        let (dphi, dp) = time_derivative(grid, pot, &mid);
        let mut delta = 0.0f64;
        for i in 0..next.phi.data.len() {
            let np = state.phi.data[i] + dt * dphi.data[i];
            let pp = state.p.data[i] + dt * dp.data[i];
            delta = delta.max((np - next.phi.data[i]).abs()).max((pp - next.p.data[i]).abs());
            next.phi.data[i] = np;
            next.p.data[i] = pp;
        }
        if delta <= 1e-13 * scale {
            return Ok(next);
        }
    }
    Err(Error::Numerical(
        "midpoint iteration did not converge; reduce the time step".into(),
    ))
}

/// Time slices of the Lorentzian collar evolution: the bulk equations
/// restricted to the collar are exactly the boundary step, so the record of
/// slices is the bulk solution.
pub fn lorentzian_bulk_solve(
    grid: &LatticeGrid,
    pot: &PotentialSpec,
    initial: &ScalarState,
    dt: f64,
    steps: usize,
) -> Result<Vec<ScalarState>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial.clone());
    let mut state = initial.clone();
    for _ in 0..steps {
        state = boundary_step(grid, pot, &state, dt)?;
        out.push(state.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EuclideanSolution {
    /// Slices from the inner end (tau = -epsilon) to the outer end (tau = 0).
    pub slices: Vec<ScalarField>,
    pub dtau: f64,
    pub action: f64,
    /// Conjugate flux at tau = 0: (1/w) dW / d(outer data).
    pub flux_outer: ScalarField,
    /// Conjugate flux at tau = -epsilon: -(1/w) dW / d(inner data).
    pub flux_inner: ScalarField,
}

/// Trapezoid-in-collar-time discrete action of the Euclidean collar problem.
pub fn euclidean_action(
    grid: &LatticeGrid,
    pot: &PotentialSpec,
    slices: &[ScalarField],
    dtau: f64,
) -> f64 {
    let u = |f: &ScalarField| {
        let df = grad(grid, f);
        0.5 * df.inner(&df, grid) - potential_integral(grid, pot, f)
    };
    let mut cells = Vec::with_capacity(slices.len().saturating_sub(1));
    for j in 0..slices.len() - 1 {
        let mut kin = Vec::with_capacity(grid.site_count());
        for s in 0..grid.site_count() {
            let r = (slices[j + 1].at(s, 0) - slices[j].at(s, 0)) / dtau;
            kin.push(grid.weight[s] * r * r);
        }
        let cell = 0.5 * pairwise_sum(&kin) + 0.5 * (u(&slices[j]) + u(&slices[j + 1]));
        cells.push(dtau * cell);
    }
    pairwise_sum(&cells)
}

/// Solves the discrete Euclidean equation D2_tau Phi + laplacian Phi + V'(Phi) = 0
/// on the collar with Dirichlet data at both ends. Singular interior
/// operators (a resonant mass) surface as a numerical error, not as noise.
pub fn euclidean_bulk_solve(
    grid: &LatticeGrid,
    pot: &PotentialSpec,
    inner: &ScalarField,
    outer: &ScalarField,
    epsilon: f64,
    nslices: usize,
) -> Result<EuclideanSolution> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Config(format!("collar depth {epsilon} must be positive")));
    }
    if nslices < 2 {
        return Err(Error::Config(format!(
            "need at least 2 collar intervals, got {nslices}"
        )));
    }
    let n = grid.site_count();
    if inner.data.len() != n || outer.data.len() != n {
        return Err(Error::Config("boundary data does not match the grid".into()));
    }
    let m = nslices;
    let dtau = epsilon / m as f64;
    let unknowns = (m - 1) * n;

    // Initial guess: linear interpolation between the two data slices.
    let mut slices: Vec<ScalarField> = (0..=m)
        .map(|j| {
            let t = j as f64 / m as f64;
            let mut f = ScalarField::zeros(grid, 1);
            for s in 0..n {
                *f.at_mut(s, 0) = (1.0 - t) * inner.at(s, 0) + t * outer.at(s, 0);
            }
            f
        })
        .collect();

    let lap_mat = laplacian_matrix(grid);
    let residual = |slices: &[ScalarField]| -> DVector<f64> {
        let mut r = DVector::zeros(unknowns);
        for j in 1..m {
            let lap = laplacian(grid, &slices[j]);
            for s in 0..n {
                let d2t = (slices[j + 1].at(s, 0) - 2.0 * slices[j].at(s, 0)
                    + slices[j - 1].at(s, 0))
                    / (dtau * dtau);
                r[(j - 1) * n + s] = d2t + lap.at(s, 0) + pot.dv(slices[j].at(s, 0));
            }
        }
        r
    };

    let scale = 1.0
        + inner.data.iter().chain(&outer.data).fold(0.0f64, |a, b| a.max(b.abs()));
    for _ in 0..30 {
        let r = residual(&slices);
        if r.amax() <= 1e-11 * scale {
            break;
        }
        // Jacobian: D2_tau + laplacian + diag(V'').
        let mut jac = DMatrix::zeros(unknowns, unknowns);
        for j in 1..m {
            for s in 0..n {
                let row = (j - 1) * n + s;
                jac[(row, row)] += -2.0 / (dtau * dtau) + pot.d2v(slices[j].at(s, 0));
                if j > 1 {
                    jac[(row, row - n)] += 1.0 / (dtau * dtau);
                }
                if j < m - 1 {
                    jac[(row, row + n)] += 1.0 / (dtau * dtau);
                }
                for s2 in 0..n {
                    jac[(row, (j - 1) * n + s2)] += lap_mat[(s, s2)];
                }
            }
        }
        let rhs = -&r;
        let lu = jac.clone().lu();
        let step = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("collar operator is singular".into()))?;
        let lin_res = (&jac * &step - &rhs).norm() / rhs.norm().max(1e-300);
        if lin_res > 1e-6 {
            return Err(Error::Numerical(format!(
                "collar operator is numerically singular (solve residual {lin_res:.3e})"
            )));
        }
        for j in 1..m {
            for s in 0..n {
                *slices[j].at_mut(s, 0) += step[(j - 1) * n + s];
            }
        }
    }
    let r = residual(&slices);
    if r.amax() > 1e-9 * scale {
        return Err(Error::Numerical(format!(
            "collar solve did not converge: residual {:.3e}",
            r.amax()
        )));
    }

    let action = euclidean_action(grid, pot, &slices, dtau);
    let (flux_inner, flux_outer) = boundary_fluxes(grid, pot, &slices, dtau);
    Ok(EuclideanSolution {
        slices,
        dtau,
        action,
        flux_outer,
        flux_inner,
    })
}

/// First-variation fluxes of the discrete action at the two ends. These make
/// dW(delta) = <flux_outer, delta(0)> - <flux_inner, delta(-eps)> exact for
/// the trapezoid action, by construction.
fn boundary_fluxes(
    grid: &LatticeGrid,
    pot: &PotentialSpec,
    slices: &[ScalarField],
    dtau: f64,
) -> (ScalarField, ScalarField) {
    let n = grid.site_count();
    let m = slices.len() - 1;
    let lap_out = laplacian(grid, &slices[m]);
    let lap_in = laplacian(grid, &slices[0]);
    let mut outer = ScalarField::zeros(grid, 1);
    let mut inner = ScalarField::zeros(grid, 1);
    for s in 0..n {
        *outer.at_mut(s, 0) = (slices[m].at(s, 0) - slices[m - 1].at(s, 0)) / dtau
            - 0.5 * dtau * (lap_out.at(s, 0) + pot.dv(slices[m].at(s, 0)));
        *inner.at_mut(s, 0) = (slices[1].at(s, 0) - slices[0].at(s, 0)) / dtau
            + 0.5 * dtau * (lap_in.at(s, 0) + pot.dv(slices[0].at(s, 0)));
    }
    (inner, outer)
}

/// Boundary data induced by a Euclidean collar solution: the outer slice and
/// its conjugate flux.
pub fn project_to_boundary(sol: &EuclideanSolution) -> ScalarState {
    ScalarState {
        phi: sol.slices[sol.slices.len() - 1].clone(),
        p: sol.flux_outer.clone(),
    }
}

fn laplacian_matrix(grid: &LatticeGrid) -> DMatrix<f64> {
    let n = grid.site_count();
    let mut out = DMatrix::zeros(n, n);
    for s2 in 0..n {
        let mut e = ScalarField::zeros(grid, 1);
        *e.at_mut(s2, 0) = 1.0;
        let col = laplacian(grid, &e);
        for s in 0..n {
            out[(s, s2)] = col.at(s, 0);
        }
    }
    out
}

/// Dirichlet-to-Neumann Hessian d^2 W / d(data)^2, data stacked as
/// (outer, inner), computed from finite differences of the flux map around
/// zero data. Symmetry of this matrix is the discrete self-adjointness
/// certificate; it is not built in, each column comes from its own solve.
pub fn dirichlet_to_neumann(
    grid: &LatticeGrid,
    pot: &PotentialSpec,
    epsilon: f64,
    nslices: usize,
) -> Result<DMatrix<f64>> {
    let n = grid.site_count();
    let t = 1e-3;
    let mut k = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..2 * n {
        let mut outer = ScalarField::zeros(grid, 1);
        let mut inner = ScalarField::zeros(grid, 1);
        let bump = |f: &mut ScalarField, s: usize, v: f64| *f.at_mut(s, 0) = v;
        if j < n {
            bump(&mut outer, j, t);
        } else {
            bump(&mut inner, j - n, t);
        }
        let plus = euclidean_bulk_solve(grid, pot, &inner, &outer, epsilon, nslices)?;
        if j < n {
            bump(&mut outer, j, -t);
        } else {
            bump(&mut inner, j - n, -t);
        }
        let minus = euclidean_bulk_solve(grid, pot, &inner, &outer, epsilon, nslices)?;
        for s in 0..n {
            // dW/d(outer_s) = w_s flux_outer(s); dW/d(inner_s) = -w_s flux_inner(s).
            let w = grid.weight[s];
            k[(s, j)] = w * (plus.flux_outer.at(s, 0) - minus.flux_outer.at(s, 0)) / (2.0 * t);
            k[(n + s, j)] =
                -w * (plus.flux_inner.at(s, 0) - minus.flux_inner.at(s, 0)) / (2.0 * t);
        }
    }
    Ok(k)
}

/// The boundary theory as a finite-dimensional presymplectic system with
/// coordinates (phi, p, beta) and Omega = sum_s w_s dphi_s ^ dp_s.
pub fn as_presymplectic(grid: &LatticeGrid, pot: &PotentialSpec) -> Result<PresymplecticSystem> {
    let n = grid.site_count();
    let d = grid.dim;
    let dim = 2 * n + n * d;
    let mut omega = DMatrix::zeros(dim, dim);
    for s in 0..n {
        omega[(s, n + s)] = grid.weight[s];
        omega[(n + s, s)] = -grid.weight[s];
    }

    let unpack = |grid: &LatticeGrid, x: &DVector<f64>| {
        let n = grid.site_count();
        let d = grid.dim;
        let mut phi = ScalarField::zeros(grid, 1);
        let mut p = ScalarField::zeros(grid, 1);
        let mut beta = VectorField::zeros(grid, 1);
        for s in 0..n {
            *phi.at_mut(s, 0) = x[s];
            *p.at_mut(s, 0) = x[n + s];
            for k in 0..d {
                *beta.at_mut(s, k, 0) = x[2 * n + s * d + k];
            }
        }
        (phi, p, beta)
    };

    let g_ham = grid.clone();
    let g_grad = grid.clone();
    let g_hess = grid.clone();
    let pot_h = *pot;
    let pot_g = *pot;
    let pot_hs = *pot;

    // Constant part of the Hessian; only the phi-phi block depends on x.
    let mut hess0 = DMatrix::zeros(dim, dim);
    for s in 0..n {
        hess0[(n + s, n + s)] = -grid.weight[s];
        for k in 0..d {
            let col = 2 * n + s * d + k;
            hess0[(n + s, col)] = grid.weight[s] * grid.eta0[s][k];
            hess0[(col, n + s)] = grid.weight[s] * grid.eta0[s][k];
            for k2 in 0..d {
                hess0[(col, 2 * n + s * d + k2)] = grid.weight[s] * grid.metric[s][k * 2 + k2];
            }
        }
    }
    // phi-beta block: w_s d(div beta)_s / d(beta), assembled columnwise.
    for s2 in 0..n {
        for k in 0..d {
            let mut e = VectorField::zeros(grid, 1);
            *e.at_mut(s2, k, 0) = 1.0;
            let dv = div(grid, &e);
            let col = 2 * n + s2 * d + k;
            for s in 0..n {
                hess0[(s, col)] = grid.weight[s] * dv.at(s, 0);
                hess0[(col, s)] = grid.weight[s] * dv.at(s, 0);
            }
        }
    }

    PresymplecticSystem::new(
        omega,
        Box::new(move |x| {
            let (phi, p, beta) = unpack(&g_ham, x);
            boundary_hamiltonian(&g_ham, &pot_h, &phi, &p, &beta)
        }),
        Box::new(move |x| {
            let (phi, p, beta) = unpack(&g_grad, x);
            let n = g_grad.site_count();
            let d = g_grad.dim;
            let div_beta = div(&g_grad, &beta);
            let beta_tilde = eta0_contract(&g_grad, &beta);
            let dphi = grad(&g_grad, &phi);
            let beta_flat = crate::lattice::flat(&g_grad, &beta);
            let mut g = DVector::zeros(x.len());
            for s in 0..n {
                let w = g_grad.weight[s];
                g[s] = w * (div_beta.at(s, 0) + pot_g.dv(phi.at(s, 0)));
                g[n + s] = w * (-p.at(s, 0) + beta_tilde.at(s, 0));
                for k in 0..d {
                    g[2 * n + s * d + k] = w
                        * (-dphi.at(s, k, 0)
                            + p.at(s, 0) * g_grad.eta0[s][k]
                            + beta_flat.at(s, k, 0));
                }
            }
            g
        }),
        Box::new(move |x| {
            let mut h = hess0.clone();
            for s in 0..g_hess.site_count() {
                h[(s, s)] += g_hess.weight[s] * pot_hs.d2v(x[s]);
            }
            h
        }),
    )
}

/// Semi-discrete dispersion on the flat circle: the frequency of the spatial
/// mode with wavenumber k under central differences is |sin(k h)| / h.
pub fn semidiscrete_frequency(n: usize, h: f64, mode: usize) -> f64 {
    let k = 2.0 * std::f64::consts::PI * mode as f64 / (n as f64 * h);
    (k * h).sin().abs() / h
}

/// Frequency of a standing-wave mode as the leapfrog integrator sees it,
/// measured from the one-step cosine of the mode projection.
pub fn measured_frequency(
    grid: &LatticeGrid,
    pot: &PotentialSpec,
    mode: usize,
    dt: f64,
) -> Result<f64> {
    let k = 2.0 * std::f64::consts::PI * mode as f64
        / (grid.shape[0] as f64 * grid.spacing[0]);
    let wave = ScalarField::from_fn(grid, 1, |x, _| (k * x[0]).sin());
    let state = ScalarState {
        phi: wave.clone(),
        p: ScalarField::zeros(grid, 1),
    };
    let next = boundary_step(grid, pot, &state, dt)?;
    let c = next.phi.inner(&wave, grid) / wave.inner(&wave, grid);
    if !(-1.0..=1.0).contains(&c) {
        return Err(Error::Numerical(format!(
            "mode projection {c} outside [-1, 1]; the step is unstable"
        )));
    }
    Ok(c.acos() / dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_grid;
    use crate::presym::{check_regularity, pca_run, PcaOptions};
    use crate::util::{observed_order, RandomStream};

    fn four_site_state(_grid: &LatticeGrid) -> ScalarState {
        ScalarState {
            phi: ScalarField {
                comp: 1,
                data: vec![0.0, 1.0, 0.0, -1.0],
            },
            p: ScalarField {
                comp: 1,
                data: vec![1.0, 1.0, 1.0, 1.0],
            },
        }
    }

    #[test]
    fn hamiltonian_hand_value_on_four_sites() {
        // Flat circle, h = 1: beta = grad phi = (1, 0, -1, 0),
        // H = -<beta, dphi> + |beta|^2/2 - |p|^2/2 = -2 + 1 - 2 = -3.
        let grid = LatticeGrid::flat_interval(4, 1.0).unwrap();
        let st = four_site_state(&grid);
        let beta = solve_beta(&grid, &st.phi, &st.p);
        let expect = [1.0, 0.0, -1.0, 0.0];
        for s in 0..4 {
            assert!((beta.at(s, 0, 0) - expect[s]).abs() < 1e-15);
        }
        let h = boundary_hamiltonian(&grid, &PotentialSpec::Free, &st.phi, &st.p, &beta);
        assert!((h + 3.0).abs() < 1e-14);
        assert!((energy(&grid, &PotentialSpec::Free, &st) + 3.0).abs() < 1e-14);
    }

    #[test]
    fn constraint_minimizes_the_beta_dependence() {
        // H as a function of beta is a positive quadratic centered at the
        // constraint solution, so any displacement raises it.
        let grid = build_grid(
            &[5],
            &[0.7],
            |x| [[1.3 + 0.2 * x[0].sin(), 0.0], [0.0, 1.0]],
            |x| [0.3 * x[0].cos(), 0.0],
        )
        .unwrap();
        let mut rng = RandomStream::new(3, "beta-min");
        let mut phi = ScalarField::zeros(&grid, 1);
        let mut p = ScalarField::zeros(&grid, 1);
        rng.fill_symmetric(&mut phi.data);
        rng.fill_symmetric(&mut p.data);
        let pot = PotentialSpec::Mass { m: 0.7 };
        let beta = solve_beta(&grid, &phi, &p);
        let h0 = boundary_hamiltonian(&grid, &pot, &phi, &p, &beta);
        let st = ScalarState { phi: phi.clone(), p: p.clone() };
        assert!((h0 - energy(&grid, &pot, &st)).abs() < 1e-12);
        for trial in 0..8 {
            let mut beta2 = beta.clone();
            let mut rng2 = RandomStream::new(trial, "beta-min-dir");
            for v in beta2.data.iter_mut() {
                *v += 0.3 * rng2.next_symmetric();
            }
            let h2 = boundary_hamiltonian(&grid, &pot, &phi, &p, &beta2);
            assert!(h2 > h0);
        }
    }

    #[test]
    fn leapfrog_reproduces_the_exact_discrete_standing_wave() {
        // For the free field the leapfrog orbit of a single mode is known in
        // closed form: phi_n = cos(n Omega dt) with
        // Omega = (2/dt) asin(omega dt / 2), omega = sin(k h)/h.
        let n = 16;
        let h = 0.5;
        let grid = LatticeGrid::flat_interval(n, h).unwrap();
        let mode = 2;
        let k = 2.0 * std::f64::consts::PI * mode as f64 / (n as f64 * h);
        let omega = semidiscrete_frequency(n, h, mode);
        let dt = 0.02;
        let big_omega = (2.0 / dt) * (0.5 * omega * dt).asin();
        let wave = ScalarField::from_fn(&grid, 1, |x, _| (k * x[0]).sin());
        let mut st = ScalarState {
            phi: wave.clone(),
            p: ScalarField::zeros(&grid, 1),
        };
        let steps = 50;
        for _ in 0..steps {
            st = boundary_step(&grid, &PotentialSpec::Free, &st, dt).unwrap();
        }
        let c = (steps as f64 * big_omega * dt).cos();
        for s in 0..n {
            assert!((st.phi.at(s, 0) - c * wave.at(s, 0)).abs() < 1e-10);
        }
    }

    #[test]
    fn measured_dispersion_converges_to_the_semidiscrete_symbol() {
        let n = 16;
        let h = 0.5;
        let grid = LatticeGrid::flat_interval(n, h).unwrap();
        let omega = semidiscrete_frequency(n, h, 3);
        let errs: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&dt| {
                (measured_frequency(&grid, &PotentialSpec::Free, 3, dt).unwrap() - omega).abs()
            })
            .collect();
        assert!(errs[2] < 1e-4);
        let order = observed_order(&errs);
        assert!(order > 1.9 && order < 2.2, "order {order}, errors {errs:?}");
    }

    #[test]
    fn energy_oscillates_at_second_order_without_drift() {
        let grid = LatticeGrid::flat_interval(12, 0.5).unwrap();
        let pot = PotentialSpec::Quartic { lambda: 0.3 };
        let mut rng = RandomStream::new(5, "energy");
        let mut st = ScalarState::zeros(&grid);
        rng.fill_symmetric(&mut st.phi.data);
        rng.fill_symmetric(&mut st.p.data);
        for v in st.phi.data.iter_mut().chain(st.p.data.iter_mut()) {
            *v *= 0.2;
        }
        let e0 = energy(&grid, &pot, &st);
        let dt = 0.005;
        let mut max_dev = 0.0f64;
        let mut st_run = st.clone();
        for _ in 0..400 {
            st_run = boundary_step(&grid, &pot, &st_run, dt).unwrap();
            max_dev = max_dev.max((energy(&grid, &pot, &st_run) - e0).abs());
        }
        let end_dev = (energy(&grid, &pot, &st_run) - e0).abs();
        assert!(max_dev < 5e-6, "max deviation {max_dev}");
        // No secular drift: the deviation at the end is no worse than the
        // oscillation seen along the way, and halving dt cuts it ~4x.
        let mut st_half = st.clone();
        let mut max_half = 0.0f64;
        for _ in 0..800 {
            st_half = boundary_step(&grid, &pot, &st_half, dt / 2.0).unwrap();
            max_half = max_half.max((energy(&grid, &pot, &st_half) - e0).abs());
        }
        assert!(max_half < 0.35 * max_dev, "dt {max_dev:.3e} dt/2 {max_half:.3e}");
        assert!(end_dev <= max_dev + 1e-15);
    }

    #[test]
    fn midpoint_branch_conserves_quadratic_energy_exactly() {
        // Nonzero shift: not separable, so this exercises the midpoint path.
        let grid = build_grid(
            &[10],
            &[0.4],
            |_| [[1.0, 0.0], [0.0, 1.0]],
            |x| [0.3 + 0.1 * x[0].sin(), 0.0],
        )
        .unwrap();
        let pot = PotentialSpec::Mass { m: 0.5 };
        let mut rng = RandomStream::new(9, "midpoint");
        let mut st = ScalarState::zeros(&grid);
        rng.fill_symmetric(&mut st.phi.data);
        rng.fill_symmetric(&mut st.p.data);
        let e0 = energy(&grid, &pot, &st);
        for _ in 0..100 {
            st = boundary_step(&grid, &pot, &st, 0.02).unwrap();
            assert!((energy(&grid, &pot, &st) - e0).abs() < 1e-10);
        }
    }

    #[test]
    fn step_rejects_bad_dt_and_catches_blowup() {
        let grid = LatticeGrid::flat_interval(8, 0.25).unwrap();
        let st = ScalarState::zeros(&grid);
        assert!(boundary_step(&grid, &PotentialSpec::Free, &st, 0.0).is_err());
        assert!(boundary_step(&grid, &PotentialSpec::Free, &st, f64::NAN).is_err());
        assert!(cfl_number(&grid, 0.5) > 1.0);
        assert!(cfl_number(&grid, 0.1) < 1.0);
    }

    #[test]
    fn presymplectic_adapter_matches_closed_forms() {
        let grid = build_grid(
            &[6],
            &[0.5],
            |x| [[1.0 + 0.2 * x[0].cos(), 0.0], [0.0, 1.0]],
            |x| [0.2 * x[0].sin(), 0.0],
        )
        .unwrap();
        let sys = as_presymplectic(&grid, &PotentialSpec::Quartic { lambda: 0.4 }).unwrap();
        let mut rng = RandomStream::new(21, "scalar-adapter");
        let mut x = DVector::zeros(sys.dim);
        for i in 0..sys.dim {
            x[i] = rng.next_symmetric();
        }
        assert!(sys.derivative_self_test(&x, 7) < 1e-7);
    }

    #[test]
    fn constraint_chain_of_the_discrete_scalar_theory() {
        let n = 6;
        let grid = LatticeGrid::flat_interval(n, 0.5).unwrap();
        let pot = PotentialSpec::Mass { m: 0.8 };
        let sys = as_presymplectic(&grid, &pot).unwrap();
        let mut rng = RandomStream::new(2, "scalar-pca");
        let mut x = DVector::zeros(sys.dim);
        for i in 0..sys.dim {
            x[i] = 0.5 * rng.next_symmetric();
        }
        let report = pca_run(&sys, &x, &PcaOptions::default()).unwrap();
        assert!(report.stabilized);
        assert_eq!(report.steps.len(), 2);
        assert_eq!(report.steps[0].constraints_added, n);
        assert_eq!(report.final_dim, 2 * n);
        assert_eq!(report.gauge_dim, 0);
        assert_eq!(report.reduced_dim, 2 * n);
        assert!(report.dynamics_residual < 1e-8);
        let reg = check_regularity(&sys, &x, 1e-9).unwrap();
        assert!(reg.regular);
        assert_eq!(reg.kernel_dim, n);
        assert_eq!(reg.block_rank, n);
    }

    #[test]
    fn euclidean_solver_reproduces_the_discrete_mode_solution() {
        // cosh(wt tau) sin(k x) solves the discrete equation when wt matches
        // 2(cosh(wt dtau) - 1)/dtau^2 = omega^2; build data from it and check
        // the interior.
        let n = 8;
        let h = 0.5;
        let grid = LatticeGrid::flat_interval(n, h).unwrap();
        let mode = 1;
        let k = 2.0 * std::f64::consts::PI * mode as f64 / (n as f64 * h);
        let omega = semidiscrete_frequency(n, h, mode);
        let eps = 0.6;
        let m = 6;
        let dtau = eps / m as f64;
        // Solve 2(cosh(x dtau)-1)/dtau^2 = omega^2 for x.
        let wt = (1.0 + 0.5 * omega * omega * dtau * dtau).acosh() / dtau;
        let slice = |tau: f64| {
            ScalarField::from_fn(&grid, 1, |x, _| (wt * (tau + eps)).cosh() * (k * x[0]).sin())
        };
        let sol = euclidean_bulk_solve(
            &grid,
            &PotentialSpec::Free,
            &slice(-eps),
            &slice(0.0),
            eps,
            m,
        )
        .unwrap();
        for j in 0..=m {
            let tau = -eps + j as f64 * dtau;
            let expect = slice(tau);
            for s in 0..n {
                assert!(
                    (sol.slices[j].at(s, 0) - expect.at(s, 0)).abs() < 1e-9,
                    "slice {j} site {s}"
                );
            }
        }
    }

    #[test]
    fn resonant_mass_is_a_numerical_error_not_garbage() {
        let n = 6;
        let grid = LatticeGrid::flat_interval(n, 0.5).unwrap();
        let eps = 0.6;
        let m = 5;
        let dtau = eps / m as f64;
        // Lowest Dirichlet time-mode eigenvalue of -D2_tau hits 2 m^2.
        let lam = 2.0 * (1.0 - (std::f64::consts::PI / m as f64).cos()) / (dtau * dtau);
        let mass = (lam / 2.0).sqrt();
        let outer = ScalarField::from_fn(&grid, 1, |x, _| 0.3 * (x[0]).sin());
        let inner = ScalarField::zeros(&grid, 1);
        let err = euclidean_bulk_solve(
            &grid,
            &PotentialSpec::Mass { m: mass },
            &inner,
            &outer,
            eps,
            m,
        );
        match err {
            Err(crate::Error::Numerical(_)) => {}
            other => panic!("expected a numerical error, got {other:?}"),
        }
        // Off resonance the same problem solves fine.
        assert!(euclidean_bulk_solve(
            &grid,
            &PotentialSpec::Mass { m: mass * 1.07 },
            &inner,
            &outer,
            eps,
            m,
        )
        .is_ok());
    }

    #[test]
    fn euclidean_solver_validates_input() {
        let grid = LatticeGrid::flat_interval(4, 0.5).unwrap();
        let z = ScalarField::zeros(&grid, 1);
        assert!(euclidean_bulk_solve(&grid, &PotentialSpec::Free, &z, &z, -1.0, 4).is_err());
        assert!(euclidean_bulk_solve(&grid, &PotentialSpec::Free, &z, &z, 0.5, 1).is_err());
    }

    proptest::proptest! {
        #[test]
        fn hamiltonian_on_constraint_equals_energy(seed in 0u64..24) {
            let grid = build_grid(
                &[5],
                &[0.6],
                |x| [[1.2 + 0.3 * x[0].sin(), 0.0], [0.0, 1.0]],
                |x| [0.25 * x[0].cos(), 0.0],
            )
            .unwrap();
            let mut rng = RandomStream::new(seed, "h-equals-energy");
            let mut st = ScalarState::zeros(&grid);
            rng.fill_symmetric(&mut st.phi.data);
            rng.fill_symmetric(&mut st.p.data);
            let pot = PotentialSpec::Quartic { lambda: 0.2 };
            let beta = solve_beta(&grid, &st.phi, &st.p);
            let h = boundary_hamiltonian(&grid, &pot, &st.phi, &st.p, &beta);
            let e = energy(&grid, &pot, &st);
            proptest::prop_assert!((h - e).abs() < 1e-12 * (1.0 + h.abs()));
        }
    }
}
