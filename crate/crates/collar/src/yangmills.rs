//! Yang-Mills boundary fields on a periodic spatial lattice.
//!
//! Fields are algebra-valued site fields differentiated with continuum-style
//! finite differences, not Wilson links, so gauge covariance of anything
//! involving a derivative holds only to O(h^2) and tests are written against
//! that rate. The spatial metric is required to be the identity; all spatial
//! contractions are plain sums.
//!
//! Sign conventions, fixed once here. The two-form pairing contracts both
//! index orders, so in two dimensions inner_two_form carries a factor 2 per
//! site. The scalar-level codifferential `covariant_div` is the negative
//! adjoint of `covariant_d`. The two-form-level codifferential `pair_codiv`
//! is the positive adjoint of the curvature linearization; that is the sign
//! under which the abelian scheme is a stable discrete Maxwell system and
//! the semi-discrete flow conserves the magnetic energy monitor exactly at
//! a0 = 0. The evolution eliminates the magnetic momentum as beta = -2 F_a;
//! the extended Hamiltonian keeps its own beta-gradient F_a + beta, and the
//! mismatch between the two normalizations is deliberate, not a bug.

use crate::algebra::{su2_adjoint, su2_coefficients, su2_exp, LieAlgebra};
use crate::lattice::{
    div_scheme, grad_scheme, CovectorField, DiffScheme, LatticeGrid, ScalarField, VectorField,
};
use crate::presym::PresymplecticSystem;
use crate::util::{conjugate_gradient, pairwise_sum};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Gauge boundary data: spatial connection a, temporal component a0 (a gauge
/// datum, not a dynamical variable), electric momenta p, magnetic momenta
/// beta. In two spatial dimensions the single independent two-form component
/// is stored per site; on a one-dimensional grid the two-form sector is
/// identically zero but keeps its shape.
#[derive(Debug, Clone)]
pub struct YmState {
    pub a: CovectorField,
    pub a0: ScalarField,
    pub p: CovectorField,
    pub beta: ScalarField,
    pub time: f64,
}

impl YmState {
    pub fn zeros(grid: &LatticeGrid, alg: &LieAlgebra) -> Self {
        YmState {
            a: CovectorField::zeros(grid, alg.dim),
            a0: ScalarField::zeros(grid, alg.dim),
            p: CovectorField::zeros(grid, alg.dim),
            beta: ScalarField::zeros(grid, alg.dim),
            time: 0.0,
        }
    }

    pub fn validate(&self, grid: &LatticeGrid, alg: &LieAlgebra) -> Result<()> {
        let n = grid.site_count();
        let g = alg.dim;
        let one_form = n * grid.dim * g;
        if self.a.data.len() != one_form
            || self.p.data.len() != one_form
            || self.a.comp != g
            || self.p.comp != g
        {
            return Err(Error::Config(format!(
                "connection/momentum shape mismatch: expected {} entries with {} components",
                one_form, g
            )));
        }
        if self.a0.data.len() != n * g || self.beta.data.len() != n * g {
            return Err(Error::Config(
                "a0/beta shape mismatch with grid and algebra".into(),
            ));
        }
        let finite = self
            .a
            .data
            .iter()
            .chain(&self.a0.data)
            .chain(&self.p.data)
            .chain(&self.beta.data)
            .all(|v| v.is_finite());
        if !finite || !self.time.is_finite() {
            return Err(Error::Numerical("non-finite gauge state entry".into()));
        }
        Ok(())
    }

    /// Whether the magnetic momentum satisfies its solved constraint form
    /// beta = -2 F_a within an absolute tolerance on the sup norm.
    pub fn is_on_shell_beta(&self, grid: &LatticeGrid, alg: &LieAlgebra) -> bool {
        let f = curvature(grid, alg, &self.a);
        let scale = 1.0 + f.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.beta
            .data
            .iter()
            .zip(&f.data)
            .all(|(b, fv)| (b + 2.0 * fv).abs() <= 1e-10 * scale)
    }
}

fn require_flat(grid: &LatticeGrid) -> Result<()> {
    if !grid.is_flat_uniform() {
        return Err(Error::Config(
            "gauge fields need an identity spatial metric with no shift".into(),
        ));
    }
    Ok(())
}

fn site_slice(f: &ScalarField, s: usize) -> &[f64] {
    &f.data[s * f.comp..(s + 1) * f.comp]
}

fn dir_slice(f: &CovectorField, s: usize, k: usize) -> &[f64] {
    let base = (s * f.dim + k) * f.comp;
    &f.data[base..base + f.comp]
}

fn as_vector(v: &CovectorField) -> VectorField {
    VectorField {
        dim: v.dim,
        comp: v.comp,
        data: v.data.clone(),
    }
}

/// Site-wise weighted Killing pairing of algebra scalar fields.
pub fn inner_scalar(grid: &LatticeGrid, alg: &LieAlgebra, x: &ScalarField, y: &ScalarField) -> f64 {
    let terms: Vec<f64> = (0..grid.site_count())
        .map(|s| grid.weight[s] * alg.killing(site_slice(x, s), site_slice(y, s)))
        .collect();
    pairwise_sum(&terms)
}

pub fn inner_one_form(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    u: &CovectorField,
    v: &CovectorField,
) -> f64 {
    let terms: Vec<f64> = (0..grid.site_count())
        .map(|s| {
            let mut acc = 0.0;
            for k in 0..grid.dim {
                acc += alg.killing(dir_slice(u, s, k), dir_slice(v, s, k));
            }
            grid.weight[s] * acc
        })
        .collect();
    pairwise_sum(&terms)
}

/// Full two-form contraction: both index orders count, so each stored
/// component enters twice. Zero on a one-dimensional grid.
pub fn inner_two_form(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    x: &ScalarField,
    y: &ScalarField,
) -> f64 {
    if grid.dim < 2 {
        return 0.0;
    }
    2.0 * inner_scalar(grid, alg, x, y)
}

/// Covariant differential (d_a xi)_k = D_k xi + [a_k, xi].
pub fn covariant_d(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    a: &CovectorField,
    xi: &ScalarField,
) -> CovectorField {
    covariant_d_scheme(grid, alg, a, xi, DiffScheme::Central)
}

pub fn covariant_d_scheme(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    a: &CovectorField,
    xi: &ScalarField,
    scheme: DiffScheme,
) -> CovectorField {
    let mut out = grad_scheme(grid, xi, scheme);
    if alg.is_abelian() {
        return out;
    }
    let g = alg.dim;
    let mut br = vec![0.0; g];
    for s in 0..grid.site_count() {
        for k in 0..grid.dim {
            alg.bracket_into(dir_slice(a, s, k), site_slice(xi, s), &mut br);
            for c in 0..g {
                *out.at_mut(s, k, c) += br[c];
            }
        }
    }
    out
}

/// Covariant codifferential on one-forms, the exact negative adjoint of
/// `covariant_d`: <d_a xi, v> = -<xi, covariant_div v> up to summation order.
pub fn covariant_div(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    a: &CovectorField,
    v: &CovectorField,
) -> ScalarField {
    covariant_div_scheme(grid, alg, a, v, DiffScheme::Central)
}

pub fn covariant_div_scheme(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    a: &CovectorField,
    v: &CovectorField,
    scheme: DiffScheme,
) -> ScalarField {
    let mut out = div_scheme(grid, &as_vector(v), scheme);
    if alg.is_abelian() {
        return out;
    }
    let g = alg.dim;
    let mut br = vec![0.0; g];
    for s in 0..grid.site_count() {
        for k in 0..grid.dim {
            // kappa([x,y],z) = -kappa(y,[x,z]) turns the site commutator of
            // the differential into the same-signed commutator here.
            alg.bracket_into(dir_slice(a, s, k), dir_slice(v, s, k), &mut br);
            for c in 0..g {
                *out.at_mut(s, c) += br[c];
            }
        }
    }
    out
}

/// Spatial curvature F_xy = (D_x a_y - D_y a_x + [a_x, a_y]) / 2, the single
/// independent component in two dimensions. Identically zero on a line.
pub fn curvature(grid: &LatticeGrid, alg: &LieAlgebra, a: &CovectorField) -> ScalarField {
    curvature_scheme(grid, alg, a, DiffScheme::Central)
}

fn diff_component(
    grid: &LatticeGrid,
    a: &CovectorField,
    s: usize,
    axis: usize,
    comp_dir: usize,
    c: usize,
    scheme: DiffScheme,
) -> f64 {
    let h = grid.spacing[axis];
    match scheme {
        DiffScheme::Central => {
            let sp = grid.neighbor(s, axis, 1);
            let sm = grid.neighbor(s, axis, -1);
            (a.at(sp, comp_dir, c) - a.at(sm, comp_dir, c)) / (2.0 * h)
        }
        DiffScheme::Forward => {
            let sp = grid.neighbor(s, axis, 1);
            (a.at(sp, comp_dir, c) - a.at(s, comp_dir, c)) / h
        }
    }
}

pub fn curvature_scheme(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    a: &CovectorField,
    scheme: DiffScheme,
) -> ScalarField {
    let g = alg.dim;
    let mut out = ScalarField::zeros(grid, g);
    if grid.dim < 2 {
        return out;
    }
    let mut br = vec![0.0; g];
    for s in 0..grid.site_count() {
        alg.bracket_into(dir_slice(a, s, 0), dir_slice(a, s, 1), &mut br);
        for c in 0..g {
            let dxy = diff_component(grid, a, s, 0, 1, c, scheme);
            let dyx = diff_component(grid, a, s, 1, 0, c, scheme);
            *out.at_mut(s, c) = 0.5 * (dxy - dyx + br[c]);
        }
    }
    out
}

/// Linearization of the curvature at a in the direction v.
pub fn curvature_linearized(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    a: &CovectorField,
    v: &CovectorField,
    scheme: DiffScheme,
) -> ScalarField {
    let g = alg.dim;
    let mut out = ScalarField::zeros(grid, g);
    if grid.dim < 2 {
        return out;
    }
    let mut br1 = vec![0.0; g];
    let mut br2 = vec![0.0; g];
    for s in 0..grid.site_count() {
        alg.bracket_into(dir_slice(a, s, 0), dir_slice(v, s, 1), &mut br1);
        alg.bracket_into(dir_slice(v, s, 0), dir_slice(a, s, 1), &mut br2);
        for c in 0..g {
            let dxy = diff_component(grid, v, s, 0, 1, c, scheme);
            let dyx = diff_component(grid, v, s, 1, 0, c, scheme);
            *out.at_mut(s, c) = 0.5 * (dxy - dyx + br1[c] + br2[c]);
        }
    }
    out
}

/// Codifferential on two-forms: the positive adjoint of the curvature
/// linearization under the full two-form pairing,
/// <curvature_linearized(v), B>_2 = <v, pair_codiv(B)>_1 exactly.
pub fn pair_codiv(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    a: &CovectorField,
    b: &ScalarField,
) -> CovectorField {
    pair_codiv_scheme(grid, alg, a, b, DiffScheme::Central)
}

pub fn pair_codiv_scheme(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    a: &CovectorField,
    b: &ScalarField,
    scheme: DiffScheme,
) -> CovectorField {
    let g = alg.dim;
    let mut out = CovectorField::zeros(grid, g);
    if grid.dim < 2 {
        return out;
    }
    let abelian = alg.is_abelian();
    let mut br = vec![0.0; g];
    for s in 0..grid.site_count() {
        let w = grid.weight[s];
        for (slot, axis, sign) in [(1usize, 0usize, -1.0f64), (0, 1, 1.0)] {
            let h = grid.spacing[axis];
            for c in 0..g {
                // Adjoint of the scheme derivative: central stays central,
                // forward turns into the backward difference.
                let d = match scheme {
                    DiffScheme::Central => {
                        let sp = grid.neighbor(s, axis, 1);
                        let sm = grid.neighbor(s, axis, -1);
                        (grid.weight[sp] * b.at(sp, c) - grid.weight[sm] * b.at(sm, c))
                            / (2.0 * h)
                    }
                    DiffScheme::Forward => {
                        let sm = grid.neighbor(s, axis, -1);
                        (grid.weight[s] * b.at(s, c) - grid.weight[sm] * b.at(sm, c)) / h
                    }
                };
                *out.at_mut(s, slot, c) = sign * d / w;
            }
            if !abelian {
                alg.bracket_into(dir_slice(a, s, axis), site_slice(b, s), &mut br);
                for c in 0..g {
                    *out.at_mut(s, slot, c) += sign * br[c];
                }
            }
        }
    }
    out
}

/// Extended boundary Hamiltonian
/// H = <p, d_a a0> + <p,p>/2 + <beta, F_a + beta/2>_2.
pub fn boundary_hamiltonian(grid: &LatticeGrid, alg: &LieAlgebra, state: &YmState) -> Result<f64> {
    require_flat(grid)?;
    state.validate(grid, alg)?;
    let da0 = covariant_d(grid, alg, &state.a, &state.a0);
    let f = curvature(grid, alg, &state.a);
    let mut coupling = f.clone();
    for (t, b) in coupling.data.iter_mut().zip(&state.beta.data) {
        *t += 0.5 * b;
    }
    Ok(inner_one_form(grid, alg, &state.p, &da0)
        + 0.5 * inner_one_form(grid, alg, &state.p, &state.p)
        + inner_two_form(grid, alg, &state.beta, &coupling))
}

/// Conserved energy monitor E = <p,p>/2 + <F_a, F_a>_2. The semi-discrete
/// flow with a0 = 0 conserves this exactly; time stepping adds O(dt^2).
pub fn ym_energy(grid: &LatticeGrid, alg: &LieAlgebra, state: &YmState) -> Result<f64> {
    require_flat(grid)?;
    state.validate(grid, alg)?;
    let f = curvature(grid, alg, &state.a);
    Ok(0.5 * inner_one_form(grid, alg, &state.p, &state.p) + inner_two_form(grid, alg, &f, &f))
}

/// Ratio dt / min spacing; above 1 the explicit scheme is outside its
/// comfort zone and callers should warn.
pub fn cfl_margin(grid: &LatticeGrid, dt: f64) -> f64 {
    let hmin = grid.spacing[..grid.dim]
        .iter()
        .fold(f64::INFINITY, |m, h| m.min(*h));
    dt / hmin
}

fn a_rate(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    a: &CovectorField,
    a0: &ScalarField,
    p: &CovectorField,
) -> CovectorField {
    let mut rate = covariant_d(grid, alg, a, a0);
    for (r, pv) in rate.data.iter_mut().zip(&p.data) {
        *r += pv;
    }
    rate
}

fn p_rate(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    a: &CovectorField,
    a0: &ScalarField,
    p: &CovectorField,
) -> CovectorField {
    // beta is eliminated through its solved constraint beta = -2 F_a.
    let mut beta = curvature(grid, alg, a);
    for b in beta.data.iter_mut() {
        *b *= -2.0;
    }
    let mut rate = pair_codiv(grid, alg, a, &beta);
    if !alg.is_abelian() {
        let g = alg.dim;
        let mut br = vec![0.0; g];
        for s in 0..grid.site_count() {
            for k in 0..grid.dim {
                alg.bracket_into(dir_slice(p, s, k), site_slice(a0, s), &mut br);
                for c in 0..g {
                    *rate.at_mut(s, k, c) += br[c];
                }
            }
        }
    }
    rate
}

fn midpoint_axpy(field: &CovectorField, rate: &CovectorField, dt: f64) -> CovectorField {
    let mut out = field.clone();
    for (o, r) in out.data.iter_mut().zip(&rate.data) {
        *o += dt * r;
    }
    out
}

/// One Strang step of the constrained evolution a' = p + d_a a0,
/// p' = pair_codiv(beta) + [p, a0] with beta := -2 F_a recomputed at every
/// stage: a half step, p full step, a half step, each substep an explicit
/// midpoint rule. With a0 = 0 this is the exact drift-kick-drift leapfrog.
pub fn ym_step(grid: &LatticeGrid, alg: &LieAlgebra, state: &YmState, dt: f64) -> Result<YmState> {
    require_flat(grid)?;
    state.validate(grid, alg)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!("step size must be positive, got {dt}")));
    }
    let half_drift = |a: &CovectorField, p: &CovectorField| {
        let k1 = a_rate(grid, alg, a, &state.a0, p);
        let mid = midpoint_axpy(a, &k1, 0.25 * dt);
        let k2 = a_rate(grid, alg, &mid, &state.a0, p);
        midpoint_axpy(a, &k2, 0.5 * dt)
    };
    let a1 = half_drift(&state.a, &state.p);
    let k1 = p_rate(grid, alg, &a1, &state.a0, &state.p);
    let pmid = midpoint_axpy(&state.p, &k1, 0.5 * dt);
    let k2 = p_rate(grid, alg, &a1, &state.a0, &pmid);
    let p1 = midpoint_axpy(&state.p, &k2, dt);
    let a2 = half_drift(&a1, &p1);
    let mut beta = curvature(grid, alg, &a2);
    for b in beta.data.iter_mut() {
        *b *= -2.0;
    }
    let out = YmState {
        a: a2,
        a0: state.a0.clone(),
        p: p1,
        beta,
        time: state.time + dt,
    };
    out.validate(grid, alg)?;
    Ok(out)
}

/// Gauss law field d*_a p and its L2 norm; this is the moment map of the
/// gauge action evaluated at (a, p).
pub fn gauss_residual(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    state: &YmState,
) -> Result<(ScalarField, f64)> {
    require_flat(grid)?;
    state.validate(grid, alg)?;
    let g = covariant_div(grid, alg, &state.a, &state.p);
    let norm = inner_scalar(grid, alg, &g, &g).max(0.0).sqrt();
    Ok((g, norm))
}

/// Projects p onto the Gauss constraint surface by one covariant Poisson
/// solve: p + d_a xi with (-d*_a d_a) xi = d*_a p via conjugate gradients.
pub fn gauss_project(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    a: &CovectorField,
    p: &CovectorField,
) -> Result<CovectorField> {
    require_flat(grid)?;
    let g = covariant_div(grid, alg, a, p);
    let apply = |xi_flat: &[f64]| {
        let xi = ScalarField {
            comp: alg.dim,
            data: xi_flat.to_vec(),
        };
        let lap = covariant_div(grid, alg, a, &covariant_d(grid, alg, a, &xi));
        lap.data.iter().map(|v| -v).collect()
    };
    let (xi_flat, res) = conjugate_gradient(apply, &g.data, 1e-13, 40 * g.data.len());
    if !res.is_finite() {
        return Err(Error::Numerical(format!(
            "gauss projection solve diverged: residual {res:.3e}"
        )));
    }
    let xi = ScalarField {
        comp: alg.dim,
        data: xi_flat,
    };
    let correction = covariant_d(grid, alg, a, &xi);
    let mut out = p.clone();
    for (o, c) in out.data.iter_mut().zip(&correction.data) {
        *o += c;
    }
    Ok(out)
}

/// Gauge charge Q(xi) = <p, d_a xi>; by exact adjointness this equals
/// -<d*_a p, xi>, so it vanishes identically on the constraint surface.
pub fn noether_charge(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    state: &YmState,
    xi: &ScalarField,
) -> Result<f64> {
    require_flat(grid)?;
    state.validate(grid, alg)?;
    let dxi = covariant_d(grid, alg, &state.a, xi);
    Ok(inner_one_form(grid, alg, &state.p, &dxi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeMode {
    Infinitesimal,
    Finite,
}

/// Gauge action on the state. Infinitesimal: a += d_a xi and adjoint rotation
/// of the other fields. Finite: exact pointwise conjugation by exp(xi) with
/// the inhomogeneous term g^{-1} dg discretized centrally, hence O(h^2)
/// covariance; the abelian case is the exact shift a += grad xi.
pub fn gauge_transform(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    state: &YmState,
    xi: &ScalarField,
    mode: GaugeMode,
) -> Result<YmState> {
    require_flat(grid)?;
    state.validate(grid, alg)?;
    if xi.comp != alg.dim || xi.data.len() != grid.site_count() * alg.dim {
        return Err(Error::Config("gauge parameter shape mismatch".into()));
    }
    let mut out = state.clone();
    match mode {
        GaugeMode::Infinitesimal => {
            let da = covariant_d(grid, alg, &state.a, xi);
            for (o, d) in out.a.data.iter_mut().zip(&da.data) {
                *o += d;
            }
            if !alg.is_abelian() {
                let g = alg.dim;
                let mut br = vec![0.0; g];
                for s in 0..grid.site_count() {
                    let x = site_slice(xi, s).to_vec();
                    for k in 0..grid.dim {
                        alg.bracket_into(dir_slice(&state.p, s, k), &x, &mut br);
                        for c in 0..g {
                            *out.p.at_mut(s, k, c) += br[c];
                        }
                    }
                    alg.bracket_into(site_slice(&state.beta, s), &x, &mut br);
                    for c in 0..g {
                        *out.beta.at_mut(s, c) += br[c];
                    }
                    alg.bracket_into(site_slice(&state.a0, s), &x, &mut br);
                    for c in 0..g {
                        *out.a0.at_mut(s, c) += br[c];
                    }
                }
            }
        }
        GaugeMode::Finite => {
            if alg.is_abelian() {
                let shift = grad_scheme(grid, xi, DiffScheme::Central);
                for (o, d) in out.a.data.iter_mut().zip(&shift.data) {
                    *o += d;
                }
            } else if alg.name == "su2" {
                let n = grid.site_count();
                let us: Vec<_> = (0..n).map(|s| su2_exp(site_slice(xi, s))).collect();
                for s in 0..n {
                    let uinv = us[s].adjoint();
                    for k in 0..grid.dim {
                        // a -> g^{-1} a g + g^{-1} dg, both terms projected
                        // back onto the algebra basis.
                        let rotated = su2_adjoint(&uinv, dir_slice(&state.a, s, k));
                        let sp = grid.neighbor(s, k, 1);
                        let sm = grid.neighbor(s, k, -1);
                        let scale = nalgebra::Complex::new(1.0 / (2.0 * grid.spacing[k]), 0.0);
                        let dg = (us[sp] - us[sm]) * scale;
                        let inhom = su2_coefficients(&(uinv * dg));
                        for c in 0..3 {
                            *out.a.at_mut(s, k, c) = rotated[c] + inhom[c];
                        }
                        let rp = su2_adjoint(&uinv, dir_slice(&state.p, s, k));
                        for c in 0..3 {
                            *out.p.at_mut(s, k, c) = rp[c];
                        }
                    }
                    let rb = su2_adjoint(&uinv, site_slice(&state.beta, s));
                    let r0 = su2_adjoint(&uinv, site_slice(&state.a0, s));
                    for c in 0..3 {
                        *out.beta.at_mut(s, c) = rb[c];
                        *out.a0.at_mut(s, c) = r0[c];
                    }
                }
            } else {
                return Err(Error::Config(format!(
                    "no matrix representation wired for algebra {}",
                    alg.name
                )));
            }
        }
    }
    Ok(out)
}

/// Pointwise Legendre transform of a first jet: P^{mu nu} = -2 F^{mu nu}
/// with F from the jet. Layouts: a_jet[mu * g + c]; da_jet[(mu * m + nu) * g
/// + c] holding the nu-derivative of A_mu. Output antisymmetric, same
/// double-index layout.
pub fn legendre_transform(
    alg: &LieAlgebra,
    m: usize,
    a_jet: &[f64],
    da_jet: &[f64],
) -> Result<Vec<f64>> {
    let g = alg.dim;
    if m == 0 || a_jet.len() != m * g || da_jet.len() != m * m * g {
        return Err(Error::Config("malformed jet arrays".into()));
    }
    let mut out = vec![0.0; m * m * g];
    let mut br = vec![0.0; g];
    for mu in 0..m {
        for nu in (mu + 1)..m {
            alg.bracket_into(
                &a_jet[mu * g..(mu + 1) * g],
                &a_jet[nu * g..(nu + 1) * g],
                &mut br,
            );
            for c in 0..g {
                let d_mu_a_nu = da_jet[(nu * m + mu) * g + c];
                let d_nu_a_mu = da_jet[(mu * m + nu) * g + c];
                let f = 0.5 * (d_mu_a_nu - d_nu_a_mu + br[c]);
                out[(mu * m + nu) * g + c] = -2.0 * f;
                out[(nu * m + mu) * g + c] = 2.0 * f;
            }
        }
    }
    Ok(out)
}

/// Reduced Hamiltonian on the quotient, h = <p,p>/2 - <F_a, F_a>_2 / 2.
pub fn reduced_hamiltonian(grid: &LatticeGrid, alg: &LieAlgebra, state: &YmState) -> Result<f64> {
    require_flat(grid)?;
    state.validate(grid, alg)?;
    let f = curvature(grid, alg, &state.a);
    Ok(0.5 * inner_one_form(grid, alg, &state.p, &state.p)
        - 0.5 * inner_two_form(grid, alg, &f, &f))
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusReport {
    pub phase_dim: usize,
    pub constraint_rank: usize,
    pub orbit_rank: usize,
    pub reduced_dim: usize,
    /// Smallest kept and largest dropped singular value per map, for spotting
    /// near-reducible configurations. Dropped is 0 when nothing was dropped.
    pub constraint_kept_min: f64,
    pub constraint_dropped_max: f64,
    pub orbit_kept_min: f64,
    pub orbit_dropped_max: f64,
}

fn rank_profile(mat: &DMatrix<f64>, tol: f64) -> (usize, f64, f64) {
    let svd = mat.clone().svd(false, false);
    let smax = svd.singular_values.amax();
    let cut = tol * smax.max(f64::MIN_POSITIVE);
    let mut rank = 0;
    let mut kept_min = 0.0f64;
    let mut dropped_max = 0.0f64;
    for sv in svd.singular_values.iter() {
        if *sv > cut {
            rank += 1;
            kept_min = if rank == 1 { *sv } else { kept_min.min(*sv) };
        } else {
            dropped_max = dropped_max.max(*sv);
        }
    }
    (rank, kept_min, dropped_max)
}

/// Symplectic-quotient dimension count at the given state: ranks of the
/// linearized Gauss constraint p -> d*_a p and of the gauge orbit map
/// xi -> (d_a xi, [p, xi]), and the resulting reduced dimension
/// dim T*A - rank(constraint) - rank(orbit). The scheme matters: central
/// differences on even periodic grids have checkerboard kernels that are
/// lattice artifacts, so counting uses the forward/backward pair.
pub fn reduction_census(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    state: &YmState,
    scheme: DiffScheme,
    tol_rank: f64,
) -> Result<CensusReport> {
    require_flat(grid)?;
    state.validate(grid, alg)?;
    let n = grid.site_count();
    let g = alg.dim;
    let d = grid.dim;
    let one_form = n * d * g;
    let scalar = n * g;

    let mut constraint = DMatrix::zeros(scalar, one_form);
    let mut basis = CovectorField::zeros(grid, g);
    for j in 0..one_form {
        basis.data[j] = 1.0;
        let col = covariant_div_scheme(grid, alg, &state.a, &basis, scheme);
        basis.data[j] = 0.0;
        for (i, v) in col.data.iter().enumerate() {
            constraint[(i, j)] = *v;
        }
    }

    let mut orbit = DMatrix::zeros(2 * one_form, scalar);
    let mut xi = ScalarField::zeros(grid, g);
    let mut br = vec![0.0; g];
    for j in 0..scalar {
        xi.data[j] = 1.0;
        let da = covariant_d_scheme(grid, alg, &state.a, &xi, scheme);
        for (i, v) in da.data.iter().enumerate() {
            orbit[(i, j)] = *v;
        }
        if !alg.is_abelian() {
            for s in 0..n {
                for k in 0..d {
                    alg.bracket_into(dir_slice(&state.p, s, k), site_slice(&xi, s), &mut br);
                    for c in 0..g {
                        orbit[(one_form + (s * d + k) * g + c, j)] = br[c];
                    }
                }
            }
        }
        xi.data[j] = 0.0;
    }

    let (constraint_rank, ck, cd) = rank_profile(&constraint, tol_rank);
    let (orbit_rank, ok, od) = rank_profile(&orbit, tol_rank);
    let phase_dim = 2 * one_form;
    Ok(CensusReport {
        phase_dim,
        constraint_rank,
        orbit_rank,
        reduced_dim: phase_dim - constraint_rank - orbit_rank,
        constraint_kept_min: ck,
        constraint_dropped_max: cd,
        orbit_kept_min: ok,
        orbit_dropped_max: od,
    })
}

/// Assembles the beta-sector presymplectic system at frozen gauge datum a0:
/// coordinates (a, p, beta), form da wedge dp, extended Hamiltonian as in
/// `boundary_hamiltonian`. The kernel is exactly the beta directions and the
/// kernel Hessian block is 2w times the identity, the regular branch of the
/// dichotomy at identity scale.
pub fn as_presymplectic(
    grid: &LatticeGrid,
    alg: &LieAlgebra,
    a0: &ScalarField,
) -> Result<PresymplecticSystem> {
    require_flat(grid)?;
    if grid.dim != 2 {
        return Err(Error::Config(
            "presymplectic assembly expects a two-dimensional grid".into(),
        ));
    }
    if a0.comp != alg.dim || a0.data.len() != grid.site_count() * alg.dim {
        return Err(Error::Config("a0 shape mismatch".into()));
    }
    let n = grid.site_count();
    let g = alg.dim;
    let d = grid.dim;
    let na = n * d * g;
    let nb = n * g;
    let dim = 2 * na + nb;

    let mut omega = DMatrix::zeros(dim, dim);
    for s in 0..n {
        let w = grid.weight[s];
        for k in 0..d {
            for c in 0..g {
                let ia = (s * d + k) * g + c;
                omega[(ia, na + ia)] = w;
                omega[(na + ia, ia)] = -w;
            }
        }
    }

    let grid_c = grid.clone();
    let alg_c = alg.clone();
    let a0_c = a0.clone();
    let unpack = move |x: &DVector<f64>, n: usize, d: usize, g: usize| {
        let na = n * d * g;
        let a = CovectorField {
            dim: d,
            comp: g,
            data: x.as_slice()[..na].to_vec(),
        };
        let p = CovectorField {
            dim: d,
            comp: g,
            data: x.as_slice()[na..2 * na].to_vec(),
        };
        let beta = ScalarField {
            comp: g,
            data: x.as_slice()[2 * na..].to_vec(),
        };
        (a, p, beta)
    };

    let (gr1, al1, a01, up1) = (grid_c.clone(), alg_c.clone(), a0_c.clone(), unpack.clone());
    let hamiltonian = Box::new(move |x: &DVector<f64>| {
        let (a, p, beta) = up1(x, gr1.site_count(), gr1.dim, al1.dim);
        let state = YmState {
            a,
            a0: a01.clone(),
            p,
            beta,
            time: 0.0,
        };
        boundary_hamiltonian(&gr1, &al1, &state).expect("assembled state is well-formed")
    });

    let (gr2, al2, a02, up2) = (grid_c.clone(), alg_c.clone(), a0_c.clone(), unpack.clone());
    let gradient = Box::new(move |x: &DVector<f64>| {
        let n = gr2.site_count();
        let (d, g) = (gr2.dim, al2.dim);
        let na = n * d * g;
        let (a, p, beta) = up2(x, n, d, g);
        let codiv = pair_codiv(&gr2, &al2, &a, &beta);
        let da0 = covariant_d(&gr2, &al2, &a, &a02);
        let f = curvature(&gr2, &al2, &a);
        let mut out = DVector::zeros(2 * na + n * g);
        let mut br = vec![0.0; g];
        for s in 0..n {
            let w = gr2.weight[s];
            for k in 0..d {
                al2.bracket_into(site_slice(&a02, s), dir_slice(&p, s, k), &mut br);
                for c in 0..g {
                    let i = (s * d + k) * g + c;
                    out[i] = w * (codiv.at(s, k, c) + br[c]);
                    out[na + i] = w * (p.at(s, k, c) + da0.at(s, k, c));
                }
            }
            for c in 0..g {
                out[2 * na + s * g + c] = 2.0 * w * (f.at(s, c) + beta.at(s, c));
            }
        }
        out
    });

    let (gr3, al3, a03, up3) = (grid_c, alg_c, a0_c, unpack);
    let hessian = Box::new(move |x: &DVector<f64>| {
        let n = gr3.site_count();
        let (d, g) = (gr3.dim, al3.dim);
        let na = n * d * g;
        let dim = 2 * na + n * g;
        let (a, _p, beta) = up3(x, n, d, g);
        let mut m = DMatrix::zeros(dim, dim);
        let mut unit = vec![0.0; g];
        let mut br = vec![0.0; g];
        for s in 0..n {
            let w = gr3.weight[s];
            for k in 0..d {
                for c in 0..g {
                    let i = (s * d + k) * g + c;
                    m[(na + i, na + i)] = w;
                }
            }
            for c in 0..g {
                let ib = 2 * na + s * g + c;
                m[(ib, ib)] = 2.0 * w;
            }
            if !al3.is_abelian() {
                for e in 0..g {
                    unit[e] = 1.0;
                    al3.bracket_into(site_slice(&a03, s), &unit, &mut br);
                    for k in 0..d {
                        for c in 0..g {
                            let ia = (s * d + k) * g + c;
                            let ip = na + (s * d + k) * g + e;
                            m[(ia, ip)] = w * br[c];
                            m[(ip, ia)] = w * br[c];
                        }
                    }
                    // Second derivative of kappa(beta, [a_x, a_y]) pairs the
                    // two spatial slots through the structure constants.
                    for c in 0..g {
                        let mut uc = vec![0.0; g];
                        uc[c] = 1.0;
                        al3.bracket_into(&uc, &unit, &mut br);
                        let val: f64 = (0..g).map(|f| w * beta.at(s, f) * br[f]).sum();
                        let row = (s * d) * g + c;
                        let col = (s * d + 1) * g + e;
                        m[(row, col)] += val;
                        m[(col, row)] += val;
                    }
                    unit[e] = 0.0;
                }
            }
        }
        let mut bunit = ScalarField::zeros(&gr3, g);
        for j in 0..n * g {
            bunit.data[j] = 1.0;
            let col = pair_codiv(&gr3, &al3, &a, &bunit);
            bunit.data[j] = 0.0;
            let ib = 2 * na + j;
            for (i, v) in col.data.iter().enumerate() {
                if *v != 0.0 {
                    let val = gr3.weight[i / (d * g)] * v;
                    m[(i, ib)] += val;
                    m[(ib, i)] += val;
                }
            }
        }
        m
    });

    PresymplecticSystem::new(omega, hamiltonian, gradient, hessian)
}

/// Abelian assembly with a0 kept as an ambient coordinate, for the constraint
/// recursion cross-check of the census. Quadratic Hamiltonian, so the system
/// is its own Hessian; built with the requested difference scheme so rank
/// counts are free of checkerboard artifacts.
pub fn as_presymplectic_extended_u1(
    grid: &LatticeGrid,
    scheme: DiffScheme,
) -> Result<PresymplecticSystem> {
    require_flat(grid)?;
    if grid.dim != 2 {
        return Err(Error::Config(
            "extended assembly expects a two-dimensional grid".into(),
        ));
    }
    let alg = LieAlgebra::u1();
    let n = grid.site_count();
    let d = grid.dim;
    let na = n * d;
    let dim = 2 * na + 2 * n;

    let mut omega = DMatrix::zeros(dim, dim);
    for s in 0..n {
        let w = grid.weight[s];
        for k in 0..d {
            let ia = s * d + k;
            omega[(ia, na + ia)] = w;
            omega[(na + ia, ia)] = -w;
        }
    }

    // Linear gradient map, assembled once into the constant Hessian.
    let grad_lin = |x: &DVector<f64>| -> DVector<f64> {
        let a = CovectorField {
            dim: d,
            comp: 1,
            data: x.as_slice()[..na].to_vec(),
        };
        let p = CovectorField {
            dim: d,
            comp: 1,
            data: x.as_slice()[na..2 * na].to_vec(),
        };
        let a0 = ScalarField {
            comp: 1,
            data: x.as_slice()[2 * na..2 * na + n].to_vec(),
        };
        let beta = ScalarField {
            comp: 1,
            data: x.as_slice()[2 * na + n..].to_vec(),
        };
        let codiv = pair_codiv_scheme(grid, &alg, &a, &beta, scheme);
        let da0 = grad_scheme(grid, &a0, scheme);
        let divp = div_scheme(grid, &as_vector(&p), scheme);
        let f = curvature_scheme(grid, &alg, &a, scheme);
        let mut out = DVector::zeros(dim);
        for s in 0..n {
            let w = grid.weight[s];
            for k in 0..d {
                out[s * d + k] = w * codiv.at(s, k, 0);
                out[na + s * d + k] = w * (p.at(s, k, 0) + da0.at(s, k, 0));
            }
            out[2 * na + s] = -w * divp.at(s, 0);
            out[2 * na + n + s] = 2.0 * w * (f.at(s, 0) + beta.at(s, 0));
        }
        out
    };
    let mut hm = DMatrix::zeros(dim, dim);
    let mut e = DVector::zeros(dim);
    for j in 0..dim {
        e[j] = 1.0;
        hm.set_column(j, &grad_lin(&e));
        e[j] = 0.0;
    }
    let sym_defect = (&hm - hm.transpose()).amax();
    if sym_defect > 1e-12 * hm.amax().max(1.0) {
        return Err(Error::Numerical(format!(
            "assembled quadratic form is not symmetric: defect {sym_defect:.3e}"
        )));
    }

    let hm_h = hm.clone();
    let hamiltonian = Box::new(move |x: &DVector<f64>| 0.5 * x.dot(&(&hm_h * x)));
    let hm_g = hm.clone();
    let gradient = Box::new(move |x: &DVector<f64>| &hm_g * x);
    let hessian = Box::new(move |_: &DVector<f64>| hm.clone());
    PresymplecticSystem::new(omega, hamiltonian, gradient, hessian)
}
