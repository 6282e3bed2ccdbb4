//! Periodic lattice geometry for the boundary slice.
//!
//! A grid carries a static per-site metric g, a shift covector eta0 coming
//! from the collar splitting, the lapse factor built from both, and the
//! quadrature weight w = lapse * sqrt(det g) * prod(h). All differential
//! operators below are paired: `div` is the exact negative adjoint of `grad`
//! under the w-weighted natural pairing, by construction, not up to O(h^2).
//! The same holds for the forward/backward pair used by rank counting.

use crate::util::pairwise_sum;
use crate::{Error, Result};

pub const MAX_DIM: usize = 2;

#[derive(Debug, Clone)]
pub struct LatticeGrid {
    pub dim: usize,
    pub shape: [usize; MAX_DIM],
    pub spacing: [f64; MAX_DIM],
    sites: usize,
    /// Row-major d x d metric per site, embedded in a 2 x 2 slot.
    pub metric: Vec<[f64; 4]>,
    pub metric_inv: Vec<[f64; 4]>,
    pub sqrt_det: Vec<f64>,
    pub eta0: Vec<[f64; MAX_DIM]>,
    pub lapse: Vec<f64>,
    /// Quadrature weight lapse * sqrt(det g) * h_0 * ... * h_{d-1}.
    pub weight: Vec<f64>,
}

/// Builds a periodic grid, validating the metric data site by site.
///
/// `metric` and `eta0` are sampled at the site positions x_k = i_k h_k.
/// The lapse is sqrt(1 + eta0 . g^{-1} eta0), the collar normalization
/// relating slice time to bulk time.
pub fn build_grid<M, E>(shape: &[usize], spacing: &[f64], metric: M, eta0: E) -> Result<LatticeGrid>
where
    M: Fn(&[f64; MAX_DIM]) -> [[f64; 2]; 2],
    E: Fn(&[f64; MAX_DIM]) -> [f64; MAX_DIM],
{
    let dim = shape.len();
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::Config(format!(
            "grid dimension must be 1 or 2, got {dim}"
        )));
    }
    if spacing.len() != dim {
        return Err(Error::Config(format!(
            "got {} spacings for a {dim}-dimensional grid",
            spacing.len()
        )));
    }
    let mut sh = [1usize; MAX_DIM];
    let mut sp = [1.0f64; MAX_DIM];
    for k in 0..dim {
        if shape[k] < 3 {
            return Err(Error::Config(format!(
                "axis {k} has {} sites; central differences need at least 3",
                shape[k]
            )));
        }
        if !(spacing[k].is_finite() && spacing[k] > 0.0) {
            return Err(Error::Config(format!(
                "axis {k} spacing {} is not positive and finite",
                spacing[k]
            )));
        }
        sh[k] = shape[k];
        sp[k] = spacing[k];
    }
    let sites = sh[0] * sh[1];
    let vol = sp[..dim].iter().product::<f64>();

    let mut g_all = Vec::with_capacity(sites);
    let mut ginv_all = Vec::with_capacity(sites);
    let mut sqrt_det = Vec::with_capacity(sites);
    let mut eta_all = Vec::with_capacity(sites);
    let mut lapse = Vec::with_capacity(sites);
    let mut weight = Vec::with_capacity(sites);

    for s in 0..sites {
        let x = position_for(sh, sp, dim, s);
        let gm = metric(&x);
        let mut g = [0.0f64; 4];
        for j in 0..dim {
            for k in 0..dim {
                g[j * 2 + k] = gm[j][k];
            }
        }
        if dim == 1 {
            g[3] = 1.0;
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("metric at site {s} is not finite")));
        }
        if (g[1] - g[2]).abs() > 1e-12 * (1.0 + g[1].abs().max(g[2].abs())) {
            return Err(Error::Config(format!("metric at site {s} is not symmetric")));
        }
        let det = g[0] * g[3] - g[1] * g[2];
        if !(g[0] > 0.0 && det > 0.0) {
            return Err(Error::Config(format!(
                "metric at site {s} is not positive definite (g00 = {}, det = {det})",
                g[0]
            )));
        }
        let ginv = [g[3] / det, -g[1] / det, -g[2] / det, g[0] / det];
        let e = eta0(&x);
        let mut eta = [0.0f64; MAX_DIM];
        for k in 0..dim {
            if !e[k].is_finite() {
                return Err(Error::Config(format!("eta0 at site {s} is not finite")));
            }
            eta[k] = e[k];
        }
        // eta0 . g^{-1} eta0 over the active axes only.
        let mut q = 0.0;
        for j in 0..dim {
            for k in 0..dim {
                q += eta[j] * ginv[j * 2 + k] * eta[k];
            }
        }
        let lap = (1.0 + q).sqrt();
        let sd = if dim == 1 { g[0].sqrt() } else { det.sqrt() };
        g_all.push(g);
        ginv_all.push(ginv);
        sqrt_det.push(sd);
        eta_all.push(eta);
        lapse.push(lap);
        weight.push(lap * sd * vol);
    }

    Ok(LatticeGrid {
        dim,
        shape: sh,
        spacing: sp,
        sites,
        metric: g_all,
        metric_inv: ginv_all,
        sqrt_det,
        eta0: eta_all,
        lapse,
        weight,
    })
}

fn position_for(shape: [usize; MAX_DIM], spacing: [f64; MAX_DIM], dim: usize, s: usize) -> [f64; MAX_DIM] {
    let i0 = s % shape[0];
    let i1 = s / shape[0];
    let mut x = [0.0; MAX_DIM];
    x[0] = i0 as f64 * spacing[0];
    if dim > 1 {
        x[1] = i1 as f64 * spacing[1];
    }
    x
}

impl LatticeGrid {
    /// Flat 1-d circle with n sites and spacing h.
    pub fn flat_interval(n: usize, h: f64) -> Result<LatticeGrid> {
        build_grid(&[n], &[h], |_| [[1.0, 0.0], [0.0, 1.0]], |_| [0.0; MAX_DIM])
    }

    /// Flat 2-torus, n0 x n1 sites, common spacing h.
    pub fn flat_torus(n0: usize, n1: usize, h: f64) -> Result<LatticeGrid> {
        build_grid(&[n0, n1], &[h, h], |_| [[1.0, 0.0], [0.0, 1.0]], |_| [0.0; MAX_DIM])
    }

    pub fn site_count(&self) -> usize {
        self.sites
    }

    pub fn position(&self, s: usize) -> [f64; MAX_DIM] {
        position_for(self.shape, self.spacing, self.dim, s)
    }

    /// Periodic neighbour along `axis`, `step` sites away (may be negative).
    pub fn neighbor(&self, s: usize, axis: usize, step: isize) -> usize {
        debug_assert!(axis < self.dim);
        let n0 = self.shape[0] as isize;
        let n1 = self.shape[1] as isize;
        let mut i0 = (s % self.shape[0]) as isize;
        let mut i1 = (s / self.shape[0]) as isize;
        if axis == 0 {
            i0 = (i0 + step).rem_euclid(n0);
        } else {
            i1 = (i1 + step).rem_euclid(n1);
        }
        (i1 * n0 + i0) as usize
    }

    pub fn is_flat_uniform(&self) -> bool {
        let id = [1.0, 0.0, 0.0, 1.0];
        self.metric.iter().all(|g| *g == id) && self.eta0.iter().all(|e| *e == [0.0; MAX_DIM])
    }
}

/// Scalar-valued lattice field with `comp` internal components.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub comp: usize,
    pub data: Vec<f64>,
}

/// Covector field (lower spatial index): data[(s * dim + k) * comp + c].
#[derive(Debug, Clone, PartialEq)]
pub struct CovectorField {
    pub dim: usize,
    pub comp: usize,
    pub data: Vec<f64>,
}

/// Vector field (upper spatial index), same layout as `CovectorField`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub dim: usize,
    pub comp: usize,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &LatticeGrid, comp: usize) -> Self {
        ScalarField {
            comp,
            data: vec![0.0; grid.site_count() * comp],
        }
    }

    pub fn from_fn<F>(grid: &LatticeGrid, comp: usize, f: F) -> Self
    where
        F: Fn(&[f64; MAX_DIM], usize) -> f64,
    {
        let mut out = Self::zeros(grid, comp);
        for s in 0..grid.site_count() {
            let x = grid.position(s);
            for c in 0..comp {
                out.data[s * comp + c] = f(&x, c);
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, s: usize, c: usize) -> f64 {
        self.data[s * self.comp + c]
    }

    #[inline]
    pub fn at_mut(&mut self, s: usize, c: usize) -> &mut f64 {
        &mut self.data[s * self.comp + c]
    }
}

macro_rules! directional_field_impl {
    ($ty:ident) => {
        impl $ty {
            pub fn zeros(grid: &LatticeGrid, comp: usize) -> Self {
                $ty {
                    dim: grid.dim,
                    comp,
                    data: vec![0.0; grid.site_count() * grid.dim * comp],
                }
            }

            pub fn from_fn<F>(grid: &LatticeGrid, comp: usize, f: F) -> Self
            where
                F: Fn(&[f64; MAX_DIM], usize, usize) -> f64,
            {
                let mut out = Self::zeros(grid, comp);
                for s in 0..grid.site_count() {
                    let x = grid.position(s);
                    for k in 0..out.dim {
                        for c in 0..comp {
                            *out.at_mut(s, k, c) = f(&x, k, c);
                        }
                    }
                }
                out
            }

            #[inline]
            pub fn at(&self, s: usize, k: usize, c: usize) -> f64 {
                self.data[(s * self.dim + k) * self.comp + c]
            }

            #[inline]
            pub fn at_mut(&mut self, s: usize, k: usize, c: usize) -> &mut f64 {
                &mut self.data[(s * self.dim + k) * self.comp + c]
            }
        }
    };
}

directional_field_impl!(CovectorField);
directional_field_impl!(VectorField);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffScheme {
    /// Second-order central differences; the default everywhere.
    Central,
    /// First-order forward gradient with its backward adjoint divergence.
    /// Central differences on an even-length circle annihilate the
    /// checkerboard mode, so rank counting uses this pair instead.
    Forward,
}

/// Discrete gradient of each internal component.
pub fn grad(grid: &LatticeGrid, f: &ScalarField) -> CovectorField {
    grad_scheme(grid, f, DiffScheme::Central)
}

pub fn grad_scheme(grid: &LatticeGrid, f: &ScalarField, scheme: DiffScheme) -> CovectorField {
    assert_eq!(f.data.len(), grid.site_count() * f.comp, "field/grid shape mismatch");
    let mut out = CovectorField::zeros(grid, f.comp);
    for s in 0..grid.site_count() {
        for k in 0..grid.dim {
            let h = grid.spacing[k];
            let (sp, sm, denom) = match scheme {
                DiffScheme::Central => (grid.neighbor(s, k, 1), grid.neighbor(s, k, -1), 2.0 * h),
                DiffScheme::Forward => (grid.neighbor(s, k, 1), s, h),
            };
            for c in 0..f.comp {
                *out.at_mut(s, k, c) = (f.at(sp, c) - f.at(sm, c)) / denom;
            }
        }
    }
    out
}

/// Discrete divergence, the exact negative adjoint of `grad` under the
/// w-weighted natural pairing: div v = (1/w) sum_k D_k(w v^k).
pub fn div(grid: &LatticeGrid, v: &VectorField) -> ScalarField {
    div_scheme(grid, v, DiffScheme::Central)
}

pub fn div_scheme(grid: &LatticeGrid, v: &VectorField, scheme: DiffScheme) -> ScalarField {
    assert_eq!(v.dim, grid.dim, "field/grid dimension mismatch");
    let mut out = ScalarField::zeros(grid, v.comp);
    for s in 0..grid.site_count() {
        let mut acc = vec![0.0; v.comp];
        for k in 0..grid.dim {
            let h = grid.spacing[k];
            match scheme {
                DiffScheme::Central => {
                    let sp = grid.neighbor(s, k, 1);
                    let sm = grid.neighbor(s, k, -1);
                    for c in 0..v.comp {
                        acc[c] += (grid.weight[sp] * v.at(sp, k, c)
                            - grid.weight[sm] * v.at(sm, k, c))
                            / (2.0 * h);
                    }
                }
                DiffScheme::Forward => {
                    // Backward difference: adjoint of the forward gradient.
                    let sm = grid.neighbor(s, k, -1);
                    for c in 0..v.comp {
                        acc[c] += (grid.weight[s] * v.at(s, k, c)
                            - grid.weight[sm] * v.at(sm, k, c))
                            / h;
                    }
                }
            }
        }
        for c in 0..v.comp {
            *out.at_mut(s, c) = acc[c] / grid.weight[s];
        }
    }
    out
}

/// Raises the index with g^{-1}.
pub fn sharp(grid: &LatticeGrid, a: &CovectorField) -> VectorField {
    let mut out = VectorField::zeros(grid, a.comp);
    for s in 0..grid.site_count() {
        let gi = &grid.metric_inv[s];
        for j in 0..grid.dim {
            for c in 0..a.comp {
                let mut v = 0.0;
                for k in 0..grid.dim {
                    v += gi[j * 2 + k] * a.at(s, k, c);
                }
                *out.at_mut(s, j, c) = v;
            }
        }
    }
    out
}

/// Lowers the index with g.
pub fn flat(grid: &LatticeGrid, v: &VectorField) -> CovectorField {
    let mut out = CovectorField::zeros(grid, v.comp);
    for s in 0..grid.site_count() {
        let g = &grid.metric[s];
        for j in 0..grid.dim {
            for c in 0..v.comp {
                let mut a = 0.0;
                for k in 0..grid.dim {
                    a += g[j * 2 + k] * v.at(s, k, c);
                }
                *out.at_mut(s, j, c) = a;
            }
        }
    }
    out
}

/// The shift covector as a one-component field.
pub fn eta0_covector(grid: &LatticeGrid) -> CovectorField {
    let mut out = CovectorField::zeros(grid, 1);
    for s in 0..grid.site_count() {
        for k in 0..grid.dim {
            *out.at_mut(s, k, 0) = grid.eta0[s][k];
        }
    }
    out
}

/// eta0_i v^i, sitewise.
pub fn eta0_contract(grid: &LatticeGrid, v: &VectorField) -> ScalarField {
    let mut out = ScalarField::zeros(grid, v.comp);
    for s in 0..grid.site_count() {
        for c in 0..v.comp {
            let mut acc = 0.0;
            for k in 0..grid.dim {
                acc += grid.eta0[s][k] * v.at(s, k, c);
            }
            *out.at_mut(s, c) = acc;
        }
    }
    out
}

/// Weighted L^2 pairings. The receiver/argument types fix the metric
/// contraction, so mixing index positions is a type error, not a runtime bug.
pub trait Pairing<Rhs> {
    fn inner(&self, rhs: &Rhs, grid: &LatticeGrid) -> f64;
}

impl Pairing<ScalarField> for ScalarField {
    fn inner(&self, rhs: &ScalarField, grid: &LatticeGrid) -> f64 {
        assert_eq!(self.comp, rhs.comp);
        let n = grid.site_count();
        let mut cell = Vec::with_capacity(n);
        for s in 0..n {
            let mut acc = 0.0;
            for c in 0..self.comp {
                acc += self.at(s, c) * rhs.at(s, c);
            }
            cell.push(grid.weight[s] * acc);
        }
        pairwise_sum(&cell)
    }
}

impl Pairing<CovectorField> for CovectorField {
    fn inner(&self, rhs: &CovectorField, grid: &LatticeGrid) -> f64 {
        assert_eq!(self.comp, rhs.comp);
        let n = grid.site_count();
        let mut cell = Vec::with_capacity(n);
        for s in 0..n {
            let gi = &grid.metric_inv[s];
            let mut acc = 0.0;
            for j in 0..grid.dim {
                for k in 0..grid.dim {
                    for c in 0..self.comp {
                        acc += gi[j * 2 + k] * self.at(s, j, c) * rhs.at(s, k, c);
                    }
                }
            }
            cell.push(grid.weight[s] * acc);
        }
        pairwise_sum(&cell)
    }
}

impl Pairing<VectorField> for VectorField {
    fn inner(&self, rhs: &VectorField, grid: &LatticeGrid) -> f64 {
        assert_eq!(self.comp, rhs.comp);
        let n = grid.site_count();
        let mut cell = Vec::with_capacity(n);
        for s in 0..n {
            let g = &grid.metric[s];
            let mut acc = 0.0;
            for j in 0..grid.dim {
                for k in 0..grid.dim {
                    for c in 0..self.comp {
                        acc += g[j * 2 + k] * self.at(s, j, c) * rhs.at(s, k, c);
                    }
                }
            }
            cell.push(grid.weight[s] * acc);
        }
        pairwise_sum(&cell)
    }
}

impl Pairing<VectorField> for CovectorField {
    fn inner(&self, rhs: &VectorField, grid: &LatticeGrid) -> f64 {
        assert_eq!(self.comp, rhs.comp);
        let n = grid.site_count();
        let mut cell = Vec::with_capacity(n);
        for s in 0..n {
            let mut acc = 0.0;
            for k in 0..grid.dim {
                for c in 0..self.comp {
                    acc += self.at(s, k, c) * rhs.at(s, k, c);
                }
            }
            cell.push(grid.weight[s] * acc);
        }
        pairwise_sum(&cell)
    }
}

impl Pairing<CovectorField> for VectorField {
    fn inner(&self, rhs: &CovectorField, grid: &LatticeGrid) -> f64 {
        rhs.inner(self, grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat2x2() -> [[f64; 2]; 2] {
        [[1.0, 0.0], [0.0, 1.0]]
    }

    #[test]
    fn flat_grid_has_unit_lapse_and_cell_weights() {
        let g = LatticeGrid::flat_interval(5, 0.25).unwrap();
        for s in 0..5 {
            assert_eq!(g.lapse[s], 1.0);
            assert!((g.weight[s] - 0.25).abs() < 1e-15);
        }
        let g2 = LatticeGrid::flat_torus(4, 3, 0.5).unwrap();
        assert_eq!(g2.site_count(), 12);
        for s in 0..12 {
            assert!((g2.weight[s] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn lapse_follows_shift_norm() {
        // Flat metric, eta0 = (0.6, 0.8): lapse = sqrt(1 + 1) = sqrt(2).
        let g = build_grid(&[3, 3], &[1.0, 1.0], |_| flat2x2(), |_| [0.6, 0.8]).unwrap();
        for s in 0..9 {
            assert!((g.lapse[s] - 2.0f64.sqrt()).abs() < 1e-15);
            assert!((g.weight[s] - 2.0f64.sqrt()).abs() < 1e-15);
        }
        // 1-d with g = 4: lapse = sqrt(1 + 0.36/4), weight = lapse * 2 * h.
        let g1 = build_grid(&[4], &[0.5], |_| [[4.0, 0.0], [0.0, 1.0]], |_| [0.6, 0.0]).unwrap();
        let lap = 1.09f64.sqrt();
        for s in 0..4 {
            assert!((g1.lapse[s] - lap).abs() < 1e-15);
            assert!((g1.weight[s] - lap).abs() < 1e-15);
        }
    }

    #[test]
    fn build_grid_rejects_bad_input() {
        assert!(build_grid(&[2], &[1.0], |_| flat2x2(), |_| [0.0; 2]).is_err());
        assert!(build_grid(&[4], &[0.0], |_| flat2x2(), |_| [0.0; 2]).is_err());
        assert!(build_grid(&[4], &[1.0], |_| [[-1.0, 0.0], [0.0, 1.0]], |_| [0.0; 2]).is_err());
        assert!(build_grid(&[3, 3], &[1.0, 1.0], |_| [[1.0, 2.0], [2.0, 1.0]], |_| [0.0; 2])
            .is_err());
        assert!(build_grid(&[3, 3], &[1.0, 1.0], |_| [[1.0, 0.3], [0.2, 1.0]], |_| [0.0; 2])
            .is_err());
        assert!(build_grid(&[4], &[1.0], |_| flat2x2(), |_| [f64::NAN, 0.0]).is_err());
        assert!(build_grid(&[], &[], |_| flat2x2(), |_| [0.0; 2]).is_err());
    }

    #[test]
    fn hand_quadratures_on_curved_interval() {
        // g(x) = (1+x)^2 on 3 sites, h = 1: weights 1, 2, 3.
        let g = build_grid(
            &[3],
            &[1.0],
            |x| [[(1.0 + x[0]) * (1.0 + x[0]), 0.0], [0.0, 1.0]],
            |_| [0.0; 2],
        )
        .unwrap();
        let ones = ScalarField::from_fn(&g, 1, |_, _| 1.0);
        assert!((ones.inner(&ones, &g) - 6.0).abs() < 1e-14);
        // Unit covector dx paired with itself: sum w / g = 1 + 1/2 + 1/3.
        let a = CovectorField::from_fn(&g, 1, |_, _, _| 1.0);
        assert!((a.inner(&a, &g) - 11.0 / 6.0).abs() < 1e-14);
        // Unit vector paired with itself: sum w * g = 1 + 8 + 27.
        let v = VectorField::from_fn(&g, 1, |_, _, _| 1.0);
        assert!((v.inner(&v, &g) - 36.0).abs() < 1e-13);
        // Natural pairing ignores the metric: sum w = 6.
        assert!((a.inner(&v, &g) - 6.0).abs() < 1e-14);
        assert_eq!(a.inner(&v, &g), v.inner(&a, &g));
    }

    #[test]
    fn gradient_sees_the_periodic_seam() {
        // f = site index on a 4-circle: central differences wrap.
        let g = LatticeGrid::flat_interval(4, 1.0).unwrap();
        let f = ScalarField {
            comp: 1,
            data: vec![0.0, 1.0, 2.0, 3.0],
        };
        let df = grad(&g, &f);
        let expect = [-1.0, 1.0, 1.0, -1.0];
        for s in 0..4 {
            assert!((df.at(s, 0, 0) - expect[s]).abs() < 1e-15);
        }
    }

    #[test]
    fn laplacian_symbol_matches_central_square() {
        // div grad sin(kx) = -(sin(kh)/h)^2 sin(kx), exactly, on the circle.
        let n = 16;
        let h = 0.5;
        let len = n as f64 * h;
        for m in [1usize, 3, 5] {
            let k = 2.0 * std::f64::consts::PI * m as f64 / len;
            let g = LatticeGrid::flat_interval(n, h).unwrap();
            let f = ScalarField::from_fn(&g, 1, |x, _| (k * x[0]).sin());
            let lap = div(&g, &sharp(&g, &grad(&g, &f)));
            let sym = -(k * h).sin().powi(2) / (h * h);
            for s in 0..n {
                assert!((lap.at(s, 0) - sym * f.at(s, 0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sharp_flat_roundtrip() {
        let g = build_grid(
            &[3, 3],
            &[0.5, 0.5],
            |x| {
                let u = (x[0] + 0.3 * x[1]).sin() * 0.2;
                [[1.5 + u, 0.3], [0.3, 1.1 - u]]
            },
            |_| [0.1, -0.2],
        )
        .unwrap();
        let a = CovectorField::from_fn(&g, 2, |x, k, c| (x[0] * (k + 1) as f64 + x[1] + c as f64).cos());
        let back = flat(&g, &sharp(&g, &a));
        for (u, v) in a.data.iter().zip(&back.data) {
            assert!((u - v).abs() < 1e-13);
        }
        // Index raising is an isometry between the two pairings.
        let va = sharp(&g, &a);
        assert!((a.inner(&a, &g) - va.inner(&va, &g)).abs() < 1e-12);
        assert!((a.inner(&a, &g) - a.inner(&va, &g)).abs() < 1e-12);
    }

    fn curved_grid(dim: usize, n: usize) -> LatticeGrid {
        let metric = |x: &[f64; 2]| {
            let u = 0.3 * (x[0]).sin() + 0.2 * (1.7 * x[1]).cos();
            [[(1.0 + 0.4 * u).exp(), 0.1 * u], [0.1 * u, (1.0 - 0.3 * u).exp()]]
        };
        let eta = |x: &[f64; 2]| [0.2 * (x[0]).cos(), -0.15 * (x[1]).sin()];
        if dim == 1 {
            build_grid(&[n], &[0.37], metric, eta).unwrap()
        } else {
            build_grid(&[n, n + 1], &[0.37, 0.29], metric, eta).unwrap()
        }
    }

    proptest! {
        #[test]
        fn div_is_negative_adjoint_of_grad(
            dim in 1usize..=2,
            n in 3usize..8,
            seed in 0u64..32,
        ) {
            let g = curved_grid(dim, n);
            let mut rng = crate::util::RandomStream::new(seed, "adjoint");
            let mut f = ScalarField::zeros(&g, 2);
            let mut v = VectorField::zeros(&g, 2);
            rng.fill_symmetric(&mut f.data);
            rng.fill_symmetric(&mut v.data);
            for scheme in [DiffScheme::Central, DiffScheme::Forward] {
                let lhs = grad_scheme(&g, &f, scheme).inner(&v, &g);
                let rhs = f.inner(&div_scheme(&g, &v, scheme), &g);
                prop_assert!((lhs + rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
            }
        }

        #[test]
        fn constant_fields_have_zero_gradient(n in 3usize..9) {
            let g = curved_grid(1, n);
            let f = ScalarField::from_fn(&g, 1, |_, _| 4.2);
            for scheme in [DiffScheme::Central, DiffScheme::Forward] {
                let df = grad_scheme(&g, &f, scheme);
                prop_assert!(df.data.iter().all(|v| v.abs() < 1e-14));
            }
        }
    }
}
