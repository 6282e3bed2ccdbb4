//! Theory-agnostic certificates for the boundary geometry: the canonical
//! form and 1-form on boundary data, conservation of the form under
//! linearized flows, and the generating-functional identity for the
//! Euclidean collar.
//!
//! Tangents and base points are passed as flat site-major slices so the same
//! code serves scalar fields (one entry per site) and gauge fields (dim *
//! algebra entries per site); every internal contraction is a plain product
//! because the field bases are orthonormal for their pairings.

use crate::lattice::{LatticeGrid, ScalarField};
use crate::scalar::{euclidean_bulk_solve, PotentialSpec};
use crate::util::{pairwise_sum, RandomStream};
use crate::{Error, Result};
use serde::Serialize;

/// A variation of boundary data: configuration slot, momentum slot, and the
/// orientation sign of the boundary component it lives on (+1 at t = 0, -1
/// at t = -epsilon).
#[derive(Debug, Clone)]
pub struct BoundaryTangent {
    pub dphi: Vec<f64>,
    pub dp: Vec<f64>,
    pub component_sign: f64,
}

impl BoundaryTangent {
    pub fn new(dphi: Vec<f64>, dp: Vec<f64>) -> Result<Self> {
        Self::with_sign(dphi, dp, 1.0)
    }

    pub fn with_sign(dphi: Vec<f64>, dp: Vec<f64>, component_sign: f64) -> Result<Self> {
        if dphi.len() != dp.len() {
            return Err(Error::Config(format!(
                "variation slots disagree: {} vs {} entries",
                dphi.len(),
                dp.len()
            )));
        }
        if component_sign != 1.0 && component_sign != -1.0 {
            return Err(Error::Config(format!(
                "component sign must be +1 or -1, got {component_sign}"
            )));
        }
        if !dphi.iter().chain(&dp).all(|v| v.is_finite()) {
            return Err(Error::Numerical("non-finite variation entry".into()));
        }
        Ok(BoundaryTangent {
            dphi,
            dp,
            component_sign,
        })
    }
}

fn check_shape(grid: &LatticeGrid, per_site: usize, u: &BoundaryTangent) -> Result<()> {
    if per_site == 0 || u.dphi.len() != grid.site_count() * per_site {
        return Err(Error::Config(format!(
            "variation has {} entries, expected {} sites x {}",
            u.dphi.len(),
            grid.site_count(),
            per_site
        )));
    }
    Ok(())
}

/// Canonical boundary form omega(U1, U2) = integral of
/// dphi_1 . dp_2 - dphi_2 . dp_1, weighted by the shared component sign.
pub fn omega_boundary(
    grid: &LatticeGrid,
    per_site: usize,
    u1: &BoundaryTangent,
    u2: &BoundaryTangent,
) -> Result<f64> {
    check_shape(grid, per_site, u1)?;
    check_shape(grid, per_site, u2)?;
    if u1.component_sign != u2.component_sign {
        return Err(Error::Config(
            "cannot pair variations on different boundary components".into(),
        ));
    }
    let terms: Vec<f64> = (0..grid.site_count())
        .map(|s| {
            let mut acc = 0.0;
            for j in 0..per_site {
                let i = s * per_site + j;
                acc += u1.dphi[i] * u2.dp[i] - u2.dphi[i] * u1.dp[i];
            }
            grid.weight[s] * acc
        })
        .collect();
    Ok(u1.component_sign * pairwise_sum(&terms))
}

/// Canonical 1-form alpha(U) = integral of p . dphi on the component the
/// variation lives on.
pub fn canonical_alpha(
    grid: &LatticeGrid,
    per_site: usize,
    p: &[f64],
    u: &BoundaryTangent,
) -> Result<f64> {
    check_shape(grid, per_site, u)?;
    if p.len() != u.dphi.len() {
        return Err(Error::Config(format!(
            "momentum has {} entries, variation {}",
            p.len(),
            u.dphi.len()
        )));
    }
    let terms: Vec<f64> = (0..grid.site_count())
        .map(|s| {
            let mut acc = 0.0;
            for j in 0..per_site {
                let i = s * per_site + j;
                acc += p[i] * u.dphi[i];
            }
            grid.weight[s] * acc
        })
        .collect();
    Ok(u.component_sign * pairwise_sum(&terms))
}

#[derive(Debug, Clone, Serialize)]
pub struct SymplecticityReport {
    pub pairs: usize,
    pub theta: f64,
    /// Max over pairs of the two-component defect |omega_0 - omega_T|
    /// relative to the larger of the two values.
    pub worst_defect: f64,
    pub passes: bool,
}

fn weighted_norm(grid: &LatticeGrid, per_site: usize, u: &BoundaryTangent) -> f64 {
    let terms: Vec<f64> = (0..grid.site_count())
        .map(|s| {
            let mut acc = 0.0;
            for j in 0..per_site {
                let i = s * per_site + j;
                acc += u.dphi[i] * u.dphi[i] + u.dp[i] * u.dp[i];
            }
            grid.weight[s] * acc
        })
        .collect();
    pairwise_sum(&terms).max(0.0).sqrt()
}

/// Certifies conservation of the boundary form by a flow map: variation
/// pairs are pushed through the finite-difference tangent flow at steps
/// theta and theta/2, Richardson-extrapolated, and the form on the evolved
/// component is compared with the form on the initial one. For a linear
/// flow the finite differences are exact and the defect measures the
/// integrator alone.
pub fn symplecticity_certificate<F>(
    grid: &LatticeGrid,
    per_site: usize,
    flow: F,
    base_phi: &[f64],
    base_p: &[f64],
    pairs: &[(BoundaryTangent, BoundaryTangent)],
    theta: f64,
    tol: f64,
) -> Result<SymplecticityReport>
where
    F: Fn(&[f64], &[f64]) -> Result<(Vec<f64>, Vec<f64>)>,
{
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::Config(format!("tangent step {theta} must be positive")));
    }
    let n = grid.site_count() * per_site;
    if base_phi.len() != n || base_p.len() != n {
        return Err(Error::Config("base point does not match the grid".into()));
    }
    let tangent_at = |u: &BoundaryTangent, t: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let shift = |sign: f64| -> (Vec<f64>, Vec<f64>) {
            let q = base_phi
                .iter()
                .zip(&u.dphi)
                .map(|(b, d)| b + sign * t * d)
                .collect();
            let p = base_p
                .iter()
                .zip(&u.dp)
                .map(|(b, d)| b + sign * t * d)
                .collect();
            (q, p)
        };
        let (qp, pp) = shift(1.0);
        let (qm, pm) = shift(-1.0);
        let (fqp, fpp) = flow(&qp, &pp)?;
        let (fqm, fpm) = flow(&qm, &pm)?;
        let dq = fqp.iter().zip(&fqm).map(|(a, b)| (a - b) / (2.0 * t)).collect();
        let dp = fpp.iter().zip(&fpm).map(|(a, b)| (a - b) / (2.0 * t)).collect();
        Ok((dq, dp))
    };
    let evolve = |u: &BoundaryTangent| -> Result<BoundaryTangent> {
        check_shape(grid, per_site, u)?;
        let (q1, p1) = tangent_at(u, theta)?;
        let (q2, p2) = tangent_at(u, 0.5 * theta)?;
        // Richardson step kills the O(theta^2) truncation term.
        let dq = q1
            .iter()
            .zip(&q2)
            .map(|(full, half)| (4.0 * half - full) / 3.0)
            .collect();
        let dp = p1
            .iter()
            .zip(&p2)
            .map(|(full, half)| (4.0 * half - full) / 3.0)
            .collect();
        BoundaryTangent::with_sign(dq, dp, -1.0)
    };
    let mut worst = 0.0f64;
    for (u, v) in pairs {
        let w0 = omega_boundary(grid, per_site, u, v)?;
        let ue = evolve(u)?;
        let ve = evolve(v)?;
        let wt_signed = omega_boundary(grid, per_site, &ue, &ve)?;
        // The evolved component carries sign -1, so the graph form is the sum.
        let defect = (w0 + wt_signed).abs();
        let floor = 1e-9 * weighted_norm(grid, per_site, u) * weighted_norm(grid, per_site, v);
        let scale = w0.abs().max(wt_signed.abs()).max(floor).max(f64::MIN_POSITIVE);
        worst = worst.max(defect / scale);
    }
    Ok(SymplecticityReport {
        pairs: pairs.len(),
        theta,
        worst_defect: worst,
        passes: worst <= tol,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratingFunctionalReport {
    pub probes: usize,
    /// Worst relative mismatch between the extrapolated directional
    /// derivative of the on-shell action and the flux pairing.
    pub worst_gradient_defect: f64,
    /// Relative asymmetry of the Dirichlet-to-Neumann Hessian.
    pub dn_symmetry_defect: f64,
    pub passes: bool,
}

/// Verifies that the on-shell Euclidean action generates the boundary
/// momenta: dW(delta) = <flux_outer, delta_outer> - <flux_inner,
/// delta_inner>, probed in random directions with Richardson-extrapolated
/// finite differences, plus symmetry of the second variation.
pub fn generating_functional_check(
    grid: &LatticeGrid,
    pot: &PotentialSpec,
    outer: &ScalarField,
    inner: &ScalarField,
    epsilon: f64,
    nslices: usize,
    probes: usize,
    seed: u64,
    tol: f64,
) -> Result<GeneratingFunctionalReport> {
    let n = grid.site_count();
    let base = euclidean_bulk_solve(grid, pot, inner, outer, epsilon, nslices)?;
    let scale = 1.0
        + outer
            .data
            .iter()
            .chain(&inner.data)
            .fold(0.0f64, |a, b| a.max(b.abs()));
    let mut rng = RandomStream::new(seed, "generating-functional");
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let d_outer: Vec<f64> = (0..n).map(|_| rng.next_symmetric()).collect();
        let d_inner: Vec<f64> = (0..n).map(|_| rng.next_symmetric()).collect();
        let action_at = |t: f64| -> Result<f64> {
            let mut o = outer.clone();
            let mut i = inner.clone();
            for s in 0..n {
                *o.at_mut(s, 0) += t * d_outer[s];
                *i.at_mut(s, 0) += t * d_inner[s];
            }
            Ok(euclidean_bulk_solve(grid, pot, &i, &o, epsilon, nslices)?.action)
        };
        let t = 1e-3 * scale;
        let fd_full = (action_at(t)? - action_at(-t)?) / (2.0 * t);
        let fd_half = (action_at(0.5 * t)? - action_at(-0.5 * t)?) / t;
        let fd = (4.0 * fd_half - fd_full) / 3.0;
        let pairing_terms: Vec<f64> = (0..n)
            .map(|s| {
                grid.weight[s]
                    * (base.flux_outer.at(s, 0) * d_outer[s] - base.flux_inner.at(s, 0) * d_inner[s])
            })
            .collect();
        let pairing = pairwise_sum(&pairing_terms);
        worst = worst.max((fd - pairing).abs() / (1.0 + pairing.abs()));
    }

    let k = crate::scalar::dirichlet_to_neumann(grid, pot, epsilon, nslices)?;
    let kscale = k.amax().max(f64::MIN_POSITIVE);
    let dn_defect = (&k - k.transpose()).amax() / kscale;

    Ok(GeneratingFunctionalReport {
        probes,
        worst_gradient_defect: worst,
        dn_symmetry_defect: dn_defect,
        passes: worst <= tol && dn_defect <= 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::LieAlgebra;
    use crate::scalar::{boundary_step, ScalarState};
    use crate::yangmills::{covariant_d, curvature, noether_charge, ym_step, YmState};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn random_tangent(n: usize, seed: u64, name: &str) -> BoundaryTangent {
        let mut rng = RandomStream::new(seed, name);
        let dphi = (0..n).map(|_| rng.next_symmetric()).collect();
        let dp = (0..n).map(|_| rng.next_symmetric()).collect();
        BoundaryTangent::new(dphi, dp).unwrap()
    }

    #[test]
    fn boundary_form_is_antisymmetric_and_bilinear() {
        let grid = LatticeGrid::flat_interval(6, 0.5).unwrap();
        let u = random_tangent(6, 1, "bilinear-u");
        let v = random_tangent(6, 2, "bilinear-v");
        let w = random_tangent(6, 3, "bilinear-w");
        assert_eq!(omega_boundary(&grid, 1, &u, &u).unwrap(), 0.0);

        let f: Vec<f64> = (0..6).map(|s| 0.3 * s as f64 - 1.0).collect();
        let g: Vec<f64> = (0..6).map(|s| (s as f64).sin()).collect();
        let uf = BoundaryTangent::new(f.clone(), vec![0.0; 6]).unwrap();
        let vg = BoundaryTangent::new(vec![0.0; 6], g.clone()).unwrap();
        let direct: f64 = (0..6).map(|s| 0.5 * f[s] * g[s]).sum();
        assert_relative_eq!(omega_boundary(&grid, 1, &uf, &vg).unwrap(), direct, epsilon = 1e-14);

        let (a, b) = (0.7, -1.3);
        let combo = BoundaryTangent::new(
            u.dphi.iter().zip(&w.dphi).map(|(x, y)| a * x + b * y).collect(),
            u.dp.iter().zip(&w.dp).map(|(x, y)| a * x + b * y).collect(),
        )
        .unwrap();
        let lhs = omega_boundary(&grid, 1, &combo, &v).unwrap();
        let rhs = a * omega_boundary(&grid, 1, &u, &v).unwrap()
            + b * omega_boundary(&grid, 1, &w, &v).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn the_canonical_form_is_minus_the_alpha_differential() {
        let grid = LatticeGrid::flat_interval(3, 1.0).unwrap();
        let p = vec![2.0, 3.0, 1.0];
        let u = BoundaryTangent::new(vec![0.5, 1.0, -1.0], vec![0.0; 3]).unwrap();
        assert_relative_eq!(canonical_alpha(&grid, 1, &p, &u).unwrap(), 3.0, epsilon = 1e-14);

        // For constant vector fields on the flat phase space
        // d alpha(U, V) = U[alpha(V)] - V[alpha(U)] and the bracket vanishes.
        let uu = random_tangent(3, 5, "dalpha-u");
        let vv = random_tangent(3, 6, "dalpha-v");
        let shift = |base: &[f64], d: &[f64]| -> Vec<f64> {
            base.iter().zip(d).map(|(b, x)| b + x).collect()
        };
        let u_of_alpha_v =
            canonical_alpha(&grid, 1, &shift(&p, &uu.dp), &vv).unwrap() - canonical_alpha(&grid, 1, &p, &vv).unwrap();
        let v_of_alpha_u =
            canonical_alpha(&grid, 1, &shift(&p, &vv.dp), &uu).unwrap() - canonical_alpha(&grid, 1, &p, &uu).unwrap();
        let dalpha = u_of_alpha_v - v_of_alpha_u;
        let omega = omega_boundary(&grid, 1, &uu, &vv).unwrap();
        assert!((omega + dalpha).abs() <= 1e-14 * (1.0 + omega.abs()));
    }

    #[test]
    fn alpha_on_gauge_generators_matches_the_charge() {
        let grid = LatticeGrid::flat_torus(8, 8, 2.0 * PI / 8.0).unwrap();
        let alg = LieAlgebra::su2();
        let mut rng = RandomStream::new(9, "alpha-charge");
        let mut state = YmState::zeros(&grid, &alg);
        for v in state.a.data.iter_mut().chain(state.p.data.iter_mut()) {
            *v = rng.next_symmetric();
        }
        let mut xi = ScalarField::zeros(&grid, 3);
        for v in xi.data.iter_mut() {
            *v = rng.next_symmetric();
        }
        // The gauge generator moves a by d_a xi; alpha pairs it with p.
        let da = covariant_d(&grid, &alg, &state.a, &xi);
        let mut dp = vec![0.0; state.p.data.len()];
        let mut br = vec![0.0; 3];
        for s in 0..grid.site_count() {
            for k in 0..2 {
                let base = (s * 2 + k) * 3;
                alg.bracket_into(&state.p.data[base..base + 3], &xi.data[s * 3..s * 3 + 3], &mut br);
                dp[base..base + 3].copy_from_slice(&br);
            }
        }
        let generator = BoundaryTangent::new(da.data.clone(), dp).unwrap();
        let alpha = canonical_alpha(&grid, 6, &state.p.data, &generator).unwrap();
        let q = noether_charge(&grid, &alg, &state, &xi).unwrap();
        assert!(
            (alpha - q).abs() <= 1e-12 * (1.0 + q.abs()),
            "alpha {alpha:.6e} vs charge {q:.6e}"
        );
    }

    #[test]
    fn free_scalar_flow_is_symplectic() {
        let n = 32;
        let grid = LatticeGrid::flat_interval(n, 2.0 * PI / n as f64).unwrap();
        let pot = PotentialSpec::Free;
        let mut rng = RandomStream::new(11, "scalar-base");
        let base_phi: Vec<f64> = (0..n).map(|_| 0.3 * rng.next_symmetric()).collect();
        let base_p: Vec<f64> = (0..n).map(|_| 0.3 * rng.next_symmetric()).collect();
        let dt = 1e-3;
        let steps = 100;
        let flow = |q: &[f64], p: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
            let mut st = ScalarState::zeros(&grid);
            st.phi.data.copy_from_slice(q);
            st.p.data.copy_from_slice(p);
            for _ in 0..steps {
                st = boundary_step(&grid, &pot, &st, dt)?;
            }
            Ok((st.phi.data, st.p.data))
        };
        let pairs: Vec<_> = (0..5)
            .map(|i| {
                (
                    random_tangent(n, 20 + i, "scalar-pair-u"),
                    random_tangent(n, 40 + i, "scalar-pair-v"),
                )
            })
            .collect();
        let report =
            symplecticity_certificate(&grid, 1, flow, &base_phi, &base_p, &pairs, 1e-4, 1e-8)
                .unwrap();
        assert!(
            report.passes,
            "scalar symplecticity defect {:.3e}",
            report.worst_defect
        );
    }

    #[test]
    fn abelian_yang_mills_flow_is_symplectic() {
        let n = 16;
        let grid = LatticeGrid::flat_torus(n, n, 2.0 * PI / n as f64).unwrap();
        let alg = LieAlgebra::u1();
        let sites = grid.site_count();
        let per_site = 2;
        let mut rng = RandomStream::new(13, "ym-base");
        let base_a: Vec<f64> = (0..sites * per_site).map(|_| 0.2 * rng.next_symmetric()).collect();
        let base_p: Vec<f64> = (0..sites * per_site).map(|_| 0.2 * rng.next_symmetric()).collect();
        let dt = 5e-3;
        let steps = 50;
        let flow = |q: &[f64], p: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
            let mut st = YmState::zeros(&grid, &alg);
            st.a.data.copy_from_slice(q);
            st.p.data.copy_from_slice(p);
            st.beta = curvature(&grid, &alg, &st.a);
            for b in st.beta.data.iter_mut() {
                *b *= -2.0;
            }
            for _ in 0..steps {
                st = ym_step(&grid, &alg, &st, dt)?;
            }
            Ok((st.a.data, st.p.data))
        };
        let pairs: Vec<_> = (0..5)
            .map(|i| {
                (
                    random_tangent(sites * per_site, 60 + i, "ym-pair-u"),
                    random_tangent(sites * per_site, 80 + i, "ym-pair-v"),
                )
            })
            .collect();
        let report =
            symplecticity_certificate(&grid, per_site, flow, &base_a, &base_p, &pairs, 1e-4, 1e-6)
                .unwrap();
        assert!(
            report.passes,
            "gauge symplecticity defect {:.3e}",
            report.worst_defect
        );
    }

    #[test]
    fn generating_functional_gradient_matches_the_flux() {
        let n = 12;
        let grid = LatticeGrid::flat_interval(n, 2.0 * PI / n as f64).unwrap();
        let pot = PotentialSpec::Mass { m: 0.7 };
        let outer = ScalarField::from_fn(&grid, 1, |x, _| 0.8 * x[0].sin());
        let inner = ScalarField::from_fn(&grid, 1, |x, _| 0.5 * (2.0 * x[0]).cos());
        let report =
            generating_functional_check(&grid, &pot, &outer, &inner, 0.3, 6, 10, 17, 1e-6)
                .unwrap();
        assert!(
            report.passes,
            "gradient defect {:.3e}, dn asymmetry {:.3e}",
            report.worst_gradient_defect, report.dn_symmetry_defect
        );

        let zero = ScalarField::zeros(&grid, 1);
        let sol = euclidean_bulk_solve(&grid, &pot, &zero, &zero, 0.3, 6).unwrap();
        assert!(sol.action.abs() <= 1e-14);
        assert!(sol.flux_outer.data.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn shapes_and_parameters_are_validated() {
        let grid = LatticeGrid::flat_interval(4, 1.0).unwrap();
        let u = random_tangent(4, 91, "val-u");
        let short = BoundaryTangent::new(vec![0.0; 3], vec![0.0; 3]).unwrap();
        assert!(omega_boundary(&grid, 1, &u, &short).is_err());
        assert!(BoundaryTangent::with_sign(vec![0.0], vec![0.0], 0.5).is_err());
        assert!(BoundaryTangent::new(vec![0.0], vec![0.0, 1.0]).is_err());
        let mixed = BoundaryTangent::with_sign(u.dphi.clone(), u.dp.clone(), -1.0).unwrap();
        assert!(omega_boundary(&grid, 1, &u, &mixed).is_err());
        let flow = |q: &[f64], p: &[f64]| Ok((q.to_vec(), p.to_vec()));
        let base = vec![0.0; 4];
        assert!(
            symplecticity_certificate(&grid, 1, flow, &base, &base, &[], 0.0, 1e-6).is_err()
        );
    }
}
