//! Compact Lie algebra data for the gauge sector: u(1) and su(2).
//!
//! Algebra elements are coefficient vectors in a basis orthonormal for the
//! (sign-flipped) Killing form, so every internal contraction in the crate is
//! a plain delta. For su(2) the basis is t_a = -(i/2) sigma_a with
//! [t_a, t_b] = eps_abc t_c; group elements are explicit 2x2 unitaries with
//! a closed-form exponential.

use nalgebra::{Complex, Matrix2};

pub type GroupElement = Matrix2<Complex<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    pub name: &'static str,
    pub dim: usize,
    /// Structure constants f[a][b][c] with [e_a, e_b] = f_abc e_c, flattened.
    structure: Vec<f64>,
}

impl LieAlgebra {
    pub fn u1() -> Self {
        LieAlgebra {
            name: "u1",
            dim: 1,
            structure: vec![0.0],
        }
    }

    pub fn su2() -> Self {
        let mut f = vec![0.0; 27];
        let eps = [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)];
        for (a, b, c, v) in eps {
            f[(a * 3 + b) * 3 + c] = v;
            f[(b * 3 + a) * 3 + c] = -v;
        }
        LieAlgebra {
            name: "su2",
            dim: 3,
            structure: f,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "u1" => Some(Self::u1()),
            "su2" => Some(Self::su2()),
            _ => None,
        }
    }

    pub fn is_abelian(&self) -> bool {
        self.structure.iter().all(|v| *v == 0.0)
    }

    #[inline]
    pub fn bracket_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let d = self.dim;
        debug_assert!(x.len() == d && y.len() == d && out.len() == d);
        for c in 0..d {
            let mut acc = 0.0;
            for a in 0..d {
                for b in 0..d {
                    let f = self.structure[(a * d + b) * d + c];
                    if f != 0.0 {
                        acc += f * x[a] * y[b];
                    }
                }
            }
            out[c] = acc;
        }
    }

    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.bracket_into(x, y, &mut out);
        out
    }

    /// Killing pairing in the orthonormal basis: plain dot product.
    pub fn killing(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// Max Jacobi identity defect over all basis triples. Zero for the two
    /// shipped algebras; kept as a guard for future tables.
    pub fn jacobi_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        let mut e = vec![vec![0.0; d]; d];
        for (a, row) in e.iter_mut().enumerate() {
            row[a] = 1.0;
        }
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let t1 = self.bracket(&e[a], &self.bracket(&e[b], &e[c]));
                    let t2 = self.bracket(&e[b], &self.bracket(&e[c], &e[a]));
                    let t3 = self.bracket(&e[c], &self.bracket(&e[a], &e[b]));
                    for i in 0..d {
                        worst = worst.max((t1[i] + t2[i] + t3[i]).abs());
                    }
                }
            }
        }
        worst
    }
}

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

/// The matrix x^a t_a for su(2) coefficients x.
pub fn su2_matrix(x: &[f64]) -> GroupElement {
    // -(i/2)(x . sigma)
    Matrix2::new(
        c(0.0, -0.5 * x[2]),
        c(-0.5 * x[1], -0.5 * x[0]),
        c(0.5 * x[1], -0.5 * x[0]),
        c(0.0, 0.5 * x[2]),
    )
}

/// Coefficients of the anti-hermitian traceless part of m in the t_a basis.
pub fn su2_coefficients(m: &GroupElement) -> [f64; 3] {
    // Project first so group-valued noise (trace, hermitian part) drops out.
    let ah00 = c(0.0, m[(0, 0)].im);
    let ah11 = c(0.0, m[(1, 1)].im);
    let off = (m[(0, 1)] - m[(1, 0)].conj()) * c(0.5, 0.0);
    let tr_im = (ah00.im + ah11.im) / 2.0;
    let a00 = c(0.0, ah00.im - tr_im);
    // With A = -(i/2)(x . sigma): A01 = (-x1 - i x0)/2, A00 = -i x2 / 2.
    let x0 = -2.0 * off.im;
    let x1 = -2.0 * off.re;
    let x2 = -2.0 * a00.im;
    [x0, x1, x2]
}

/// Closed-form exponential of x^a t_a: cos(|x|/2) I - i sin(|x|/2) (xhat . sigma).
pub fn su2_exp(x: &[f64]) -> GroupElement {
    let theta = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let half = 0.5 * theta;
    let (cos, sinc) = if theta < 1e-8 {
        // sin(t/2)/t to O(t^4); enough for the switchover scale.
        (1.0 - half * half / 2.0, 0.5 - theta * theta / 48.0)
    } else {
        (half.cos(), half.sin() / theta)
    };
    let id: GroupElement = Matrix2::identity();
    let mut out = id * c(cos, 0.0);
    // sin(|x|/2) xhat . (-i sigma) = 2 sinc * (x . t)
    out += su2_matrix(x) * c(2.0 * sinc, 0.0);
    out
}

/// Ad_u(y) = u y u^dagger in coefficients.
pub fn su2_adjoint(u: &GroupElement, y: &[f64]) -> [f64; 3] {
    let m = u * su2_matrix(y) * u.adjoint();
    su2_coefficients(&m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::RandomStream;

    #[test]
    fn shipped_algebras_satisfy_jacobi() {
        assert_eq!(LieAlgebra::u1().jacobi_defect(), 0.0);
        assert_eq!(LieAlgebra::su2().jacobi_defect(), 0.0);
        assert!(LieAlgebra::u1().is_abelian());
        assert!(!LieAlgebra::su2().is_abelian());
    }

    #[test]
    fn su2_bracket_is_cross_product() {
        let g = LieAlgebra::su2();
        let x = [1.0, 2.0, 3.0];
        let y = [-0.5, 0.25, 1.5];
        let b = g.bracket(&x, &y);
        let cross = [
            x[1] * y[2] - x[2] * y[1],
            x[2] * y[0] - x[0] * y[2],
            x[0] * y[1] - x[1] * y[0],
        ];
        for i in 0..3 {
            assert!((b[i] - cross[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn killing_form_is_bracket_invariant() {
        let g = LieAlgebra::su2();
        let mut rng = RandomStream::new(11, "killing");
        for _ in 0..32 {
            let mut x = [0.0; 3];
            let mut y = [0.0; 3];
            let mut z = [0.0; 3];
            rng.fill_symmetric(&mut x);
            rng.fill_symmetric(&mut y);
            rng.fill_symmetric(&mut z);
            let lhs = g.killing(&g.bracket(&x, &y), &z);
            let rhs = g.killing(&y, &g.bracket(&x, &z));
            assert!((lhs + rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn matrix_and_coefficients_roundtrip() {
        let x = [0.3, -1.2, 0.7];
        let back = su2_coefficients(&su2_matrix(&x));
        for i in 0..3 {
            assert!((back[i] - x[i]).abs() < 1e-15);
        }
        // Matrix bracket realizes the structure constants.
        let g = LieAlgebra::su2();
        let y = [1.1, 0.2, -0.4];
        let mx = su2_matrix(&x);
        let my = su2_matrix(&y);
        let comm = mx * my - my * mx;
        let via_matrix = su2_coefficients(&comm);
        let via_table = g.bracket(&x, &y);
        for i in 0..3 {
            assert!((via_matrix[i] - via_table[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn exponential_is_special_unitary() {
        let x = [0.4, -0.9, 1.3];
        let u = su2_exp(&x);
        let uu = u * u.adjoint();
        assert!((uu[(0, 0)] - Complex::new(1.0, 0.0)).norm() < 1e-14);
        assert!((uu[(1, 1)] - Complex::new(1.0, 0.0)).norm() < 1e-14);
        assert!(uu[(0, 1)].norm() < 1e-14);
        let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
        assert!((det - Complex::new(1.0, 0.0)).norm() < 1e-14);
        // Tiny argument falls back to the series branch smoothly.
        let eps = su2_exp(&[1e-10, 0.0, 0.0]);
        assert!((eps[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((eps[(0, 1)].im + 0.5e-10).abs() < 1e-20);
    }

    #[test]
    fn adjoint_rotates_by_the_angle() {
        // exp(pi e_1) acts on the algebra as a rotation by pi about axis 1.
        let u = su2_exp(&[std::f64::consts::PI, 0.0, 0.0]);
        let e2 = su2_adjoint(&u, &[0.0, 1.0, 0.0]);
        let e3 = su2_adjoint(&u, &[0.0, 0.0, 1.0]);
        assert!((e2[1] + 1.0).abs() < 1e-14 && e2[0].abs() < 1e-14 && e2[2].abs() < 1e-14);
        assert!((e3[2] + 1.0).abs() < 1e-14);
        // Ad is a Killing isometry.
        let g = LieAlgebra::su2();
        let y = [0.3, 0.4, -0.2];
        let ad = su2_adjoint(&su2_exp(&[0.2, 0.7, -1.1]), &y);
        assert!((g.killing(&ad, &ad) - g.killing(&y, &y)).abs() < 1e-14);
    }
}
