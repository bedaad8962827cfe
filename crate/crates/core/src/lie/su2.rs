use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{branch_check, Algebra, GroupKind, LieGroup};
use crate::error::Result;

/// su(2) element `c_a T_a`, stored as the three coefficients.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Su2Alg(pub [f64; 3]);

impl Su2Alg {
    pub fn cross(&self, o: &Self) -> Self {
        let [a, b, c] = self.0;
        let [x, y, z] = o.0;
        Su2Alg([b * z - c * y, c * x - a * z, a * y - b * x])
    }
}

impl Add for Su2Alg {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Su2Alg([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Su2Alg {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Su2Alg([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Su2Alg {
    type Output = Self;
    fn neg(self) -> Self {
        Su2Alg([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Su2Alg {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Su2Alg([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl AddAssign for Su2Alg {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for Su2Alg {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl Algebra for Su2Alg {
    const DIM: usize = 3;

    fn dot(&self, o: &Self) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    fn coeff(&self, i: usize) -> f64 {
        self.0[i]
    }

    fn from_coeffs(c: &[f64]) -> Self {
        Su2Alg([c[0], c[1], c[2]])
    }
}

/// Unit quaternion `(w, x, y, z)` standing for `w·I + i(x σ₁ + y σ₂ + z σ₃)`.
///
/// With this convention `exp(c·T) = (cos(|c|/2), -sin(|c|/2) ĉ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Su2 {
    q: [f64; 4],
}

impl Su2 {
    /// Normalizes the given quaternion.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        Su2 { q }.renormalize()
    }

    pub fn raw(&self) -> [f64; 4] {
        self.q
    }

    fn vec(&self) -> [f64; 3] {
        [self.q[1], self.q[2], self.q[3]]
    }
}

fn sinc_half(theta: f64) -> f64 {
    // sin(θ/2)/θ
    if theta < 1e-4 {
        let t2 = theta * theta;
        0.5 * (1.0 - t2 / 24.0 + t2 * t2 / 1920.0)
    } else {
        (0.5 * theta).sin() / theta
    }
}

impl LieGroup for Su2 {
    type Alg = Su2Alg;
    const KIND: GroupKind = GroupKind::Su2;
    const RAW_WORDS: usize = 4;

    fn identity() -> Self {
        Su2 { q: [1.0, 0.0, 0.0, 0.0] }
    }

    fn mul(&self, o: &Self) -> Self {
        let [w1, x1, y1, z1] = self.q;
        let [w2, x2, y2, z2] = o.q;
        // (w1 w2 - v1·v2, w1 v2 + w2 v1 - v1×v2)
        Su2 {
            q: [
                w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                w1 * x2 + w2 * x1 - (y1 * z2 - z1 * y2),
                w1 * y2 + w2 * y1 - (z1 * x2 - x1 * z2),
                w1 * z2 + w2 * z1 - (x1 * y2 - y1 * x2),
            ],
        }
    }

    fn inverse(&self) -> Self {
        Su2 { q: [self.q[0], -self.q[1], -self.q[2], -self.q[3]] }
    }

    fn exp(x: &Su2Alg) -> Self {
        let theta = x.norm();
        let s = -sinc_half(theta);
        Su2 { q: [(0.5 * theta).cos(), s * x.0[0], s * x.0[1], s * x.0[2]] }
    }

    fn log(&self) -> Result<Su2Alg> {
        let w = self.q[0];
        branch_check(w)?;
        let v = self.vec();
        let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        // θ/s with θ = 2 atan2(s, w); s small implies w near +1 here.
        let f = if s < 1e-6 {
            2.0 / w * (1.0 - s * s / (3.0 * w * w))
        } else {
            2.0 * s.atan2(w) / s
        };
        Ok(Su2Alg([-f * v[0], -f * v[1], -f * v[2]]))
    }

    fn adjoint(&self, x: &Su2Alg) -> Su2Alg {
        let w = self.q[0];
        let u = Su2Alg(self.vec());
        let uu = u.norm_sq();
        let uc = u.dot(x);
        *x * (w * w - uu) + u * (2.0 * uc) - u.cross(x) * (2.0 * w)
    }

    fn bracket(x: &Su2Alg, y: &Su2Alg) -> Su2Alg {
        x.cross(y)
    }

    fn dlog_transpose(l: &Su2Alg, m: &Su2Alg) -> Su2Alg {
        let theta = l.norm();
        let beta = if theta < 1e-3 {
            let t2 = theta * theta;
            1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
        } else {
            1.0 / (theta * theta) - 1.0 / (2.0 * theta * (0.5 * theta).tan())
        };
        let lm = l.cross(m);
        *m + lm * 0.5 + l.cross(&lm) * beta
    }

    fn half_trace(&self) -> f64 {
        self.q[0]
    }

    fn renormalize(&self) -> Self {
        let n = self.q.iter().map(|c| c * c).sum::<f64>().sqrt();
        Su2 { q: [self.q[0] / n, self.q[1] / n, self.q[2] / n, self.q[3] / n] }
    }

    fn unitarity_defect(&self) -> f64 {
        // U†U = |q|² I for this parametrization.
        let n2 = self.q.iter().map(|c| c * c).sum::<f64>();
        std::f64::consts::SQRT_2 * (n2 - 1.0).abs()
    }

    fn write_raw(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.q);
    }

    fn read_raw(words: &[f64]) -> Self {
        Su2 { q: [words[0], words[1], words[2], words[3]] }
    }

    fn matrix(&self) -> Vec<Complex64> {
        let [w, x, y, z] = self.q;
        vec![
            Complex64::new(w, z),
            Complex64::new(y, x),
            Complex64::new(-y, x),
            Complex64::new(w, -z),
        ]
    }

    fn alg_matrix(c: &Su2Alg) -> Vec<Complex64> {
        let (x, y, z) = (-0.5 * c.0[0], -0.5 * c.0[1], -0.5 * c.0[2]);
        vec![
            Complex64::new(0.0, z),
            Complex64::new(y, x),
            Complex64::new(-y, x),
            Complex64::new(0.0, -z),
        ]
    }

    fn project(m: &[Complex64]) -> Su2Alg {
        let mut a = [Complex64::new(0.0, 0.0); 4];
        for i in 0..2 {
            for j in 0..2 {
                a[i * 2 + j] = 0.5 * (m[i * 2 + j] - m[j * 2 + i].conj());
            }
        }
        let half_tr = 0.5 * (a[0] + a[3]);
        a[0] -= half_tr;
        a[3] -= half_tr;
        let mut c = [0.0; 3];
        for (k, ck) in c.iter_mut().enumerate() {
            let mut e = [0.0; 3];
            e[k] = 1.0;
            let t = Su2::alg_matrix(&Su2Alg(e));
            // -2 tr(A T_k)
            let tr = a[0] * t[0] + a[1] * t[2] + a[2] * t[1] + a[3] * t[3];
            *ck = -2.0 * tr.re;
        }
        Su2Alg(c)
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let q: [f64; 4] = std::array::from_fn(|_| 2.0 * rng.gen::<f64>() - 1.0);
            let n2: f64 = q.iter().map(|c| c * c).sum();
            if n2 > 1e-6 && n2 <= 1.0 {
                return Su2 { q }.renormalize();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn alg() -> impl Strategy<Value = Su2Alg> {
        prop::array::uniform3(-1.2f64..1.2).prop_map(Su2Alg)
    }

    proptest! {
        #[test]
        fn exp_log_round_trip(x in alg()) {
            prop_assume!(x.norm() <= 2.0);
            let back = Su2::exp(&x).log().unwrap();
            prop_assert!((back - x).norm() <= 1e-12);
        }

        #[test]
        fn dlog_transpose_matches_finite_difference(l in alg(), y in alg(), m in alg()) {
            // <J⁻ᵀ(L) M, Y> = d/dε <log(e^{εY} e^L), M>
            let p = Su2::exp(&l);
            let h = 1e-5;
            let fp = Su2::exp(&(y * h)).mul(&p).log().unwrap().dot(&m);
            let fm = Su2::exp(&(y * -h)).mul(&p).log().unwrap().dot(&m);
            let fd = (fp - fm) / (2.0 * h);
            let an = Su2::dlog_transpose(&l, &m).dot(&y);
            prop_assert!((fd - an).abs() < 1e-7, "fd {} an {}", fd, an);
        }

        #[test]
        fn adjoint_is_an_automorphism(x in alg(), y in alg(), g in alg()) {
            let g = Su2::exp(&(g * 2.0));
            let lhs = g.adjoint(&x.cross(&y));
            let rhs = g.adjoint(&x).cross(&g.adjoint(&y));
            prop_assert!((lhs - rhs).norm() < 1e-12);
            prop_assert!((g.adjoint_inv(&g.adjoint(&x)) - x).norm() < 1e-12);
        }
    }

    #[test]
    fn product_matches_matrix_product() {
        let a = Su2::exp(&Su2Alg([0.4, -0.2, 1.3]));
        let b = Su2::exp(&Su2Alg([-0.9, 0.5, 0.1]));
        let (am, bm, pm) = (a.matrix(), b.matrix(), a.mul(&b).matrix());
        for i in 0..2 {
            for j in 0..2 {
                let d = am[i * 2] * bm[j] + am[i * 2 + 1] * bm[2 + j];
                assert!((d - pm[i * 2 + j]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn exp_matches_algebra_matrix_exponential_small_angle() {
        let x = Su2Alg([1e-7, -2e-7, 3e-8]);
        let back = Su2::exp(&x).log().unwrap();
        assert!((back - x).norm() < 1e-20);
    }
}
