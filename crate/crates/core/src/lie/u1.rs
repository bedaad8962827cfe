use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{branch_check, Algebra, GroupKind, LieGroup};
use crate::error::Result;

/// u(1) element `i·θ`, stored as θ.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct U1Alg(pub f64);

impl Add for U1Alg {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        U1Alg(self.0 + o.0)
    }
}

impl Sub for U1Alg {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        U1Alg(self.0 - o.0)
    }
}

impl Neg for U1Alg {
    type Output = Self;
    fn neg(self) -> Self {
        U1Alg(-self.0)
    }
}

impl Mul<f64> for U1Alg {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        U1Alg(self.0 * s)
    }
}

impl AddAssign for U1Alg {
    fn add_assign(&mut self, o: Self) {
        self.0 += o.0;
    }
}

impl SubAssign for U1Alg {
    fn sub_assign(&mut self, o: Self) {
        self.0 -= o.0;
    }
}

impl Algebra for U1Alg {
    const DIM: usize = 1;

    fn dot(&self, o: &Self) -> f64 {
        self.0 * o.0
    }

    fn coeff(&self, _i: usize) -> f64 {
        self.0
    }

    fn from_coeffs(c: &[f64]) -> Self {
        U1Alg(c[0])
    }
}

/// Unit complex number `e^{iφ}` stored as its phase in `[-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct U1 {
    phase: f64,
}

fn wrap(phase: f64) -> f64 {
    if (-PI..=PI).contains(&phase) {
        phase
    } else {
        phase - 2.0 * PI * (phase / (2.0 * PI)).round()
    }
}

impl U1 {
    pub fn from_phase(phase: f64) -> Self {
        U1 { phase: wrap(phase) }
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }
}

impl LieGroup for U1 {
    type Alg = U1Alg;
    const KIND: GroupKind = GroupKind::U1;
    const RAW_WORDS: usize = 1;

    fn identity() -> Self {
        U1 { phase: 0.0 }
    }

    fn mul(&self, o: &Self) -> Self {
        U1::from_phase(self.phase + o.phase)
    }

    fn inverse(&self) -> Self {
        U1 { phase: -self.phase }
    }

    fn exp(x: &U1Alg) -> Self {
        U1::from_phase(x.0)
    }

    fn log(&self) -> Result<U1Alg> {
        branch_check(self.phase.cos())?;
        Ok(U1Alg(self.phase))
    }

    fn adjoint(&self, x: &U1Alg) -> U1Alg {
        *x
    }

    fn bracket(_x: &U1Alg, _y: &U1Alg) -> U1Alg {
        U1Alg(0.0)
    }

    fn dlog_transpose(_l: &U1Alg, m: &U1Alg) -> U1Alg {
        *m
    }

    fn half_trace(&self) -> f64 {
        self.phase.cos()
    }

    fn renormalize(&self) -> Self {
        U1::from_phase(self.phase)
    }

    fn unitarity_defect(&self) -> f64 {
        0.0
    }

    fn write_raw(&self, out: &mut Vec<f64>) {
        out.push(self.phase);
    }

    fn read_raw(words: &[f64]) -> Self {
        U1 { phase: words[0] }
    }

    fn matrix(&self) -> Vec<Complex64> {
        vec![Complex64::from_polar(1.0, self.phase)]
    }

    fn alg_matrix(x: &U1Alg) -> Vec<Complex64> {
        vec![Complex64::new(0.0, x.0)]
    }

    fn project(m: &[Complex64]) -> U1Alg {
        U1Alg(m[0].im)
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        U1::from_phase(PI * (2.0 * rng.gen::<f64>() - 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phases_wrap_into_principal_range() {
        let u = U1::from_phase(3.0).mul(&U1::from_phase(3.0));
        assert!((u.phase() - (6.0 - 2.0 * PI)).abs() < 1e-15);
        assert!(U1::from_phase(-7.0).phase().abs() <= PI);
    }

    #[test]
    fn unit_modulus() {
        let z = U1::from_phase(1.234).matrix()[0];
        assert!((z.norm() - 1.0).abs() < 1e-15);
    }
}
