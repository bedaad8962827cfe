//! Structure group arithmetic: U(1) and SU(2), their Lie algebras, the
//! trace inner product, exponential and logarithm maps.
//!
//! The lattice code is generic over [`LieGroup`]; the enum façade
//! [`GroupElement`] / [`AlgebraElement`] carries a runtime group kind for
//! callers that pick the group from configuration.
//!
//! Normalization: su(2) basis `T_a = -i σ_a / 2`, inner product
//! `<X, Y> = -2 tr(XY)`, so `<T_a, T_b> = δ_ab` and `[T_a, T_b] = ε_abc T_c`.
//! For u(1) an element is `i·θ` and `<iθ, iφ> = θ φ`.

mod su2;
mod u1;

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use su2::{Su2, Su2Alg};
pub use u1::{U1Alg, U1};

use crate::error::{Error, Result};

/// Half-trace guard band for the principal logarithm.
pub const BRANCH_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    U1,
    Su2,
}

impl GroupKind {
    pub fn tag(self) -> u8 {
        match self {
            GroupKind::U1 => 0,
            GroupKind::Su2 => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(GroupKind::U1),
            1 => Some(GroupKind::Su2),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupKind::U1 => "u1",
            GroupKind::Su2 => "su2",
        }
    }
}

impl std::str::FromStr for GroupKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "u1" => Ok(GroupKind::U1),
            "su2" => Ok(GroupKind::Su2),
            other => Err(Error::InvalidArgument(format!("unknown group {other:?}"))),
        }
    }
}

/// Real Lie algebra in basis coordinates. `dot` is the trace inner product.
pub trait Algebra:
    Copy
    + Default
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    const DIM: usize;

    fn zero() -> Self {
        Self::default()
    }
    fn dot(&self, other: &Self) -> f64;
    fn norm_sq(&self) -> f64 {
        self.dot(self)
    }
    fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
    fn coeff(&self, i: usize) -> f64;
    fn from_coeffs(c: &[f64]) -> Self;
    fn is_finite(&self) -> bool {
        (0..Self::DIM).all(|i| self.coeff(i).is_finite())
    }
    /// Largest absolute basis coefficient.
    fn max_abs(&self) -> f64 {
        (0..Self::DIM).map(|i| self.coeff(i).abs()).fold(0.0, f64::max)
    }
}

/// Compact matrix Lie group with an exactly unitary representation.
pub trait LieGroup: Copy + Debug + PartialEq + Send + Sync + 'static {
    type Alg: Algebra;
    const KIND: GroupKind;
    /// Number of f64 words per element in the field file.
    const RAW_WORDS: usize;

    fn identity() -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn inverse(&self) -> Self;
    fn exp(x: &Self::Alg) -> Self;
    /// Principal logarithm; errors within [`BRANCH_GUARD`] of the cut.
    fn log(&self) -> Result<Self::Alg>;
    /// `g X g⁻¹`.
    fn adjoint(&self, x: &Self::Alg) -> Self::Alg;
    /// `g⁻¹ X g`.
    fn adjoint_inv(&self, x: &Self::Alg) -> Self::Alg {
        self.inverse().adjoint(x)
    }
    fn bracket(x: &Self::Alg, y: &Self::Alg) -> Self::Alg;
    /// `J(L)⁻ᵀ M`, where `log(e^{εY} e^L) = L + ε J(L)⁻¹ Y + O(ε²)`.
    fn dlog_transpose(l: &Self::Alg, m: &Self::Alg) -> Self::Alg;
    /// Half the trace of the defining representation (cos of the angle for U(1)).
    fn half_trace(&self) -> f64;
    /// Projects back onto the group after arithmetic drift.
    fn renormalize(&self) -> Self;
    /// `‖U†U − I‖` in the Frobenius norm.
    fn unitarity_defect(&self) -> f64;
    fn write_raw(&self, out: &mut Vec<f64>);
    fn read_raw(words: &[f64]) -> Self;
    /// Matrix of the defining representation, row-major.
    fn matrix(&self) -> Vec<Complex64>;
    fn alg_matrix(x: &Self::Alg) -> Vec<Complex64>;
    /// Anti-hermitian traceless part of a square matrix, in basis coordinates.
    fn project(m: &[Complex64]) -> Self::Alg;

    fn random_alg<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Self::Alg {
        let c: Vec<f64> = (0..Self::Alg::DIM)
            .map(|_| scale * (2.0 * rng.gen::<f64>() - 1.0))
            .collect();
        Self::Alg::from_coeffs(&c)
    }

    /// Haar-ish random element (uniform for U(1) and SU(2)).
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn distance_to(&self, other: &Self) -> f64 {
        let a = self.matrix();
        let b = other.matrix();
        a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
    }
}

pub(crate) fn branch_check(half_trace: f64) -> Result<()> {
    if half_trace > -1.0 + BRANCH_GUARD {
        Ok(())
    } else {
        Err(Error::BranchCut { half_trace })
    }
}

/// Lie algebra value tagged with its group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AlgebraElement {
    U1(U1Alg),
    Su2(Su2Alg),
}

/// Group value tagged with its group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GroupElement {
    U1(U1),
    Su2(Su2),
}

impl AlgebraElement {
    pub fn kind(&self) -> GroupKind {
        match self {
            AlgebraElement::U1(_) => GroupKind::U1,
            AlgebraElement::Su2(_) => GroupKind::Su2,
        }
    }

    pub fn zero(kind: GroupKind) -> Self {
        match kind {
            GroupKind::U1 => AlgebraElement::U1(U1Alg(0.0)),
            GroupKind::Su2 => AlgebraElement::Su2(Su2Alg::default()),
        }
    }

    /// Basis generator `T_a` of su(2); `a` in 0..3.
    pub fn su2_basis(a: usize) -> Self {
        let mut c = [0.0; 3];
        c[a] = 1.0;
        AlgebraElement::Su2(Su2Alg(c))
    }

    pub fn coeffs(&self) -> Vec<f64> {
        match self {
            AlgebraElement::U1(x) => vec![x.0],
            AlgebraElement::Su2(x) => x.0.to_vec(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        match *self {
            AlgebraElement::U1(x) => AlgebraElement::U1(x * s),
            AlgebraElement::Su2(x) => AlgebraElement::Su2(x * s),
        }
    }

    pub fn matrix(&self) -> Vec<Complex64> {
        match self {
            AlgebraElement::U1(x) => U1::alg_matrix(x),
            AlgebraElement::Su2(x) => Su2::alg_matrix(x),
        }
    }
}

impl GroupElement {
    pub fn kind(&self) -> GroupKind {
        match self {
            GroupElement::U1(_) => GroupKind::U1,
            GroupElement::Su2(_) => GroupKind::Su2,
        }
    }

    pub fn identity(kind: GroupKind) -> Self {
        match kind {
            GroupKind::U1 => GroupElement::U1(U1::identity()),
            GroupKind::Su2 => GroupElement::Su2(Su2::identity()),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        match (self, rhs) {
            (GroupElement::U1(a), GroupElement::U1(b)) => Ok(GroupElement::U1(a.mul(b))),
            (GroupElement::Su2(a), GroupElement::Su2(b)) => Ok(GroupElement::Su2(a.mul(b))),
            _ => Err(mismatch(self.kind(), rhs.kind())),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            GroupElement::U1(a) => GroupElement::U1(a.inverse()),
            GroupElement::Su2(a) => GroupElement::Su2(a.inverse()),
        }
    }

    pub fn matrix(&self) -> Vec<Complex64> {
        match self {
            GroupElement::U1(a) => a.matrix(),
            GroupElement::Su2(a) => a.matrix(),
        }
    }

    pub fn unitarity_defect(&self) -> f64 {
        match self {
            GroupElement::U1(a) => a.unitarity_defect(),
            GroupElement::Su2(a) => a.unitarity_defect(),
        }
    }
}

fn mismatch(a: GroupKind, b: GroupKind) -> Error {
    Error::KindMismatch(format!("{} vs {}", a.name(), b.name()))
}

fn check_finite<A: Algebra>(x: &A) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("non-finite algebra element".into()))
    }
}

/// Exponential map; closed-form Rodrigues formula for SU(2).
pub fn exp_map(x: &AlgebraElement) -> Result<GroupElement> {
    match x {
        AlgebraElement::U1(a) => {
            check_finite(a)?;
            Ok(GroupElement::U1(U1::exp(a)))
        }
        AlgebraElement::Su2(a) => {
            check_finite(a)?;
            Ok(GroupElement::Su2(Su2::exp(a)))
        }
    }
}

/// Principal logarithm.
pub fn log_map(u: &GroupElement) -> Result<AlgebraElement> {
    match u {
        GroupElement::U1(g) => g.log().map(AlgebraElement::U1),
        GroupElement::Su2(g) => g.log().map(AlgebraElement::Su2),
    }
}

/// Trace inner product `-2 tr(XY)` (su(2)) or product of phase rates (u(1)).
pub fn inner(x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
    match (x, y) {
        (AlgebraElement::U1(a), AlgebraElement::U1(b)) => Ok(a.dot(b)),
        (AlgebraElement::Su2(a), AlgebraElement::Su2(b)) => Ok(a.dot(b)),
        _ => Err(mismatch(x.kind(), y.kind())),
    }
}

/// `g⁻¹ X g`.
pub fn conjugate(g: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
    match (g, x) {
        (GroupElement::U1(g), AlgebraElement::U1(a)) => Ok(AlgebraElement::U1(g.adjoint_inv(a))),
        (GroupElement::Su2(g), AlgebraElement::Su2(a)) => {
            Ok(AlgebraElement::Su2(g.adjoint_inv(a)))
        }
        _ => Err(mismatch(g.kind(), x.kind())),
    }
}

/// Anti-hermitian traceless part of a 1×1 or 2×2 complex matrix (row-major).
pub fn project_algebra(m: &[Complex64]) -> Result<AlgebraElement> {
    match m.len() {
        1 => Ok(AlgebraElement::U1(U1::project(m))),
        4 => Ok(AlgebraElement::Su2(Su2::project(m))),
        n => Err(Error::InvalidArgument(format!(
            "project_algebra expects a 1x1 or 2x2 matrix, got {n} entries"
        ))),
    }
}
