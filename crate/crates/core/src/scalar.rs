//! Coefficient rings shared by the floating-point and exact pipelines.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type C64 = Complex64;

/// Ring operations needed by structure-constant tensors.
///
/// `magnitude` only has to be zero exactly when the value is zero; for
/// floating types it is the modulus.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn magnitude(&self) -> f64;
    fn from_i64(v: i64) -> Self;
}

/// A scalar type in which every nonzero element is invertible.
pub trait ExactField: Scalar {
    fn inv(&self) -> Self;
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn from_i64(v: i64) -> Self {
        C64::new(v as f64, 0.0)
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(v.into())
    }
}

impl ExactField for BigRational {
    fn inv(&self) -> Self {
        self.recip()
    }
}

/// `e^{2 pi i x}`.
pub fn cis_turns(x: f64) -> C64 {
    let a = 2.0 * std::f64::consts::PI * x;
    C64::new(a.cos(), a.sin())
}

/// `e^{2 pi i z}` for complex `z`.
pub fn exp_turns(z: C64) -> C64 {
    (C64::new(0.0, 2.0 * std::f64::consts::PI) * z).exp()
}
