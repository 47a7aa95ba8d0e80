//! The cyclotomic field `Q(zeta_N)` over the power basis `1, zeta, ..., zeta^{phi(N)-1}`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::exact::DenseMatrix;
use crate::scalar::{ExactField, Scalar};

/// Integer coefficients of the `n`-th cyclotomic polynomial, lowest degree first.
pub fn cyclotomic_polynomial(n: usize) -> Vec<i64> {
    assert!(n >= 1);
    let mut num = vec![0i64; n + 1];
    num[0] = -1;
    num[n] = 1;
    for d in (1..n).filter(|d| n % d == 0) {
        num = divide_monic(&num, &cyclotomic_polynomial(d));
    }
    num
}

fn divide_monic(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let mut quot = vec![0i64; rem.len() - dd];
    for k in (dd..rem.len()).rev() {
        let c = rem[k];
        quot[k - dd] = c;
        for (i, &d) in den.iter().enumerate() {
            rem[k - dd + i] -= c * d;
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0));
    quot
}

fn qzero() -> BigRational {
    <BigRational as Scalar>::zero()
}

/// Element of `Q(zeta_N)`, always stored reduced to `phi(N)` coordinates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cyclotomic<const N: usize> {
    coords: Vec<BigRational>,
}

impl<const N: usize> Cyclotomic<N> {
    pub fn degree() -> usize {
        cyclotomic_polynomial(N).len() - 1
    }

    pub fn from_coords(coords: Vec<BigRational>) -> Self {
        Self::reduce(coords)
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn rational(v: BigRational) -> Self {
        let mut coords = vec![qzero(); Self::degree()];
        coords[0] = v;
        Self { coords }
    }

    /// `zeta^j` for any integer `j`.
    pub fn zeta_pow(j: i64) -> Self {
        let e = j.rem_euclid(N as i64) as usize;
        let mut coords = vec![qzero(); e + 1];
        coords[e] = <BigRational as Scalar>::one();
        Self::reduce(coords)
    }

    fn reduce(mut coords: Vec<BigRational>) -> Self {
        let phi = cyclotomic_polynomial(N);
        let deg = phi.len() - 1;
        for k in (deg..coords.len()).rev() {
            let c = std::mem::take(&mut coords[k]);
            if c.is_zero() {
                continue;
            }
            for (i, &p) in phi.iter().enumerate().take(deg) {
                if p != 0 {
                    coords[k - deg + i] -= &c * BigRational::from_integer(p.into());
                }
            }
        }
        coords.resize(deg, qzero());
        Self { coords }
    }

    /// Rational value, if the element lies in `Q`.
    pub fn as_rational(&self) -> Option<&BigRational> {
        self.coords[1..].iter().all(|c| c.is_zero()).then(|| &self.coords[0])
    }
}

impl<const N: usize> fmt::Debug for Cyclotomic<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<const N: usize> fmt::Display for Cyclotomic<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coords
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("({c})z"),
                _ => format!("({c})z^{i}"),
            })
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl<const N: usize> Add for Cyclotomic<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { coords: self.coords.into_iter().zip(rhs.coords).map(|(a, b)| a + b).collect() }
    }
}

impl<const N: usize> Sub for Cyclotomic<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { coords: self.coords.into_iter().zip(rhs.coords).map(|(a, b)| a - b).collect() }
    }
}

impl<const N: usize> Neg for Cyclotomic<N> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { coords: self.coords.into_iter().map(|a| -a).collect() }
    }
}

impl<const N: usize> Mul for Cyclotomic<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = vec![qzero(); self.coords.len() + rhs.coords.len() - 1];
        for (i, a) in self.coords.iter().enumerate().filter(|(_, a)| !a.is_zero()) {
            for (j, b) in rhs.coords.iter().enumerate().filter(|(_, b)| !b.is_zero()) {
                out[i + j] += a * b;
            }
        }
        Self::reduce(out)
    }
}

impl<const N: usize> Scalar for Cyclotomic<N> {
    fn zero() -> Self {
        Self { coords: vec![qzero(); Self::degree()] }
    }
    fn one() -> Self {
        Self::rational(<BigRational as Scalar>::one())
    }
    fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }
    /// Largest coordinate modulus; zero only for the zero element.
    fn magnitude(&self) -> f64 {
        self.coords.iter().map(|c| c.to_f64().unwrap_or(f64::INFINITY).abs()).fold(0.0, f64::max)
    }
    fn from_i64(v: i64) -> Self {
        Self::rational(BigRational::from_integer(v.into()))
    }
}

impl<const N: usize> ExactField for Cyclotomic<N> {
    fn inv(&self) -> Self {
        assert!(!self.is_zero(), "inverse of zero");
        let d = Self::degree();
        // columns of the multiplication-by-self map in the power basis
        let cols: Vec<Self> = (0..d).map(|j| self.clone() * Self::zeta_pow(j as i64)).collect();
        let m = DenseMatrix::from_fn(d, d, |r, c| cols[c].coords[r].clone());
        let mut e0 = vec![qzero(); d];
        e0[0] = <BigRational as Scalar>::one();
        let x = m.solve(&e0).expect("multiplication by a nonzero element is invertible");
        Self { coords: x }
    }
}
