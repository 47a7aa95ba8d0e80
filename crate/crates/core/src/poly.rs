//! Sparse multivariate polynomials with complex coefficients.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::C64;

/// Relative threshold below which coefficients are dropped by [`PolyElement::pruned`].
pub const PRUNE_TOL: f64 = 1e-14;

pub type Exponent = Vec<u32>;

#[derive(Clone, Debug, PartialEq)]
pub struct PolyElement {
    num_vars: usize,
    terms: BTreeMap<Exponent, C64>,
}

impl PolyElement {
    pub fn zero(num_vars: usize) -> Self {
        Self { num_vars, terms: BTreeMap::new() }
    }

    pub fn constant(num_vars: usize, c: C64) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(vec![0; num_vars], c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(num_vars: usize, i: usize) -> Self {
        let mut e = vec![0; num_vars];
        e[i] = 1;
        let mut p = Self::zero(num_vars);
        p.add_term(e, C64::new(1.0, 0.0));
        p
    }

    /// `sum_i v_i x_i`.
    pub fn linear(coeffs: &[C64]) -> Self {
        let mut p = Self::zero(coeffs.len());
        for (i, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0; coeffs.len()];
            e[i] = 1;
            p.add_term(e, c);
        }
        p
    }

    pub fn monomial(exponent: Exponent, c: C64) -> Self {
        let mut p = Self::zero(exponent.len());
        p.add_term(exponent, c);
        p
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, e: &[u32]) -> C64 {
        self.terms.get(e).copied().unwrap_or_default()
    }

    /// Adds `c x^e`, removing the term if it cancels exactly.
    pub fn add_term(&mut self, e: Exponent, c: C64) {
        assert_eq!(e.len(), self.num_vars, "exponent length mismatch");
        if c == C64::new(0.0, 0.0) {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if *slot.get() == C64::new(0.0, 0.0) {
                    slot.remove();
                }
            }
        }
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Largest coefficient modulus.
    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = Self::zero(self.num_vars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    /// Drops terms below `rel * norm()`.
    pub fn pruned(&self, rel: f64) -> Self {
        let cut = rel * self.norm();
        Self {
            num_vars: self.num_vars,
            terms: self.terms.iter().filter(|(_, c)| c.norm() > cut).map(|(e, c)| (e.clone(), *c)).collect(),
        }
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.num_vars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                out.add_term(d, c * e[i] as f64);
            }
        }
        out
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        assert_eq!(x.len(), self.num_vars);
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = *c;
                for (xi, &p) in x.iter().zip(e) {
                    if p > 0 {
                        v *= xi.powu(p);
                    }
                }
                v
            })
            .sum()
    }

    pub fn gradient(&self, x: &[C64]) -> Vec<C64> {
        (0..self.num_vars).map(|i| self.derivative(i).eval(x)).collect()
    }

    /// Homogeneous component of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        Self {
            num_vars: self.num_vars,
            terms: self.terms.iter().filter(|(e, _)| e.iter().sum::<u32>() == d).map(|(e, c)| (e.clone(), *c)).collect(),
        }
    }
}

impl Add for &PolyElement {
    type Output = PolyElement;
    fn add(self, rhs: &PolyElement) -> PolyElement {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub for &PolyElement {
    type Output = PolyElement;
    fn sub(self, rhs: &PolyElement) -> PolyElement {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -*c);
        }
        out
    }
}

impl Neg for &PolyElement {
    type Output = PolyElement;
    fn neg(self) -> PolyElement {
        self.scaled(C64::new(-1.0, 0.0))
    }
}

impl Mul for &PolyElement {
    type Output = PolyElement;
    fn mul(self, rhs: &PolyElement) -> PolyElement {
        assert_eq!(self.num_vars, rhs.num_vars);
        let mut out = PolyElement::zero(self.num_vars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Exponent = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }
}

impl Add for PolyElement {
    type Output = PolyElement;
    fn add(self, rhs: PolyElement) -> PolyElement {
        &self + &rhs
    }
}

impl Sub for PolyElement {
    type Output = PolyElement;
    fn sub(self, rhs: PolyElement) -> PolyElement {
        &self - &rhs
    }
}

impl Mul for PolyElement {
    type Output = PolyElement;
    fn mul(self, rhs: PolyElement) -> PolyElement {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn cancellation_removes_terms() {
        let x = PolyElement::var(2, 0);
        let z = &x - &x;
        assert!(z.is_zero());
        assert_eq!(z.degree(), None);
    }

    #[test]
    fn product_and_derivative() {
        let x = PolyElement::var(2, 0);
        let y = PolyElement::var(2, 1);
        let p = &(&x * &x) * &y;
        assert_eq!(p.degree(), Some(3));
        let dp = p.derivative(0);
        assert_eq!(dp.coefficient(&[1, 1]), c(2.0));
        assert!((p.eval(&[c(2.0), c(3.0)]) - c(12.0)).norm() < 1e-14);
    }

    #[test]
    fn pruning() {
        let mut p = PolyElement::constant(1, c(1.0));
        p.add_term(vec![1], c(1e-16));
        assert_eq!(p.pruned(PRUNE_TOL).num_terms(), 1);
    }
}
