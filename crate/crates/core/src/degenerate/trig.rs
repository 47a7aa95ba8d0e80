//! Trigonometric degeneration: the theta function is replaced by
//! `1 - exp(2 pi i z)`, and elements are Fourier polynomials in
//! `s = exp(2 pi i z / n)` whose `s^beta` coefficient is a multiple of `a^alpha b^beta`.

use super::cyclotomic::Cyclotomic;
use super::{DegenerateModel, ExactPencil, MatrixTerm};
use crate::error::{Error, Result};
use crate::exact::DenseMatrix;
use crate::scalar::Scalar;

/// Polynomial in `w = exp(2 pi i z)` over `Q(zeta_N)`, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly<const N: usize> {
    coeffs: Vec<Cyclotomic<N>>,
}

impl<const N: usize> TrigPoly<N> {
    pub fn new(mut coeffs: Vec<Cyclotomic<N>>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Cyclotomic::from_i64(c)).collect())
    }

    pub fn coeffs(&self) -> &[Cyclotomic<N>] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// `a_m = (-1)^m a_0` with degree at most `m`.
    pub fn satisfies_boundary(&self, m: usize) -> bool {
        let get = |i: usize| self.coeffs.get(i).cloned().unwrap_or_else(Cyclotomic::zero);
        let sign = if m % 2 == 0 { Cyclotomic::one() } else { -Cyclotomic::one() };
        self.degree().map_or(true, |d| d <= m) && get(m) == sign * get(0)
    }
}

impl<const N: usize> std::fmt::Display for TrigPoly<N> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| format!("({c}) w^{i}")).collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

/// Clock and shift matrices with `b a = zeta a b`.
pub fn clock_and_shift<const N: usize>() -> (DenseMatrix<Cyclotomic<N>>, DenseMatrix<Cyclotomic<N>>) {
    let a = DenseMatrix::from_fn(N, N, |r, c| if r == c { Cyclotomic::zeta_pow(r as i64) } else { Cyclotomic::zero() });
    let b = DenseMatrix::from_fn(N, N, |r, c| if (r + 1) % N == c { Cyclotomic::one() } else { Cyclotomic::zero() });
    (a, b)
}

fn power<const N: usize>(x: &DenseMatrix<Cyclotomic<N>>, e: usize) -> DenseMatrix<Cyclotomic<N>> {
    let mut out = DenseMatrix::from_fn(N, N, |r, c| if r == c { Cyclotomic::one() } else { Cyclotomic::zero() });
    for _ in 0..e {
        out = out.mul(x);
    }
    out
}

/// How the `w^0` and `w^m` modes of the diagonal elements `a^alpha` are tied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ModeTie {
    /// `c_{alpha,mN} = (-1)^m zeta^{-alpha} c_{alpha,0}`, the multiplier of
    /// `a^alpha` under conjugation by `b`.
    #[default]
    Phased,
    /// `c_{alpha,mN} = (-1)^m c_{alpha,0}` without the phase; the split of
    /// commutators is then not unique.
    AsPrinted,
    /// No `w^m` mode at all.
    Untied,
}

/// Elements `sum c_{alpha,beta} s^beta a^alpha b^beta` with `0 <= beta < m N`,
/// excluding the scalar matrices, where each `a^alpha` at `beta = 0` also
/// carries its tied `w^m` mode. Sections are polynomials in `w = s^N` of
/// degree `<= m`.
pub fn trig_model_with<const N: usize>(m: usize, mu1: &TrigPoly<N>, mu2: &TrigPoly<N>, tie: ModeTie) -> Result<DegenerateModel<Cyclotomic<N>>> {
    if N < 2 || m < 1 {
        return Err(Error::InvalidParameter(format!("need n >= 2, m >= 1, got n = {N}, m = {m}")));
    }
    for mu in [mu1, mu2] {
        if mu.degree().is_some_and(|d| d > m) {
            return Err(Error::InvalidParameter(format!("section degree {:?} exceeds m = {m}", mu.degree())));
        }
    }
    let (a, b) = clock_and_shift::<N>();
    let sign = if m % 2 == 0 { Cyclotomic::one() } else { -Cyclotomic::one() };
    let mut basis = Vec::new();
    for beta in 0..m * N {
        for alpha in 0..N {
            if alpha == 0 && beta % N == 0 {
                continue;
            }
            let mat = power(&a, alpha).mul(&power(&b, beta % N));
            let mut element = MatrixTerm::monomial(beta, mat.clone());
            let top = match tie {
                ModeTie::Phased => Some(sign.clone() * Cyclotomic::zeta_pow(-(alpha as i64))),
                ModeTie::AsPrinted => Some(sign.clone()),
                ModeTie::Untied => None,
            };
            if let (0, Some(w)) = (beta, top) {
                element.terms.push((m * N, DenseMatrix::from_fn(N, N, |r, c| w.clone() * mat.get(r, c).clone())));
            }
            basis.push(element);
        }
    }
    Ok(DegenerateModel { n: N, m, step: N, basis, mu1: mu1.coeffs.clone(), mu2: mu2.coeffs.clone() })
}

pub fn trig_model<const N: usize>(m: usize, mu1: &TrigPoly<N>, mu2: &TrigPoly<N>) -> Result<DegenerateModel<Cyclotomic<N>>> {
    trig_model_with(m, mu1, mu2, ModeTie::Phased)
}

/// Brackets for two sections satisfying the boundary condition.
pub fn trig_structure_constants<const N: usize>(m: usize, mu1: &TrigPoly<N>, mu2: &TrigPoly<N>) -> Result<ExactPencil<Cyclotomic<N>>> {
    for mu in [mu1, mu2] {
        if !mu.satisfies_boundary(m) {
            return Err(Error::InvalidParameter(format!("section {mu} violates the boundary condition for m = {m}")));
        }
    }
    trig_model(m, mu1, mu2)?.build("trig")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_shift_relation() {
        let (a, b) = clock_and_shift::<3>();
        let ba = b.mul(&a);
        let ab = a.mul(&b);
        let z = Cyclotomic::<3>::zeta_pow(1);
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(ba.get(r, c).clone(), z.clone() * ab.get(r, c).clone());
            }
        }
    }

    #[test]
    fn boundary_condition() {
        assert!(TrigPoly::<2>::from_ints(&[1, 0, 1]).satisfies_boundary(2));
        assert!(TrigPoly::<2>::from_ints(&[0, 1]).satisfies_boundary(2));
        assert!(TrigPoly::<2>::from_ints(&[1, -1]).satisfies_boundary(1));
        assert!(!TrigPoly::<2>::from_ints(&[1, 1]).satisfies_boundary(1));
    }
}
