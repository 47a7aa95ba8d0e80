//! Rational degeneration: the theta function is replaced by `z`, sections
//! are balanced polynomials of degree `<= m`.

use num_rational::BigRational;

use super::{DegenerateModel, ExactPencil, MatrixTerm};
use crate::error::{Error, Result};
use crate::exact::DenseMatrix;
use crate::scalar::Scalar;

/// Polynomial in `z` with rational coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigRational::from_i64(c)).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree at most `m` and no `z^{m-1}` term: the rational counterpart of
    /// an order-`m` theta function, whose zeros sum to zero.
    pub fn is_balanced(&self, m: usize) -> bool {
        self.degree().map_or(true, |d| d <= m) && m >= 1 && self.coeffs.get(m - 1).map_or(true, |c| c.is_zero())
    }
}

/// `E_ij` for `i != j`, then `E_ii - E_{i+1,i+1}`.
pub fn elementary_sl_basis(n: usize) -> Vec<DenseMatrix<BigRational>> {
    let unit = |r: usize, c: usize, v: i64| {
        let mut m = DenseMatrix::zeros(n, n);
        m.set(r, c, BigRational::from_i64(v));
        m
    };
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.push(unit(i, j, 1));
            }
        }
    }
    for i in 0..n - 1 {
        let mut h = unit(i, i, 1);
        h.set(i + 1, i + 1, BigRational::from_i64(-1));
        out.push(h);
    }
    out
}

/// Linear map `T` on `n x n` matrices (acting on row-major entries) that
/// produces the `z^m` coefficient from the `z^{m-1}` coefficient. Closure of
/// the bracket needs `[Tx, Ty] = T([x, Ty] + [Tx, y])`.
#[derive(Clone, Debug, PartialEq)]
pub struct TopTwist {
    n: usize,
    map: DenseMatrix<BigRational>,
}

impl TopTwist {
    /// `T = 0`: polynomials of degree below `m`.
    pub fn truncated(n: usize) -> Self {
        Self { n, map: DenseMatrix::zeros(n * n, n * n) }
    }

    /// `T(x) = sum_ij B^{-1}_ij tr(f_i x) f_j` with `B_ij = tr(functional [f_i, f_j])`,
    /// for a subalgebra spanned by `f` on which `B` is nondegenerate.
    pub fn frobenius(subalgebra: &[DenseMatrix<BigRational>], functional: &DenseMatrix<BigRational>) -> Result<Self> {
        let n = functional.rows();
        let d = subalgebra.len();
        let trace = |a: &DenseMatrix<BigRational>, b: &DenseMatrix<BigRational>| {
            let mut acc = BigRational::zero();
            for r in 0..n {
                for c in 0..n {
                    acc = acc + a.get(r, c).clone() * b.get(c, r).clone();
                }
            }
            acc
        };
        let form = DenseMatrix::from_fn(d, d, |i, j| trace(functional, &subalgebra[i].commutator(&subalgebra[j])));
        let inverse = form.inverse().map_err(|_| Error::Singular("functional is degenerate on the subalgebra".into()))?;
        let mut map: DenseMatrix<BigRational> = DenseMatrix::zeros(n * n, n * n);
        for (col, (r0, c0)) in (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).enumerate() {
            let mut x: DenseMatrix<BigRational> = DenseMatrix::zeros(n, n);
            x.set(r0, c0, BigRational::one());
            let pairings: Vec<BigRational> = subalgebra.iter().map(|f| trace(f, &x)).collect();
            for j in 0..d {
                let mut w = BigRational::zero();
                for i in 0..d {
                    w = w + inverse.get(i, j).clone() * pairings[i].clone();
                }
                if w.is_zero() {
                    continue;
                }
                for r in 0..n {
                    for c in 0..n {
                        let v = map.get(r * n + c, col).clone() + w.clone() * subalgebra[j].get(r, c).clone();
                        map.set(r * n + c, col, v);
                    }
                }
            }
        }
        Ok(Self { n, map })
    }

    /// Frobenius twist on the parabolic subalgebra of trace-zero matrices
    /// whose last row vanishes off the diagonal, paired through `functional`.
    pub fn parabolic(n: usize, functional: &DenseMatrix<BigRational>) -> Result<Self> {
        let sub: Vec<_> = elementary_sl_basis(n)
            .into_iter()
            .filter(|mat| (0..n - 1).all(|c| mat.get(n - 1, c).is_zero()))
            .collect();
        Self::frobenius(&sub, functional)
    }

    /// Parabolic twist with the functional `x -> x_{1n} + sum_{i <= n-2} x_{i+1,i}`.
    pub fn standard(n: usize) -> Result<Self> {
        let mut functional = DenseMatrix::zeros(n, n);
        functional.set(n - 1, 0, BigRational::one());
        for i in 0..n.saturating_sub(2) {
            functional.set(i, i + 1, BigRational::one());
        }
        Self::parabolic(n, &functional)
    }

    pub fn apply(&self, x: &DenseMatrix<BigRational>) -> DenseMatrix<BigRational> {
        let flat: Vec<BigRational> = (0..self.n * self.n).map(|i| x.get(i / self.n, i % self.n).clone()).collect();
        let y = self.map.mul_vec(&flat);
        DenseMatrix::from_fn(self.n, self.n, |r, c| y[r * self.n + c].clone())
    }

}

/// Elements `sum_{e <= m} g_e z^e` with `g_e` in `sl_n` and `g_m = T(g_{m-1})`;
/// sections of degree `<= m`.
pub fn rational_model_twisted(n: usize, m: usize, mu1: &RationalPoly, mu2: &RationalPoly, twist: &TopTwist) -> Result<DegenerateModel<BigRational>> {
    if n < 2 || m < 1 {
        return Err(Error::InvalidParameter(format!("need n >= 2, m >= 1, got n = {n}, m = {m}")));
    }
    for mu in [mu1, mu2] {
        if mu.degree().is_some_and(|d| d > m) {
            return Err(Error::InvalidParameter(format!("section degree {:?} exceeds m = {m}", mu.degree())));
        }
    }
    let sl = elementary_sl_basis(n);
    let mut basis = Vec::new();
    for e in 0..m {
        for mat in &sl {
            let mut element = MatrixTerm::monomial(e, mat.clone());
            if e == m - 1 {
                let top = twist.apply(mat);
                if top.rank() > 0 {
                    element.terms.push((m, top));
                }
            }
            basis.push(element);
        }
    }
    Ok(DegenerateModel { n, m, step: 1, basis, mu1: mu1.coeffs.clone(), mu2: mu2.coeffs.clone() })
}

/// The model with the standard parabolic twist; both sections must be balanced.
pub fn rational_model(n: usize, m: usize, mu1: &RationalPoly, mu2: &RationalPoly) -> Result<DegenerateModel<BigRational>> {
    for mu in [mu1, mu2] {
        if !mu.is_balanced(m) {
            return Err(Error::InvalidParameter(format!("section {:?} is not balanced for m = {m}", mu.coeffs())));
        }
    }
    rational_model_twisted(n, m, mu1, mu2, &TopTwist::standard(n)?)
}

pub fn rational_structure_constants(n: usize, m: usize, mu1: &RationalPoly, mu2: &RationalPoly) -> Result<ExactPencil<BigRational>> {
    rational_model(n, m, mu1, mu2)?.build("rational")
}

/// `mu1 = z^m - 1`, `mu2 = z^m - 2^m`: balanced and coprime.
pub fn default_sections(m: usize) -> (RationalPoly, RationalPoly) {
    let mut a = vec![0i64; m + 1];
    let mut b = vec![0i64; m + 1];
    a[m] = 1;
    b[m] = 1;
    a[0] = -1;
    b[0] = -(1i64 << m);
    (RationalPoly::from_ints(&a), RationalPoly::from_ints(&b))
}
