//! Rational and trigonometric degenerations of the elliptic brackets in
//! exact arithmetic.
//!
//! Both cases are `sl_n`-valued polynomials in one variable `s` (`s = z`
//! for the rational case, `s = exp(2 pi i z / n)` for the trigonometric
//! case) with two scalar sections that are polynomials in `s^step`. The
//! pointwise commutator of two elements is split as `mu1 P + mu2 Q` by one
//! exact linear solve, as the elliptic pipeline splits it by collocation.
//!
//! In both cases the top mode of an element is tied to a lower one: by a
//! Frobenius twist `g_m = T(g_{m-1})` in the rational case, and by
//! `c_{alpha,mn} = (-1)^m zeta^{-alpha} c_{alpha,0}` in the trigonometric case.
//! Without the tie the split is still unique but the pencil acquires a
//! Jordan block or loses the common quadratic Casimir.

pub mod cyclotomic;
pub mod rational;
pub mod trig;

use num_rational::BigRational;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::elliptic::PencilData;
use crate::error::{Error, Result};
use crate::exact::DenseMatrix;
use crate::lie::{
    compatibility_residual, compatibility_violations, jacobi_violations, jacobiator, kronecker_indices,
    kronecker_indices_numeric, BracketPencil, KroneckerIndices, LieStructure,
};
use crate::scalar::ExactField;

/// One basis element `sum_t s^{exponent_t} * matrix_t`.
#[derive(Clone, Debug)]
pub struct MatrixTerm<S> {
    pub terms: Vec<(usize, DenseMatrix<S>)>,
}

impl<S> MatrixTerm<S> {
    pub fn monomial(exponent: usize, matrix: DenseMatrix<S>) -> Self {
        Self { terms: vec![(exponent, matrix)] }
    }

    pub fn max_exponent(&self) -> usize {
        self.terms.iter().map(|t| t.0).max().unwrap_or(0)
    }
}

/// Element space, sections and the exact splitting of commutators.
#[derive(Clone, Debug)]
pub struct DegenerateModel<S> {
    pub n: usize,
    pub m: usize,
    /// Sections are polynomials in `s^step`.
    pub step: usize,
    pub basis: Vec<MatrixTerm<S>>,
    pub mu1: Vec<S>,
    pub mu2: Vec<S>,
}

/// The two brackets of a degenerate model.
#[derive(Clone, Debug)]
pub struct ExactPencil<S> {
    pub model: DegenerateModel<S>,
    pub c1: LieStructure<S>,
    pub c2: LieStructure<S>,
}

impl<S: ExactField> ExactPencil<S> {
    pub fn pencil(&self) -> BracketPencil<S> {
        BracketPencil::new(self.c1.clone(), self.c2.clone())
    }

    pub fn dim(&self) -> usize {
        self.c1.dim()
    }
}

/// `true` when the sections, read as binary forms of degree `m`, have a
/// common projective root (vanishing resultant).
pub fn sections_share_root<S: ExactField>(mu1: &[S], mu2: &[S], m: usize) -> bool {
    let coeff = |mu: &[S], i: usize| mu.get(i).cloned().unwrap_or_else(S::zero);
    let sylvester = DenseMatrix::from_fn(2 * m, 2 * m, |r, c| {
        let (mu, shift) = if r < m { (mu1, r) } else { (mu2, r - m) };
        if c >= shift && c - shift <= m {
            coeff(mu, c - shift)
        } else {
            S::zero()
        }
    });
    sylvester.rank() < 2 * m
}

impl<S: ExactField> DegenerateModel<S> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn top_exponent(&self) -> usize {
        self.m * self.step + self.basis.iter().map(|t| t.max_exponent()).max().unwrap_or(0)
    }

    fn slot(&self, e: usize, r: usize, c: usize) -> usize {
        (e * self.n + r) * self.n + c
    }

    fn vector_len(&self) -> usize {
        (self.top_exponent() + 1) * self.n * self.n
    }

    /// Coefficient vector of `sum_i x_i (basis_i)` multiplied by the section `mu`.
    pub fn section_product(&self, mu: &[S], x: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.vector_len()];
        for (element, xi) in self.basis.iter().zip(x) {
            if xi.is_zero() {
                continue;
            }
            for (exponent, matrix) in &element.terms {
                for (j, a) in mu.iter().enumerate().filter(|(_, a)| !a.is_zero()) {
                    let e = exponent + j * self.step;
                    let w = xi.clone() * a.clone();
                    for r in 0..self.n {
                        for c in 0..self.n {
                            let v = matrix.get(r, c);
                            if !v.is_zero() {
                                let idx = self.slot(e, r, c);
                                out[idx] = out[idx].clone() + w.clone() * v.clone();
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Coefficient vector of the pointwise commutator of two basis elements.
    pub fn commutator(&self, i: usize, j: usize) -> Vec<S> {
        let mut out = vec![S::zero(); self.vector_len()];
        for (ea, ma) in &self.basis[i].terms {
            for (eb, mb) in &self.basis[j].terms {
                let br = ma.commutator(mb);
                for r in 0..self.n {
                    for c in 0..self.n {
                        let idx = self.slot(ea + eb, r, c);
                        out[idx] = out[idx].clone() + br.get(r, c).clone();
                    }
                }
            }
        }
        out
    }

    /// Splits each right-hand side as `mu1 P + mu2 Q`; fails when the split
    /// is not unique or some right-hand side is outside the image.
    pub fn decompose_many(&self, rhs: &[Vec<S>]) -> Result<Vec<(Vec<S>, Vec<S>)>> {
        let d = self.dim();
        let unit = |i: usize| -> Vec<S> { (0..d).map(|j| if i == j { S::one() } else { S::zero() }).collect() };
        let cols: Vec<Vec<S>> = (0..d)
            .map(|i| self.section_product(&self.mu1, &unit(i)))
            .chain((0..d).map(|i| self.section_product(&self.mu2, &unit(i))))
            .collect();
        let rows = self.vector_len();
        let aug = DenseMatrix::from_fn(rows, 2 * d + rhs.len(), |r, c| {
            if c < 2 * d {
                cols[c][r].clone()
            } else {
                rhs[c - 2 * d][r].clone()
            }
        });
        let (red, pivots) = aug.rref();
        let lhs_rank = pivots.iter().filter(|&&p| p < 2 * d).count();
        if lhs_rank < 2 * d {
            return Err(Error::SharedRoot(format!("split map has rank {lhs_rank} < {}", 2 * d)));
        }
        (0..rhs.len())
            .map(|k| {
                let col = 2 * d + k;
                if (2 * d..rows).any(|r| !red.get(r, col).is_zero()) {
                    return Err(Error::Singular(format!("right-hand side {k} is outside mu1 V + mu2 V")));
                }
                let x: Vec<S> = (0..2 * d).map(|r| red.get(r, col).clone()).collect();
                Ok((x[..d].to_vec(), x[d..].to_vec()))
            })
            .collect()
    }

    pub fn decompose(&self, z: &[S]) -> Result<(Vec<S>, Vec<S>)> {
        Ok(self.decompose_many(std::slice::from_ref(&z.to_vec()))?.remove(0))
    }

    /// Structure constants of both brackets.
    pub fn build(self, label: &str) -> Result<ExactPencil<S>> {
        if sections_share_root(&self.mu1, &self.mu2, self.m) {
            return Err(Error::SharedRoot("resultant of the sections vanishes".into()));
        }
        let d = self.dim();
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
        let rhs: Vec<Vec<S>> = pairs.iter().map(|&(i, j)| self.commutator(i, j)).collect();
        let parts = self.decompose_many(&rhs)?;
        let mut c1 = LieStructure::zeros(d, format!("{label}[1]"));
        let mut c2 = LieStructure::zeros(d, format!("{label}[2]"));
        for (&(i, j), (p, q)) in pairs.iter().zip(parts) {
            for k in 0..d {
                c1.set(i, j, k, p[k].clone());
                c2.set(i, j, k, q[k].clone());
            }
        }
        Ok(ExactPencil { model: self, c1, c2 })
    }
}

/// Kronecker indices with exact ranks at a seeded rational point. The pencil
/// parameter is a rational with a large numerator and denominator so that it
/// avoids the finitely many degenerate members.
pub fn exact_kronecker<S: ExactField>(p: &BracketPencil<S>, seed: u64) -> KroneckerIndices {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point: Vec<S> = (0..p.dim()).map(|_| S::from_i64(rng.gen_range(-9..=9))).collect();
    let lambda0 = S::from_i64(rng.gen_range(1..=9973)) * S::from_i64(rng.gen_range(1..=9967)).inv();
    kronecker_indices(p, &point, &lambda0, |m| m.rank())
}

/// Basis of the quadratic forms `sum A_ij x_i x_j` that are Casimir
/// functions for every structure given; each as the upper triangle of `A`
/// in row-major order.
pub fn quadratic_invariants<S: ExactField>(structures: &[&LieStructure<S>]) -> Vec<Vec<S>> {
    let d = structures[0].dim();
    let mut index = vec![vec![0usize; d]; d];
    let mut count = 0;
    for i in 0..d {
        for j in i..d {
            index[i][j] = count;
            index[j][i] = count;
            count += 1;
        }
    }
    let mut rows: Vec<Vec<S>> = Vec::new();
    for c in structures {
        for k in 0..d {
            for j in 0..d {
                for l in j..d {
                    // coefficient of x_j x_l in {f, x_k}
                    let mut row = vec![S::zero(); count];
                    for i in 0..d {
                        let a = c.get(i, k, l);
                        if !a.is_zero() {
                            row[index[i][j]] = row[index[i][j]].clone() + a.clone();
                        }
                        if j != l {
                            let b = c.get(i, k, j);
                            if !b.is_zero() {
                                row[index[i][l]] = row[index[i][l]].clone() + b.clone();
                            }
                        }
                    }
                    if row.iter().any(|v| !v.is_zero()) {
                        rows.push(row);
                    }
                }
            }
        }
    }
    if rows.is_empty() {
        return (0..count).map(|i| (0..count).map(|j| if i == j { S::one() } else { S::zero() }).collect()).collect();
    }
    DenseMatrix::from_fn(rows.len(), count, |r, c| rows[r][c].clone()).null_space()
}

/// Side-by-side checks of an elliptic pencil and an exact degenerate pencil
/// with the same `n` and `m`.
#[derive(Clone, Debug)]
pub struct CrossReport {
    pub elliptic_dim: usize,
    pub exact_dim: usize,
    pub elliptic_jacobi: f64,
    pub elliptic_compatibility: f64,
    pub exact_jacobi_violations: usize,
    pub exact_compatibility_violations: usize,
    pub elliptic_indices: Vec<usize>,
    pub exact_indices: Vec<usize>,
}

impl CrossReport {
    pub fn agrees(&self) -> bool {
        self.elliptic_dim == self.exact_dim
            && self.exact_jacobi_violations == 0
            && self.exact_compatibility_violations == 0
            && self.elliptic_indices == self.exact_indices
    }

    pub fn gz_sum(&self) -> usize {
        self.exact_indices.iter().map(|e| 2 * e + 1).sum()
    }
}

pub fn cross_validate(elliptic: &PencilData, exact: &ExactPencil<BigRational>, seed: u64) -> CrossReport {
    let sorted = |k: KroneckerIndices| {
        let mut v = k.indices;
        v.sort_unstable();
        v
    };
    let exact_pencil = exact.pencil();
    CrossReport {
        elliptic_dim: elliptic.basis.len(),
        exact_dim: exact.dim(),
        elliptic_jacobi: jacobiator(&elliptic.c1).max(jacobiator(&elliptic.c2)),
        elliptic_compatibility: compatibility_residual(&elliptic.pencil()),
        exact_jacobi_violations: jacobi_violations(&exact.c1) + jacobi_violations(&exact.c2),
        exact_compatibility_violations: compatibility_violations(&exact_pencil),
        elliptic_indices: sorted(kronecker_indices_numeric(&elliptic.pencil(), seed)),
        exact_indices: sorted(exact_kronecker(&exact_pencil, seed)),
    }
}
