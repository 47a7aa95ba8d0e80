//! Clock and shift matrices `a`, `b` with `a^n = b^n = 1`, `b a = eps a b`,
//! `eps = exp(2 pi i k / n)`, and the basis `t_{alpha,beta} = a^alpha b^beta`
//! of `sl_n`.

use nalgebra::DMatrix;

use crate::error::{check_coprime, Result};
use crate::scalar::{cis_turns, C64};

pub type Matrix = DMatrix<C64>;

/// Index `(alpha, beta)` of a basis element, both taken mod `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectorIndex {
    pub alpha: usize,
    pub beta: usize,
}

impl SectorIndex {
    pub fn new(alpha: usize, beta: usize) -> Self {
        Self { alpha, beta }
    }

    pub fn is_zero(&self) -> bool {
        self.alpha == 0 && self.beta == 0
    }

    pub fn add(&self, other: &SectorIndex, n: usize) -> SectorIndex {
        SectorIndex::new((self.alpha + other.alpha) % n, (self.beta + other.beta) % n)
    }

    pub fn neg(&self, n: usize) -> SectorIndex {
        SectorIndex::new((n - self.alpha) % n, (n - self.beta) % n)
    }
}

/// The nonzero sectors in lexicographic order; this fixes basis numbering
/// everywhere downstream.
pub fn sectors(n: usize) -> Vec<SectorIndex> {
    let mut out = Vec::with_capacity(n * n - 1);
    for alpha in 0..n {
        for beta in 0..n {
            if alpha != 0 || beta != 0 {
                out.push(SectorIndex::new(alpha, beta));
            }
        }
    }
    out
}

pub fn sector_position(n: usize, s: SectorIndex) -> usize {
    s.alpha * n + s.beta - 1
}

#[derive(Clone, Debug)]
pub struct HeisenbergPair {
    pub n: usize,
    pub k: usize,
    pub a: Matrix,
    pub b: Matrix,
}

impl HeisenbergPair {
    pub fn epsilon(&self) -> C64 {
        cis_turns(self.k as f64 / self.n as f64)
    }

    /// `eps^e` for an integer exponent.
    pub fn eps_pow(&self, e: i64) -> C64 {
        let n = self.n as i64;
        cis_turns((self.k as i64 * e.rem_euclid(n)) as f64 / self.n as f64)
    }

    /// `a^alpha b^beta`.
    pub fn t(&self, s: SectorIndex) -> Matrix {
        mat_pow(&self.a, s.alpha) * mat_pow(&self.b, s.beta)
    }

    /// Largest entry of `a^n - 1`, `b^n - 1` and `b a - eps a b`.
    pub fn relation_residual(&self) -> f64 {
        let id = Matrix::identity(self.n, self.n);
        let r1 = (mat_pow(&self.a, self.n) - &id).camax();
        let r2 = (mat_pow(&self.b, self.n) - &id).camax();
        let r3 = (&self.b * &self.a - &self.a * &self.b * self.epsilon()).camax();
        r1.max(r2).max(r3)
    }
}

fn mat_pow(m: &Matrix, e: usize) -> Matrix {
    let mut out = Matrix::identity(m.nrows(), m.ncols());
    for _ in 0..e {
        out = &out * m;
    }
    out
}

/// `a = diag(eps^0, ..., eps^{n-1})`, `b e_j = e_{j-1}`.
pub fn build_pair(n: usize, k: usize) -> Result<HeisenbergPair> {
    check_coprime(n, k)?;
    let mut a = Matrix::zeros(n, n);
    let mut b = Matrix::zeros(n, n);
    for j in 0..n {
        a[(j, j)] = cis_turns((k * j) as f64 / n as f64);
        b[((j + n - 1) % n, j)] = C64::new(1.0, 0.0);
    }
    Ok(HeisenbergPair { n, k, a, b })
}

/// `[t_{s1}, t_{s2}] = coefficient * t_{s1 + s2}` with coefficient
/// `eps^{beta1 alpha2} - eps^{beta2 alpha1}`.
pub fn commutator_constants(n: usize, k: usize, s1: SectorIndex, s2: SectorIndex) -> (C64, SectorIndex) {
    let phase = |e: usize| cis_turns((k * (e % n)) as f64 / n as f64);
    let c = phase(s1.beta * s2.alpha) - phase(s2.beta * s1.alpha);
    (c, s1.add(&s2, n))
}

/// The basis `t_{alpha,beta}` with its trace dual
/// `t^{alpha,beta} = eps^{alpha beta} t_{-alpha,-beta}`, normalized so that
/// `tr(t^{s} t_{s'}) = n delta_{s s'}`.
#[derive(Clone, Debug)]
pub struct SLBasis {
    pub pair: HeisenbergPair,
    pub index: Vec<SectorIndex>,
    pub elements: Vec<Matrix>,
    pub duals: Vec<Matrix>,
}

impl SLBasis {
    pub fn new(pair: HeisenbergPair) -> Self {
        let index = sectors(pair.n);
        let elements = index.iter().map(|&s| pair.t(s)).collect();
        Self { pair, index, elements, duals: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.pair.n
    }

    /// Component of `x` along `t_s`, `(1/n) tr(t^s x)`.
    pub fn component(&self, s: SectorIndex, x: &Matrix) -> C64 {
        let pos = sector_position(self.n(), s);
        (&self.duals[pos] * x).trace() / self.n() as f64
    }
}

pub fn dual_basis(mut basis: SLBasis) -> SLBasis {
    let n = basis.n();
    basis.duals = basis
        .index
        .iter()
        .map(|&s| basis.pair.t(s.neg(n)) * basis.pair.eps_pow((s.alpha * s.beta) as i64))
        .collect();
    basis
}

/// The `(n^2 - 1) x (n^2 - 1)` matrix `tr(t^{s} t_{s'})`.
pub fn pairing_matrix(basis: &SLBasis) -> Matrix {
    let d = basis.elements.len();
    Matrix::from_fn(d, d, |i, j| (&basis.duals[i] * &basis.elements[j]).trace())
}
