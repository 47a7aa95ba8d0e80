//! Argument shift for quadratic Poisson brackets.
//!
//! For `{x_i, x_j} = G^{pq}_{ij} x_p x_q` the substitution `x -> x + u a`
//! gives `{.,.} + u {.,.}_a + u^2 G(a, a)`. When `G(a, a) = 0` the middle
//! term is a linear bracket compatible with the quadratic one, and a vector
//! space of such `a` yields a family of pairwise compatible linear brackets.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie::{center_basis, compatibility_residual, is_casimir, jacobiator, killing_semisimple, lie_poisson_bracket, BracketPencil, LieStructure};
use crate::linalg::{self, CMat, RANK_TOL};
use crate::poly::{Exponent, PolyElement};
use crate::report::{Check, Report};
use crate::scalar::C64;

/// Quadratic bracket `{x_i, x_j} = sum_{p,q} G^{pq}_{ij} x_p x_q`, stored
/// antisymmetric in `(i, j)` and symmetric in `(p, q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticPoisson {
    dim: usize,
    gamma: Vec<f64>,
    defined: Vec<bool>,
}

impl QuadraticPoisson {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, gamma: vec![0.0; dim.pow(4)], defined: vec![false; dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn idx(&self, i: usize, j: usize, p: usize, q: usize) -> usize {
        ((i * self.dim + j) * self.dim + p) * self.dim + q
    }

    pub fn gamma(&self, i: usize, j: usize, p: usize, q: usize) -> f64 {
        self.gamma[self.idx(i, j, p, q)]
    }

    /// Sets `{x_i, x_j}` to the quadratic form `sum c x_p x_q` (and
    /// `{x_j, x_i}` to its negative). A relation given twice must agree.
    pub fn set_relation(&mut self, i: usize, j: usize, terms: &[(f64, usize, usize)]) -> Result<()> {
        let d = self.dim;
        if i == j || i >= d || j >= d {
            return Err(Error::InvalidParameter(format!("bad relation indices ({i}, {j})")));
        }
        let mut form = vec![0.0; d * d];
        for &(c, p, q) in terms {
            form[p * d + q] += c / 2.0;
            form[q * d + p] += c / 2.0;
        }
        if self.defined[i * d + j] {
            let clash = (0..d * d).map(|pq| (self.gamma[self.idx(i, j, pq / d, pq % d)] - form[pq]).abs()).fold(0.0, f64::max);
            if clash > 1e-12 * (1.0 + self.max_magnitude()) {
                return Err(Error::InvalidParameter(format!("relation ({i}, {j}) given twice with different values")));
            }
        }
        for pq in 0..d * d {
            let (p, q) = (pq / d, pq % d);
            let a = self.idx(i, j, p, q);
            let b = self.idx(j, i, p, q);
            self.gamma[a] = form[pq];
            self.gamma[b] = -form[pq];
        }
        self.defined[i * d + j] = true;
        self.defined[j * d + i] = true;
        Ok(())
    }

    pub fn max_magnitude(&self) -> f64 {
        self.gamma.iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    /// `{x_i, x_j}` as a polynomial.
    pub fn relation(&self, i: usize, j: usize) -> PolyElement {
        let d = self.dim;
        let mut out = PolyElement::zero(d);
        for p in 0..d {
            for q in p..d {
                let c = if p == q { self.gamma(i, j, p, p) } else { 2.0 * self.gamma(i, j, p, q) };
                if c != 0.0 {
                    let mut e = vec![0u32; d];
                    e[p] += 1;
                    e[q] += 1;
                    out.add_term(e, C64::new(c, 0.0));
                }
            }
        }
        out
    }

    /// `{f, g} = sum_{i,j} d_i f d_j g {x_i, x_j}`.
    pub fn bracket(&self, f: &PolyElement, g: &PolyElement) -> PolyElement {
        let d = self.dim;
        let df: Vec<PolyElement> = (0..d).map(|i| f.derivative(i)).collect();
        let dg: Vec<PolyElement> = (0..d).map(|i| g.derivative(i)).collect();
        let mut out = PolyElement::zero(d);
        for i in 0..d {
            if df[i].is_zero() {
                continue;
            }
            for j in 0..d {
                if i == j || dg[j].is_zero() {
                    continue;
                }
                out = &out + &(&(&df[i] * &dg[j]) * &self.relation(i, j));
            }
        }
        out
    }

    /// Largest coefficient of the cubic `{{x_i, x_j}, x_k} + cyclic` over
    /// `i < j < k`, relative to `max |G|^2`.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim;
        let rel: Vec<Vec<PolyElement>> = (0..d).map(|i| (0..d).map(|j| self.relation(i, j)).collect()).collect();
        // {P, x_k} = sum_l d_l P {x_l, x_k}
        let with_var = |p: &PolyElement, k: usize| {
            let mut out = PolyElement::zero(d);
            for l in 0..d {
                let dp = p.derivative(l);
                if !dp.is_zero() && l != k {
                    out = &out + &(&dp * &rel[l][k]);
                }
            }
            out
        };
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                for k in j + 1..d {
                    let s = &(&with_var(&rel[i][j], k) + &with_var(&rel[j][k], i)) + &with_var(&rel[k][i], j);
                    worst = worst.max(s.norm());
                }
            }
        }
        let scale = self.max_magnitude().powi(2);
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// `max_{i,j} |G^{pq}_{ij} a_p a_q|`; zero exactly for admissible `a`.
    pub fn admissibility_residual(&self, a: &[f64]) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                let mut s = 0.0;
                for p in 0..d {
                    if a[p] == 0.0 {
                        continue;
                    }
                    for q in 0..d {
                        s += self.gamma(i, j, p, q) * a[p] * a[q];
                    }
                }
                worst = worst.max(s.abs());
            }
        }
        worst
    }

    /// The `u^1` coefficient: `c^q_{ij} = 2 sum_p G^{pq}_{ij} a_p`.
    pub fn linear_part(&self, a: &[f64]) -> LieStructure {
        let d = self.dim;
        LieStructure::from_upper(d, "shifted", |i, j, q| {
            let s: f64 = (0..d).map(|p| self.gamma(i, j, p, q) * a[p]).sum();
            C64::new(2.0 * s, 0.0)
        })
    }

    /// Expands the shift by `a`; fails with the `u^2` residual if `a` is not
    /// admissible at tolerance `tol` (relative to `|G| |a|^2`).
    pub fn shift(&self, a: &[f64], tol: f64) -> Result<ShiftResult> {
        if a.len() != self.dim {
            return Err(Error::InvalidParameter(format!("shift vector has length {}, expected {}", a.len(), self.dim)));
        }
        let norm2: f64 = a.iter().map(|v| v * v).sum();
        let quadratic_residual = self.admissibility_residual(a);
        let relative = quadratic_residual / (self.max_magnitude() * norm2).max(1e-300);
        if !(relative < tol) {
            return Err(Error::NotAdmissible(relative));
        }
        Ok(ShiftResult { shift: a.to_vec(), linear: self.linear_part(a), quadratic_residual })
    }

    /// Jacobian of `a -> (G(a, a)_{ij})_{i<j}`.
    fn admissibility_jacobian(&self, a: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
        let d = self.dim;
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
        let mut jac = DMatrix::zeros(pairs.len(), d);
        let mut value = vec![0.0; pairs.len()];
        for (row, &(i, j)) in pairs.iter().enumerate() {
            for p in 0..d {
                let mut s = 0.0;
                for q in 0..d {
                    s += self.gamma(i, j, p, q) * a[q];
                }
                jac[(row, p)] = 2.0 * s;
                value[row] += s * a[p];
            }
        }
        (jac, value)
    }
}

/// Outcome of shifting by an admissible vector.
#[derive(Clone, Debug)]
pub struct ShiftResult {
    pub shift: Vec<f64>,
    /// The `u^1` term.
    pub linear: LieStructure,
    /// `max |G(a, a)|`, the `u^2` term.
    pub quadratic_residual: f64,
}

/// The quadratic algebra on `x_0, ..., x_7` with indices mod 8.
#[derive(Clone, Debug)]
pub struct Q83Instance {
    pub k1: f64,
    pub k2: f64,
    pub p: [f64; 4],
    pub poisson: QuadraticPoisson,
}

/// Coefficients `(p_1, p_2, p_3, p_4)` of the relations.
pub fn q83_coefficients(k1: f64, k2: f64) -> Result<[f64; 4]> {
    if !(k1 > 0.0 && k2 > 0.0) {
        return Err(Error::InvalidParameter(format!("need k1, k2 > 0, got k1 = {k1}, k2 = {k2}")));
    }
    let s = 4.0 * k2 * k2 + k1 * k1;
    Ok([
        -0.5 * (k1 / k2).sqrt() * s.sqrt(),
        (k2 / k1).sqrt() * s.sqrt(),
        (k1 * k2 * s).powf(0.25),
        (k1 * k2).powf(-0.25) * s.powf(0.75),
    ])
}

pub fn build_q83(k1: f64, k2: f64) -> Result<Q83Instance> {
    let p = q83_coefficients(k1, k2)?;
    let [p1, p2, p3, p4] = p;
    let m = |v: usize| v % 8;
    let mut poisson = QuadraticPoisson::zeros(8);
    for i in 0..8 {
        poisson.set_relation(i, m(i + 1), &[(p1, i, m(i + 1)), (k1, m(i + 2), m(i + 7)), (-2.0 * k2, m(i + 3), m(i + 6)), (p2, m(i + 4), m(i + 5))])?;
        poisson.set_relation(i, m(i + 2), &[(p3, m(i + 1), m(i + 1)), (-p3, m(i + 5), m(i + 5))])?;
        poisson.set_relation(i, m(i + 3), &[(p1, i, m(i + 3)), (k1, m(i + 5), m(i + 6)), (-2.0 * k2, m(i + 1), m(i + 2)), (p2, m(i + 4), m(i + 7))])?;
        poisson.set_relation(i, m(i + 4), &[(p4, m(i + 1), m(i + 3)), (-p4, m(i + 5), m(i + 7))])?;
    }
    Ok(Q83Instance { k1, k2, p, poisson })
}

impl Q83Instance {
    /// `C_i = k2 (x_i^2 + x_{i+4}^2) + p_3 (x_{i+3} x_{i+5} + x_{i+1} x_{i+7}) + k1 x_{i+2} x_{i+6}`.
    pub fn casimir(&self, i: usize) -> PolyElement {
        let term = |c: f64, a: usize, b: usize| {
            let mut e = vec![0u32; 8];
            e[(i + a) % 8] += 1;
            e[(i + b) % 8] += 1;
            PolyElement::monomial(e, C64::new(c, 0.0))
        };
        let p3 = self.p[2];
        [term(self.k2, 0, 0), term(self.k2, 4, 4), term(p3, 3, 5), term(p3, 1, 7), term(self.k1, 2, 6)]
            .into_iter()
            .fold(PolyElement::zero(8), |acc, t| &acc + &t)
    }

    /// `max_j |{C_i, x_j}|` relative to `|C_i| |G|`.
    pub fn casimir_residual(&self, i: usize) -> f64 {
        let c = self.casimir(i);
        let scale = c.norm() * self.poisson.max_magnitude();
        (0..8).map(|j| self.poisson.bracket(&c, &PolyElement::var(8, j)).norm()).fold(0.0, f64::max) / scale
    }

    /// Numerical rank of the gradients of the four `C_i` at a random point.
    pub fn casimir_jacobian_rank(&self, seed: u64) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<C64> = (0..8).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let rows: Vec<Vec<C64>> = (0..4).map(|i| self.casimir(i).gradient(&x)).collect();
        let m = CMat::from_fn(4, 8, |r, c| rows[r][c]);
        linalg::rank(&m, 1e-10)
    }
}

/// The four printed two-parameter families of admissible vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Family {
    APlus,
    AMinus,
    BPlus,
    BMinus,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::APlus, Family::AMinus, Family::BPlus, Family::BMinus];

    /// `(t1, 0, t2, 0, +-t1, 0, +-t2, 0)` for `a`, shifted by one slot for `b`.
    pub fn vector(self, t1: f64, t2: f64) -> Vec<f64> {
        let sign = match self {
            Family::APlus | Family::BPlus => 1.0,
            Family::AMinus | Family::BMinus => -1.0,
        };
        let base = [t1, 0.0, t2, 0.0, sign * t1, 0.0, sign * t2, 0.0];
        match self {
            Family::APlus | Family::AMinus => base.to_vec(),
            Family::BPlus | Family::BMinus => (0..8).map(|i| base[(i + 7) % 8]).collect(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::APlus => "a+",
            Family::AMinus => "a-",
            Family::BPlus => "b+",
            Family::BMinus => "b-",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.label() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family {s:?}, expected one of a+, a-, b+, b-")))
    }
}

/// The two linear brackets spanned by shifts along a family.
#[derive(Clone, Debug)]
pub struct ShiftedPencil {
    pub family: Family,
    pub first: LieStructure,
    pub second: LieStructure,
    pub quadratic_residual: f64,
}

impl ShiftedPencil {
    pub fn new(instance: &Q83Instance, family: Family) -> Result<Self> {
        let first = instance.poisson.shift(&family.vector(1.0, 0.0), 1e-12)?;
        let second = instance.poisson.shift(&family.vector(0.0, 1.0), 1e-12)?;
        let mut first_bracket = first.linear;
        let mut second_bracket = second.linear;
        first_bracket.label = format!("{family}:t1");
        second_bracket.label = format!("{family}:t2");
        Ok(Self {
            family,
            first: first_bracket,
            second: second_bracket,
            quadratic_residual: first.quadratic_residual.max(second.quadratic_residual),
        })
    }

    pub fn pencil(&self) -> BracketPencil {
        BracketPencil::new(self.first.clone(), self.second.clone())
    }

    pub fn at(&self, t1: f64, t2: f64) -> LieStructure {
        self.first.combine(&C64::new(t1, 0.0), &self.second, &C64::new(t2, 0.0))
    }

    /// Deviation of the direct shift by `family.vector(t1, t2)` from
    /// `t1 {.,.}_1 + t2 {.,.}_2`.
    pub fn linearity_residual(&self, instance: &Q83Instance, t1: f64, t2: f64) -> f64 {
        let direct = instance.poisson.linear_part(&self.family.vector(t1, t2));
        let combo = self.at(t1, t2);
        direct.entries().map(|(i, j, k, v)| (v - combo.get(i, j, k)).norm()).fold(0.0, f64::max)
    }
}

fn vector_of(p: &PolyElement) -> Vec<C64> {
    let d = p.num_vars();
    (0..d)
        .map(|i| {
            let mut e = vec![0u32; d];
            e[i] = 1;
            p.coefficient(&e)
        })
        .collect()
}

/// Linear central elements of `c` as coefficient vectors.
pub fn linear_center(c: &LieStructure) -> Vec<Vec<C64>> {
    center_basis(c).iter().map(vector_of).collect()
}

/// Largest distance from a vector of `expected` to the span of `found`,
/// or infinity when the dimensions differ.
pub fn span_distance(found: &[Vec<C64>], expected: &[Vec<C64>]) -> f64 {
    if found.len() != expected.len() {
        return f64::INFINITY;
    }
    if found.is_empty() {
        return 0.0;
    }
    let d = found[0].len();
    let a = CMat::from_fn(d, found.len(), |r, c| found[c][r]);
    expected
        .iter()
        .map(|v| {
            let b = CMat::from_column_slice(d, 1, v);
            let (x, _) = linalg::lstsq(&a, &b, RANK_TOL);
            let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
            (&a * x - b).camax() / scale
        })
        .fold(0.0, f64::max)
}

/// Quotient of `c` by the span of central vectors: coordinates are
/// completed by unit vectors and brackets are taken modulo the center.
/// Returns the quotient and the indices of the unit vectors kept.
pub fn central_quotient(c: &LieStructure, center: &[Vec<C64>]) -> Result<(LieStructure, Vec<usize>)> {
    let d = c.dim();
    let z = center.len();
    let mut frame: Vec<Vec<C64>> = center.to_vec();
    let mut kept = Vec::new();
    for i in 0..d {
        let mut e = vec![C64::new(0.0, 0.0); d];
        e[i] = C64::new(1.0, 0.0);
        frame.push(e);
        let m = CMat::from_fn(d, frame.len(), |r, col| frame[col][r]);
        if linalg::rank(&m, 1e-9) == frame.len() {
            kept.push(i);
        } else {
            frame.pop();
        }
    }
    if frame.len() != d {
        return Err(Error::Singular("center vectors are linearly dependent".into()));
    }
    let basis = CMat::from_fn(d, d, |r, col| frame[col][r]);
    let inverse = basis.clone().try_inverse().ok_or_else(|| Error::Singular("adapted frame is singular".into()))?;
    let q = d - z;
    let reduced = LieStructure::from_upper(q, format!("{}/center", c.label), |a, b, r| {
        let (ia, ib) = (kept[a], kept[b]);
        (0..d).map(|k| c.get(ia, ib, k) * inverse[(z + r, k)]).sum()
    });
    Ok((reduced, kept))
}

/// Options for the randomized search of admissible vectors.
#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub starts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { starts: 120, iterations: 60, seed: 17 }
    }
}

/// Linear component of admissible vectors, given by an orthonormal basis.
#[derive(Clone, Debug)]
pub struct AdmissibleComponent {
    pub basis: Vec<Vec<f64>>,
    pub hits: usize,
}

fn subspace_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    // residual of projecting each vector of b onto span(a), with a orthonormal
    b.iter()
        .map(|v| {
            let mut r = v.clone();
            for u in a {
                let dot: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
                for (ri, ui) in r.iter_mut().zip(u) {
                    *ri -= dot * ui;
                }
            }
            r.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
}

/// Gauss-Newton from random unit vectors on `G(a, a) = 0`, clustering the
/// converged points by the kernel of the Jacobian. A vector-space component
/// equals its own tangent space, so each cluster is that kernel.
pub fn search_admissible(poisson: &QuadraticPoisson, opts: SearchOptions) -> Vec<AdmissibleComponent> {
    let d = poisson.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let scale = poisson.max_magnitude();
    let mut comps: Vec<AdmissibleComponent> = Vec::new();
    for _ in 0..opts.starts {
        let mut a: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut converged = false;
        for _ in 0..opts.iterations {
            let n = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            a.iter_mut().for_each(|v| *v /= n);
            let (jac, value) = poisson.admissibility_jacobian(&a);
            let res = value.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            if res < 1e-14 * scale {
                converged = true;
                break;
            }
            // steps along `a` only rescale it, since `J a = 2 G(a, a)`
            let along = DMatrix::from_column_slice(d, 1, &a);
            let tangent = &jac * (DMatrix::identity(d, d) - &along * along.transpose());
            let rhs = DMatrix::from_column_slice(value.len(), 1, &value);
            let Ok(step) = tangent.svd(true, true).solve(&rhs, 1e-10 * scale) else { break };
            for (v, s) in a.iter_mut().zip(step.iter()) {
                *v -= s;
            }
        }
        if !converged {
            continue;
        }
        let (jac, _) = poisson.admissibility_jacobian(&a);
        let svd = jac.transpose().svd(true, false);
        let u = svd.u.expect("left singular vectors");
        let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let kernel: Vec<Vec<f64>> = (0..d)
            .filter(|&i| i >= svd.singular_values.len() || svd.singular_values[i] < 1e-8 * top)
            .map(|i| u.column(i).iter().cloned().collect())
            .collect();
        if kernel.is_empty() {
            continue;
        }
        match comps.iter_mut().find(|c| c.basis.len() == kernel.len() && subspace_gap(&c.basis, &kernel) < 1e-6) {
            Some(c) => c.hits += 1,
            None => comps.push(AdmissibleComponent { basis: kernel, hits: 1 }),
        }
    }
    comps
}

/// Commuting quadratic integrals of a pencil `c1 + lambda c2`.
#[derive(Clone, Debug)]
pub struct LenardMagri {
    /// `lambda`-coefficients of each polynomial Casimir family, lowest first.
    pub chains: Vec<Vec<PolyElement>>,
    /// Linearly independent spanning set of all chain coefficients.
    pub integrals: Vec<PolyElement>,
    /// Degree in `lambda` at which the coefficient span stabilized.
    pub degree: usize,
    /// Number of functionally independent integrals at a random point.
    pub functional_rank: usize,
    /// Largest `{I_a, I_b}` under either bracket, relative.
    pub commutator: f64,
    /// Largest Casimir defect of the lowest coefficients with respect to `c1`.
    pub endpoint: f64,
}

fn quadratic_monomials(d: usize) -> Vec<Exponent> {
    let mut out = Vec::new();
    for p in 0..d {
        for q in p..d {
            let mut e = vec![0u32; d];
            e[p] += 1;
            e[q] += 1;
            out.push(e);
        }
    }
    out
}

/// Matrix of `Q -> ({Q, x_j})_j` on quadratics, rows indexed by
/// `(j, monomial)`.
fn quadratic_casimir_operator(c: &LieStructure, monomials: &[Exponent]) -> CMat {
    let d = c.dim();
    let nm = monomials.len();
    let mut m = CMat::zeros(d * nm, nm);
    for (col, e) in monomials.iter().enumerate() {
        let q = PolyElement::monomial(e.clone(), C64::new(1.0, 0.0));
        for j in 0..d {
            let b = lie_poisson_bracket(&q, &PolyElement::var(d, j), c);
            for (row, f) in monomials.iter().enumerate() {
                m[(j * nm + row, col)] = b.coefficient(f);
            }
        }
    }
    m
}

fn quadratic_from(coeffs: &[C64], monomials: &[Exponent]) -> PolyElement {
    let d = monomials[0].len();
    let mut p = PolyElement::zero(d);
    for (c, e) in coeffs.iter().zip(monomials) {
        if c.norm() > 1e-13 {
            p.add_term(e.clone(), *c);
        }
    }
    p
}

const MAX_CHAIN_DEGREE: usize = 6;

/// Quadratic Casimirs of `c1 + lambda c2` as polynomials in `lambda`,
/// solved degree by degree from `M_1 Q_0 = 0`, `M_1 Q_s + M_2 Q_{s-1} = 0`,
/// `M_2 Q_D = 0`, until their coefficients span every Casimir of every
/// sampled member.
pub fn lenard_magri(pencil: &BracketPencil, seed: u64) -> Result<LenardMagri> {
    let d = pencil.dim();
    let monomials = quadratic_monomials(d);
    let nm = monomials.len();
    let m1 = quadratic_casimir_operator(&pencil.c1, &monomials);
    let m2 = quadratic_casimir_operator(&pencil.c2, &monomials);
    let rows = m1.nrows();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled: Vec<CMat> = Vec::new();
    for _ in 0..8 {
        let lambda = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        sampled.push(linalg::null_space(&(&m1 + &m2 * lambda), RANK_TOL));
    }
    if sampled.iter().all(|k| k.ncols() == 0) {
        return Err(Error::DegeneratePencil("no quadratic Casimirs at any sampled member".into()));
    }
    let cols: Vec<_> = sampled.iter().flat_map(|k| k.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>()).collect();
    let sampled_span = CMat::from_columns(&cols);
    let target_rank = linalg::rank(&sampled_span, 1e-9);

    for degree in 0..=MAX_CHAIN_DEGREE {
        let width = (degree + 1) * nm;
        let mut block = CMat::zeros((degree + 2) * rows, width);
        for s in 0..=degree {
            block.view_mut((s * rows, s * nm), (rows, nm)).copy_from(&m1);
            block.view_mut(((s + 1) * rows, s * nm), (rows, nm)).copy_from(&m2);
        }
        let kernel = linalg::null_space(&block, RANK_TOL);
        if kernel.ncols() == 0 {
            continue;
        }
        let mut coeff_cols = Vec::new();
        let mut chains = Vec::new();
        for col in kernel.column_iter() {
            let mut chain = Vec::new();
            for s in 0..=degree {
                let part: Vec<C64> = col.rows(s * nm, nm).iter().cloned().collect();
                coeff_cols.push(CMat::from_column_slice(nm, 1, &part));
                chain.push(quadratic_from(&part, &monomials));
            }
            chains.push(chain);
        }
        let span = CMat::from_columns(&coeff_cols.iter().map(|c| c.column(0).into_owned()).collect::<Vec<_>>());
        let combined = CMat::from_columns(&[span.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>(), cols.clone()].concat());
        if linalg::rank(&span, 1e-9) < target_rank || linalg::rank(&combined, 1e-9) > target_rank {
            continue;
        }
        let svd = span.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors");
        let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let integrals: Vec<PolyElement> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > 1e-9 * top)
            .map(|i| quadratic_from(&u.column(i).iter().cloned().collect::<Vec<_>>(), &monomials))
            .collect();
        let commutator = mutual_commutator(&integrals, pencil);
        let endpoint = chains
            .iter()
            .filter_map(|ch| ch.iter().find(|q| !q.is_zero()))
            .map(|q| is_casimir(q, &pencil.c1))
            .fold(0.0, f64::max);
        let x: Vec<C64> = (0..d).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let grads = CMat::from_fn(integrals.len(), d, |r, c| integrals[r].gradient(&x)[c]);
        let functional_rank = linalg::rank(&grads, 1e-9);
        return Ok(LenardMagri { chains, integrals, degree, functional_rank, commutator, endpoint });
    }
    Err(Error::DegeneratePencil(format!("Casimir chains did not close up to degree {MAX_CHAIN_DEGREE}")))
}

/// `max |{I_a, I_b}_c| / (|I_a| |I_b| |c|)` over pairs and both brackets.
pub fn mutual_commutator(integrals: &[PolyElement], pencil: &BracketPencil) -> f64 {
    let mut worst: f64 = 0.0;
    for c in [&pencil.c1, &pencil.c2] {
        let cn = c.max_magnitude();
        for a in 0..integrals.len() {
            for b in a + 1..integrals.len() {
                let v = lie_poisson_bracket(&integrals[a], &integrals[b], c).norm();
                worst = worst.max(v / (integrals[a].norm() * integrals[b].norm() * cn).max(1e-300));
            }
        }
    }
    worst
}

/// Parameters of the full battery.
#[derive(Clone, Copy, Debug)]
pub struct Q83Config {
    pub k1: f64,
    pub k2: f64,
    pub family: Family,
    pub t1: f64,
    pub t2: f64,
    pub seed: u64,
    /// Multiplies every residual tolerance of the battery.
    pub tolerance_scale: f64,
}

impl Default for Q83Config {
    fn default() -> Self {
        Self { k1: 1.0, k2: 1.0, family: Family::APlus, t1: 1.0, t2: 0.7, seed: 5, tolerance_scale: 1.0 }
    }
}

/// Grid `{-2, -1, 0.5, 1, 2}^2` of family parameters.
pub fn parameter_grid() -> Vec<(f64, f64)> {
    let ts = [-2.0, -1.0, 0.5, 1.0, 2.0];
    ts.iter().flat_map(|&a| ts.iter().map(move |&b| (a, b))).collect()
}

fn unit_sum(d: usize, idx: &[(usize, f64)]) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); d];
    for &(i, c) in idx {
        v[i] = C64::new(c, 0.0);
    }
    v
}

/// Every check of the shift pipeline, one entry each.
pub fn q83_battery(cfg: &Q83Config) -> Result<Report> {
    let mut report = Report::new(format!("q83 shift (k1 = {}, k2 = {}, family {})", cfg.k1, cfg.k2, cfg.family));
    report.note("t1, t2", format!("{}, {}", cfg.t1, cfg.t2));
    report.note("seed", cfg.seed);
    report.note("tolerance scale", cfg.tolerance_scale);
    let inst = build_q83(cfg.k1, cfg.k2)?;
    report.note("p1..p4", format!("{:?}", inst.p));
    let g = &inst.poisson;

    report.timed(|| Check::below("quadratic jacobi", g.jacobi_residual(), 1e-10 * cfg.tolerance_scale));
    report.timed(|| Check::below("quadratic casimirs {C_i, x_j}", (0..4).map(|i| inst.casimir_residual(i)).fold(0.0, f64::max), 1e-9 * cfg.tolerance_scale));
    let cas: Vec<PolyElement> = (0..4).map(|i| inst.casimir(i)).collect();
    let mutual = (0..4)
        .flat_map(|a| (a + 1..4).map(move |b| (a, b)))
        .map(|(a, b)| g.bracket(&cas[a], &cas[b]).norm() / (cas[a].norm() * cas[b].norm() * g.max_magnitude()))
        .fold(0.0, f64::max);
    report.push(Check::below("casimirs commute", mutual, 1e-9 * cfg.tolerance_scale));
    let rank = inst.casimir_jacobian_rank(cfg.seed);
    report.push(Check::holds("casimirs independent", rank == 4, format!("jacobian rank {rank}")));

    let grid = parameter_grid();
    for fam in Family::ALL {
        let worst = grid.iter().map(|&(t1, t2)| g.admissibility_residual(&fam.vector(t1, t2))).fold(0.0, f64::max);
        report.push(Check::below(format!("admissible {fam} on 5x5 grid"), worst, 1e-12 * cfg.tolerance_scale));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let random: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    report.push(Check::above("random vector is not admissible", g.admissibility_residual(&random), 1e-3));
    let k_not_central = [unit_sum(8, &[(0, 1.0), (4, 1.0)]), unit_sum(8, &[(2, 1.0), (6, 1.0)])]
        .iter()
        .map(|v| (0..8).map(|j| g.bracket(&PolyElement::linear(v), &PolyElement::var(8, j)).norm()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min);
    report.push(Check::above("K1, K2 not central for the quadratic bracket", k_not_central, 1e-3));

    let shifted = ShiftedPencil::new(&inst, cfg.family)?;
    let direct = g.shift(&cfg.family.vector(cfg.t1, cfg.t2), 1e-12)?;
    report.push(Check::below("u^2 term of the shift", direct.quadratic_residual, 1e-12 * cfg.tolerance_scale));
    let lin = grid.iter().map(|&(t1, t2)| shifted.linearity_residual(&inst, t1, t2)).fold(0.0, f64::max);
    report.push(Check::below("shift is linear in (t1, t2)", lin, 1e-12 * cfg.tolerance_scale));
    let jac = jacobiator(&shifted.first).max(jacobiator(&shifted.second));
    report.push(Check::below("linear brackets satisfy jacobi", jac, 1e-10 * cfg.tolerance_scale));
    report.push(Check::below("linear brackets are compatible", compatibility_residual(&shifted.pencil()), 1e-10 * cfg.tolerance_scale));

    let generic = shifted.at(cfg.t1, cfg.t2);
    let center = linear_center(&generic);
    report.push(Check::holds("center dimension 2", center.len() == 2, format!("found {}", center.len())));
    let drift = grid
        .iter()
        .map(|&(t1, t2)| span_distance(&linear_center(&shifted.at(t1, t2)), &center))
        .fold(0.0, f64::max);
    report.push(Check::below("center independent of (t1, t2)", drift, 1e-10 * cfg.tolerance_scale));
    if cfg.family == Family::APlus {
        let expected = [unit_sum(8, &[(0, 1.0), (4, 1.0)]), unit_sum(8, &[(2, 1.0), (6, 1.0)])];
        report.push(Check::below("center = span{x0 + x4, x2 + x6}", span_distance(&center, &expected), 1e-10 * cfg.tolerance_scale));
    }
    let full = killing_semisimple(&generic, 1e-8, cfg.seed);
    report.push(Check::holds("unreduced algebra is not semisimple", !full.semisimple, format!("killing condition {:.2e}", full.condition)));

    let (q1, _) = central_quotient(&shifted.first, &center)?;
    let (q2, _) = central_quotient(&shifted.second, &center)?;
    let (qg, _) = central_quotient(&generic, &center)?;
    let reduced = BracketPencil::new(q1, q2);
    report.push(Check::below("reduced brackets compatible", compatibility_residual(&reduced).max(jacobiator(&reduced.c1)).max(jacobiator(&reduced.c2)), 1e-10 * cfg.tolerance_scale));
    let kill = killing_semisimple(&qg, 1e-8, cfg.seed);
    let mut dims = kill.ideal_dims();
    dims.sort_unstable();
    report.push(Check::holds("quotient is semisimple with ideals {3, 3}", kill.semisimple && dims == vec![3, 3], format!("ideals {dims:?}")));

    let start = std::time::Instant::now();
    match lenard_magri(&reduced, cfg.seed) {
        Ok(lm) => {
            let secs = start.elapsed().as_secs_f64();
            report.push(
                Check::below("lenard-magri integrals commute", lm.commutator, 1e-9 * cfg.tolerance_scale)
                    .with_detail(format!("{} integrals, chain degree {}", lm.integrals.len(), lm.degree))
                    .with_seconds(secs),
            );
            report.push(Check::below("lowest chain coefficients are casimirs of c1", lm.endpoint, 1e-9 * cfg.tolerance_scale));
            report.push(Check::holds("at least 4 independent integrals", lm.functional_rank >= 4, format!("rank {}", lm.functional_rank)));
        }
        Err(e) => report.push(Check::holds("lenard-magri integrals commute", false, e.to_string())),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_at_unit_parameters() {
        let p = q83_coefficients(1.0, 1.0).unwrap();
        let five = 5f64;
        assert!((p[0] + five.sqrt() / 2.0).abs() < 1e-14);
        assert!((p[1] - five.sqrt()).abs() < 1e-14);
        assert!((p[2] - five.powf(0.25)).abs() < 1e-14);
        assert!((p[3] - five.powf(0.75)).abs() < 1e-14);
        assert!(q83_coefficients(0.0, 1.0).is_err());
    }

    #[test]
    fn family_labels_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.label().parse::<Family>().unwrap(), f);
        }
        assert!("c+".parse::<Family>().is_err());
    }

    #[test]
    fn b_family_is_a_shifted() {
        assert_eq!(Family::BMinus.vector(2.0, -1.0), vec![0.0, 2.0, 0.0, -1.0, 0.0, -2.0, 0.0, 1.0]);
    }

    #[test]
    fn conflicting_relation_is_rejected() {
        let mut g = QuadraticPoisson::zeros(3);
        g.set_relation(0, 1, &[(1.0, 2, 2)]).unwrap();
        assert!(g.set_relation(1, 0, &[(1.0, 2, 2)]).is_err());
        assert!(g.set_relation(1, 0, &[(-1.0, 2, 2)]).is_ok());
    }
}
