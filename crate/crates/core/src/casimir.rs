//! Casimir elements of the pencil as polynomials in `u` with coefficients in
//! the symmetric algebra of `V_m`.
//!
//! A multivariable function of `(z_1, ..., z_p)` in the tensor product of
//! sector spaces is expanded in the product basis by collocation on `m`
//! nodes per variable; the coefficient of `f_{j_1}(z_1) ... f_{j_p}(z_p)`
//! becomes the coefficient of the monomial `x_{j_1} ... x_{j_p}`.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::elliptic::{r2_point, PencilData, TRUNC_TOL};
use crate::error::{Error, Result};
use crate::heisenberg::{sectors, SectorIndex};
use crate::lie::{is_casimir, LieStructure};
use crate::linalg::{self, CMat, RANK_TOL};
use crate::poly::PolyElement;
use crate::scalar::{cis_turns, exp_turns, C64};
use crate::theta::{build_theta_space, pencil_roots, theta_generator, ThetaFunction};

/// Relative size below which a `u`-coefficient counts as zero.
/// Below this sup norm a multivariable function counts as identically zero.
const VANISHING_SCALE: f64 = 1e-10;

pub const DEGREE_TOL: f64 = 1e-8;

/// Tuples of nonzero sectors whose `alpha`s and `beta`s both sum to zero mod `n`.
#[derive(Clone, Debug)]
pub struct IndexSetDp {
    pub n: usize,
    pub p: usize,
    pub entries: Vec<Vec<SectorIndex>>,
}

pub fn build_dp(n: usize, p: usize) -> IndexSetDp {
    assert!(p >= 1);
    let secs = sectors(n);
    let mut entries = Vec::new();
    let mut idx = vec![0usize; p];
    loop {
        let tuple: Vec<SectorIndex> = idx.iter().map(|&i| secs[i]).collect();
        let sa: usize = tuple.iter().map(|s| s.alpha).sum();
        let sb: usize = tuple.iter().map(|s| s.beta).sum();
        if sa % n == 0 && sb % n == 0 {
            entries.push(tuple);
        }
        let mut q = p;
        loop {
            if q == 0 {
                return IndexSetDp { n, p, entries };
            }
            q -= 1;
            idx[q] += 1;
            if idx[q] < secs.len() {
                break;
            }
            idx[q] = 0;
        }
    }
}

/// `((n^2 - 1)^p + (n^2 - 1)(-1)^p) / n^2`.
pub fn dp_cardinality(n: usize, p: usize) -> usize {
    let d = (n * n - 1) as i64;
    let sign = if p % 2 == 0 { 1 } else { -1 };
    ((d.pow(p as u32) + d * sign) / (n * n) as i64) as usize
}

/// `exp(2 pi i k / n sum_{j1 <= j2} alpha_{j1} beta_{j2})`.
pub fn dp_phase(n: usize, k: usize, tuple: &[SectorIndex]) -> C64 {
    let mut acc = 0usize;
    for j1 in 0..tuple.len() {
        for j2 in j1..tuple.len() {
            acc += tuple[j1].alpha * tuple[j2].beta;
        }
    }
    cis_turns((k * (acc % n)) as f64 / n as f64)
}

/// `beta` representatives used in the multivariable functions: reduced
/// for all but the last position, which takes minus the sum of the others
/// so that the representatives add up to zero. With any other choice the
/// `tau`-periodicity in the variables picks up a constant factor.
pub fn signed_betas(tuple: &[SectorIndex]) -> Vec<i64> {
    let mut out: Vec<i64> = tuple.iter().map(|s| s.beta as i64).collect();
    if let Some((last, rest)) = out.split_last_mut() {
        *last = -rest.iter().sum::<i64>();
    }
    out
}

/// Polynomial in `u`, lowest degree first.
pub type UPoly = Vec<C64>;

fn upoly_mul(a: &[C64], b: &[C64]) -> UPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn upoly_axpy(acc: &mut UPoly, s: C64, x: &[C64]) {
    if acc.len() < x.len() {
        acc.resize(x.len(), C64::new(0.0, 0.0));
    }
    for (a, v) in acc.iter_mut().zip(x) {
        *a += s * v;
    }
}

/// A central element written as `sum_d u^d K_d`.
#[derive(Clone, Debug)]
pub struct CasimirElement {
    pub p: usize,
    pub label: String,
    pub u_coeffs: Vec<PolyElement>,
    /// Power of `u` divided out by [`CasimirElement::normalized`].
    pub stripped_valuation: usize,
}

impl CasimirElement {
    pub fn scale(&self) -> f64 {
        self.u_coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Highest `d` with `|K_d| > DEGREE_TOL * max |K_e|`; `None` if zero.
    pub fn degree_u(&self) -> Option<usize> {
        let s = self.scale();
        if s == 0.0 {
            return None;
        }
        (0..self.u_coeffs.len()).rev().find(|&d| self.u_coeffs[d].norm() > DEGREE_TOL * s)
    }

    pub fn valuation_u(&self) -> Option<usize> {
        let s = self.scale();
        if s == 0.0 {
            return None;
        }
        (0..self.u_coeffs.len()).find(|&d| self.u_coeffs[d].norm() > DEGREE_TOL * s)
    }

    /// Divides by the largest power of `u` dividing the element and drops
    /// negligible top coefficients.
    pub fn normalized(&self) -> Self {
        let (Some(v), Some(d)) = (self.valuation_u(), self.degree_u()) else { return self.clone() };
        Self {
            p: self.p,
            label: self.label.clone(),
            u_coeffs: self.u_coeffs[v..=d].to_vec(),
            stripped_valuation: self.stripped_valuation + v,
        }
    }

    pub fn at(&self, u: C64) -> PolyElement {
        let n = self.u_coeffs.first().map(|c| c.num_vars()).unwrap_or(0);
        let mut acc = PolyElement::zero(n);
        let mut pw = C64::new(1.0, 0.0);
        for c in &self.u_coeffs {
            acc = &acc + &c.scaled(pw);
            pw *= u;
        }
        acc
    }

    /// `a * self + b * other`, coefficientwise.
    pub fn combine(&self, a: C64, other: &Self, b: C64) -> Self {
        let len = self.u_coeffs.len().max(other.u_coeffs.len());
        let nv = self.u_coeffs.first().or(other.u_coeffs.first()).map(|c| c.num_vars()).unwrap_or(0);
        let zero = PolyElement::zero(nv);
        let u_coeffs = (0..len)
            .map(|d| &self.u_coeffs.get(d).unwrap_or(&zero).scaled(a) + &other.u_coeffs.get(d).unwrap_or(&zero).scaled(b))
            .collect();
        Self { p: self.p, label: format!("{}+{}", self.label, other.label), u_coeffs, stripped_valuation: 0 }
    }

    /// `max |{K(u), x_j}|` against the pencil member at each `u`.
    pub fn centrality(&self, pencil: &PencilData, us: &[C64]) -> f64 {
        let bracket = pencil.pencil();
        us.iter().map(|u| is_casimir(&self.at(*u), &bracket.at(u))).fold(0.0, f64::max)
    }
}

/// Derivative factor in the last generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeFactor {
    /// `mu2'(z) - u mu1'(z)`, the derivative of the pencil member.
    Pencil,
    /// `mu2'(z) - u mu2'(z)`.
    AsPrinted,
}

/// Scale of the correction term `B` in the last generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrectionScale {
    /// `m / p`, forced by quasi-periodicity in each variable.
    OrderOverDegree,
    /// `m / n`.
    AsPrinted,
}

#[derive(Clone, Copy, Debug)]
pub struct HOptions {
    pub derivative: DerivativeFactor,
    pub scale: CorrectionScale,
}

impl Default for HOptions {
    fn default() -> Self {
        Self { derivative: DerivativeFactor::Pencil, scale: CorrectionScale::OrderOverDegree }
    }
}

/// Expansion of one multivariable function in the product basis.
#[derive(Clone, Debug)]
pub struct MultivarSection {
    pub tuple: Vec<SectorIndex>,
    /// `coeffs[d][flat index]` for the `u^d` part; flat index is
    /// `sum_q j_q m^{p-1-q}`.
    pub coeffs: Vec<Vec<C64>>,
    /// Held-out relative error of the expansion.
    pub residual: f64,
}

/// Which multivariable family to assemble.
#[derive(Clone, Debug)]
enum Kernel<'a> {
    Linear(&'a [ThetaFunction]),
    Last(HOptions),
}

/// Evaluation and expansion context for one pencil.
pub struct CasimirBuilder<'a> {
    pencil: &'a PencilData,
    theta: ThetaFunction,
    nodes: Vec<Vec<C64>>,
    inverses: HashMap<(usize, SectorIndex), CMat>,
    /// Largest held-out expansion error seen so far.
    pub max_expansion_residual: std::cell::Cell<f64>,
}

impl<'a> CasimirBuilder<'a> {
    pub fn new(pencil: &'a PencilData, max_p: usize) -> Result<Self> {
        let lattice = pencil.lattice();
        let theta = theta_generator(lattice, TRUNC_TOL)?;
        let m = pencil.m();
        let nodes: Vec<Vec<C64>> = (0..max_p).map(|q| (0..m).map(|a| r2_point(&lattice, 7 + q * m + a)).collect()).collect();
        let mut inverses = HashMap::new();
        for (q, pts) in nodes.iter().enumerate() {
            for &s in &pencil.basis.sectors {
                let e = CMat::from_fn(m, m, |a, j| pencil.basis.elements[pencil.basis.block(s).start + j].eval(pts[a]));
                let inv = e.try_inverse().ok_or_else(|| Error::Singular("product-basis nodes".into()))?;
                inverses.insert((q, s), inv);
            }
        }
        Ok(Self { pencil, theta, nodes, inverses, max_expansion_residual: std::cell::Cell::new(0.0) })
    }

    /// `k alpha_q / n + k beta_q tau / n` with the signed representatives.
    fn offset(&self, tuple: &[SectorIndex], q: usize) -> C64 {
        let (n, k) = (self.pencil.n() as f64, self.pencil.k() as f64);
        let beta = signed_betas(tuple)[q] as f64;
        C64::new(k * tuple[q].alpha as f64 / n, 0.0) + self.pencil.lattice().tau() * (k * beta / n)
    }

    /// `exp(-2 pi i k sum_q beta_q z_q / n) / prod_q theta(w_q)`. The theta
    /// normalization makes the diagonal values agree across tuples.
    fn prefactor(&self, tuple: &[SectorIndex], z: &[C64]) -> C64 {
        let (n, k) = (self.pencil.n() as f64, self.pencil.k() as f64);
        let mut arg = C64::new(0.0, 0.0);
        let mut norm = C64::new(1.0, 0.0);
        for (q, (b, &zq)) in signed_betas(tuple).into_iter().zip(z).enumerate() {
            arg += zq * (k * b as f64 / n);
            norm *= self.theta.eval(self.offset(tuple, q), 0);
        }
        exp_turns(-arg) / norm
    }

    /// `theta(z_t - z_j + w_j) / theta(z_t - z_j)`.
    fn quotient(&self, tuple: &[SectorIndex], z: &[C64], t: usize, j: usize, deriv: u32) -> C64 {
        let d = z[t] - z[j];
        self.theta.eval(d + self.offset(tuple, j), deriv) / self.theta.eval(d, 0)
    }

    fn member(&self, z: C64, deriv: u32) -> UPoly {
        vec![self.pencil.mu2.eval(z, deriv), -self.pencil.mu1.eval(z, deriv)]
    }

    /// Value of the linear family at `z` for a `u`-polynomial `g`.
    pub fn eval_linear(&self, tuple: &[SectorIndex], g: &[ThetaFunction], z: &[C64]) -> UPoly {
        let p = tuple.len();
        let mut acc: UPoly = Vec::new();
        for t in 0..p {
            let mut scalar = self.theta.eval(self.offset(tuple, t), 0);
            let mut poly: UPoly = g.iter().map(|gi| gi.eval(z[t], 0)).collect();
            for j in 0..p {
                if j != t {
                    scalar *= self.quotient(tuple, z, t, j, 0);
                    poly = upoly_mul(&poly, &self.member(z[j], 0));
                }
            }
            upoly_axpy(&mut acc, scalar, &poly);
        }
        let e = self.prefactor(tuple, z);
        acc.iter().map(|v| v * e).collect()
    }

    /// Value of the last generator's function at `z`.
    pub fn eval_last(&self, tuple: &[SectorIndex], z: &[C64], opts: HOptions) -> UPoly {
        let p = tuple.len();
        let m = self.pencil.m() as f64;
        let mut acc: UPoly = Vec::new();
        let mut b1 = C64::new(0.0, 0.0);
        let mut b2 = C64::new(0.0, 0.0);
        for t in 0..p {
            let th_w = self.theta.eval(self.offset(tuple, t), 0);
            let mut a_t = th_w;
            let mut poly = match opts.derivative {
                DerivativeFactor::Pencil => self.member(z[t], 1),
                DerivativeFactor::AsPrinted => {
                    let d = self.pencil.mu2.eval(z[t], 1);
                    vec![d, -d]
                }
            };
            for j in 0..p {
                if j != t {
                    a_t *= self.quotient(tuple, z, t, j, 0);
                    poly = upoly_mul(&poly, &self.member(z[j], 0));
                }
            }
            upoly_axpy(&mut acc, a_t, &poly);

            let rest = |skip: usize| -> C64 {
                (0..p).filter(|&l| l != t && l != skip).map(|l| self.quotient(tuple, z, t, l, 0)).product()
            };
            for j in 0..p {
                if j != t {
                    b1 += th_w * self.quotient(tuple, z, t, j, 1) * rest(j);
                }
            }
            b2 += self.theta.eval(self.offset(tuple, t), 1) * rest(t);
        }
        let scale = match opts.scale {
            CorrectionScale::OrderOverDegree => m / p as f64,
            CorrectionScale::AsPrinted => m / self.pencil.n() as f64,
        };
        let mut full: UPoly = vec![C64::new(1.0, 0.0)];
        for &zj in z {
            full = upoly_mul(&full, &self.member(zj, 0));
        }
        upoly_axpy(&mut acc, -(b1 + b2) * scale, &full);
        let e = self.prefactor(tuple, z);
        acc.iter().map(|v| v * e).collect()
    }

    fn eval_kernel(&self, kernel: &Kernel, tuple: &[SectorIndex], z: &[C64]) -> UPoly {
        match kernel {
            Kernel::Linear(g) => self.eval_linear(tuple, g, z),
            Kernel::Last(opts) => self.eval_last(tuple, z, *opts),
        }
    }

    fn expand(&self, kernel: &Kernel, tuple: &[SectorIndex]) -> MultivarSection {
        let p = tuple.len();
        let m = self.pencil.m();
        let total = m.pow(p as u32);
        let index = |flat: usize| -> Vec<usize> { (0..p).map(|q| (flat / m.pow((p - 1 - q) as u32)) % m).collect() };
        let mut values: Vec<UPoly> = (0..total)
            .map(|flat| {
                let z: Vec<C64> = index(flat).iter().enumerate().map(|(q, &a)| self.nodes[q][a]).collect();
                self.eval_kernel(kernel, tuple, &z)
            })
            .collect();
        let deg = values.iter().map(|v| v.len()).max().unwrap_or(0);
        for v in values.iter_mut() {
            v.resize(deg, C64::new(0.0, 0.0));
        }
        // apply the inverse node matrix along each axis
        let mut coeffs: Vec<Vec<C64>> = (0..deg).map(|d| values.iter().map(|v| v[d]).collect()).collect();
        for (q, s) in tuple.iter().enumerate() {
            let inv = &self.inverses[&(q, *s)];
            let stride = m.pow((p - 1 - q) as u32);
            for layer in coeffs.iter_mut() {
                let mut out = vec![C64::new(0.0, 0.0); total];
                for (flat, o) in out.iter_mut().enumerate() {
                    let j = (flat / stride) % m;
                    let base = flat - j * stride;
                    for a in 0..m {
                        *o += inv[(j, a)] * layer[base + a * stride];
                    }
                }
                *layer = out;
            }
        }
        let section = MultivarSection { tuple: tuple.to_vec(), coeffs, residual: 0.0 };
        let residual = self.check_expansion(kernel, &section);
        self.max_expansion_residual.set(self.max_expansion_residual.get().max(residual));
        MultivarSection { residual, ..section }
    }

    /// Evaluates an expansion at `z` as a `u`-polynomial.
    pub fn eval_section(&self, section: &MultivarSection, z: &[C64]) -> UPoly {
        let p = section.tuple.len();
        let m = self.pencil.m();
        let basis = &self.pencil.basis;
        let per_var: Vec<Vec<C64>> = section.tuple.iter().zip(z).map(|(&s, &zq)| basis.sector_values(s, zq)).collect();
        section
            .coeffs
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .enumerate()
                    .map(|(flat, c)| {
                        let mut v = *c;
                        for q in 0..p {
                            v *= per_var[q][(flat / m.pow((p - 1 - q) as u32)) % m];
                        }
                        v
                    })
                    .sum()
            })
            .collect()
    }

    fn check_expansion(&self, kernel: &Kernel, section: &MultivarSection) -> f64 {
        let lattice = self.pencil.lattice();
        let p = section.tuple.len();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for trial in 0..4 {
            let z: Vec<C64> = (0..p).map(|q| r2_point(&lattice, 40_009 + 13 * trial + 5 * q)).collect();
            let direct = self.eval_kernel(kernel, &section.tuple, &z);
            let fit = self.eval_section(section, &z);
            for (a, b) in direct.iter().zip(&fit) {
                worst = worst.max((a - b).norm());
                scale = scale.max(a.norm());
            }
        }
        // identically vanishing functions (the kernel of T) are measured absolutely
        if scale > VANISHING_SCALE {
            worst / scale
        } else {
            worst
        }
    }

    fn assemble(&self, kernel: Kernel, p: usize, label: String) -> CasimirElement {
        let (n, k, m) = (self.pencil.n(), self.pencil.k(), self.pencil.m());
        let dim = self.pencil.basis.len();
        let dp = build_dp(n, p);
        let mut u_coeffs: Vec<PolyElement> = Vec::new();
        for tuple in &dp.entries {
            let phase = dp_phase(n, k, tuple);
            let section = self.expand(&kernel, tuple);
            if u_coeffs.len() < section.coeffs.len() {
                u_coeffs.resize(section.coeffs.len(), PolyElement::zero(dim));
            }
            let starts: Vec<usize> = tuple.iter().map(|&s| self.pencil.basis.block(s).start).collect();
            for (d, layer) in section.coeffs.iter().enumerate() {
                let mut part = PolyElement::zero(dim);
                for (flat, c) in layer.iter().enumerate() {
                    let mut e = vec![0u32; dim];
                    for q in 0..p {
                        e[starts[q] + (flat / m.pow((p - 1 - q) as u32)) % m] += 1;
                    }
                    part.add_term(e, phase * c);
                }
                u_coeffs[d] = &u_coeffs[d] + &part;
            }
        }
        CasimirElement { p, label, u_coeffs, stripped_valuation: 0 }
    }

    /// The linear family for a `u`-polynomial `g` with coefficients in the
    /// order-`m` theta functions.
    pub fn casimir_t(&self, g: &[ThetaFunction], p: usize) -> CasimirElement {
        self.assemble(Kernel::Linear(g), p, format!("T(g), p={p}"))
    }

    pub fn casimir_h(&self, p: usize, opts: HOptions) -> CasimirElement {
        self.assemble(Kernel::Last(opts), p, format!("h, p={p}"))
    }

    pub fn expand_linear(&self, g: &[ThetaFunction], tuple: &[SectorIndex]) -> MultivarSection {
        self.expand(&Kernel::Linear(g), tuple)
    }

    /// Ratio `|f(eps = 1e-4)| / |f(eps = 1e-3)|` with `z_t = z_j + eps`;
    /// about 10 if a simple pole survives, about 1 otherwise.
    pub fn pole_growth(&self, g: &[ThetaFunction], tuple: &[SectorIndex], u: C64, last: Option<HOptions>) -> f64 {
        let lattice = self.pencil.lattice();
        let p = tuple.len();
        let at = |eps: f64| -> f64 {
            let mut z: Vec<C64> = (0..p).map(|q| r2_point(&lattice, 60_013 + 3 * q)).collect();
            z[1] = z[0] + C64::new(eps, 0.3 * eps);
            let v = match last {
                Some(o) => self.eval_last(tuple, &z, o),
                None => self.eval_linear(tuple, g, &z),
            };
            eval_upoly(&v, u).norm()
        };
        at(1e-4) / at(1e-3).max(1e-300)
    }

    /// Largest `|f|` of the expansion on the surfaces `z_{j1} = x_{d1}`,
    /// `z_{j2} = x_{d2}` (`j1 != j2`, `d1 != d2`) relative to generic values.
    pub fn vanishing_residual(&self, section: &MultivarSection, roots: &[C64], u: C64) -> f64 {
        let lattice = self.pencil.lattice();
        let p = section.tuple.len();
        let generic: Vec<C64> = (0..p).map(|q| r2_point(&lattice, 80_021 + 7 * q)).collect();
        let scale = eval_upoly(&self.eval_section(section, &generic), u).norm().max(1e-300);
        let mut worst: f64 = 0.0;
        for j1 in 0..p {
            for j2 in 0..p {
                if j1 == j2 {
                    continue;
                }
                for (d1, &x1) in roots.iter().enumerate() {
                    for (d2, &x2) in roots.iter().enumerate() {
                        if d1 == d2 {
                            continue;
                        }
                        let mut z = generic.clone();
                        z[j1] = x1;
                        z[j2] = x2;
                        worst = worst.max(eval_upoly(&self.eval_section(section, &z), u).norm() / scale);
                    }
                }
            }
        }
        worst
    }

    /// `exp(2 pi i k x (beta_1 + ... + beta_p) / n) f(x, ..., x)` from the expansion.
    pub fn diagonal_value(&self, section: &MultivarSection, x: C64, u: C64) -> C64 {
        // Signed representatives sum to zero, so the exponential prefactor is trivial on the diagonal.
        let z = vec![x; section.tuple.len()];
        eval_upoly(&self.eval_section(section, &z), u)
    }
}

pub fn eval_upoly(v: &[C64], u: C64) -> C64 {
    v.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * u + c)
}

/// `T(g)` for a `u`-independent `g`.
pub fn casimir_t(pencil: &PencilData, g: &ThetaFunction, p: usize) -> Result<CasimirElement> {
    Ok(CasimirBuilder::new(pencil, p)?.casimir_t(std::slice::from_ref(g), p))
}

pub fn casimir_h(pencil: &PencilData, p: usize, opts: HOptions) -> Result<CasimirElement> {
    Ok(CasimirBuilder::new(pencil, p)?.casimir_h(p, opts))
}

/// The `u`-independent quadratic element, `T(mu2)` with its factor of `u` removed.
pub fn casimir_quadratic(pencil: &PencilData) -> Result<CasimirElement> {
    let mut c = casimir_t(pencil, &pencil.mu2, 2)?.normalized();
    c.label = "C2".into();
    Ok(c)
}

/// `max |T_{lj}|` with `T_{lj} = sum_i c^l_{ki} a_{ij} + a_{li} c^j_{ki}`,
/// the obstruction to `sum a_{ij} x_i x_j` being central in the enveloping
/// algebra, relative to `max|a| max|c|`.
pub fn enveloping_defect_p2(f: &PolyElement, c: &LieStructure) -> f64 {
    let d = c.dim();
    let mut a = CMat::zeros(d, d);
    for (e, v) in f.terms() {
        let idx: Vec<usize> = e.iter().enumerate().flat_map(|(i, &p)| std::iter::repeat(i).take(p as usize)).collect();
        match idx.as_slice() {
            [i, j] if i == j => a[(*i, *i)] += v,
            [i, j] => {
                a[(*i, *j)] += v * 0.5;
                a[(*j, *i)] += v * 0.5;
            }
            _ => {}
        }
    }
    let mut worst: f64 = 0.0;
    for k in 0..d {
        let ad = c.ad(k);
        // (ad a + a ad^T)_{lj}
        let t = &ad * &a + &a * ad.transpose();
        worst = worst.max(t.camax());
    }
    worst / (a.camax() * c.max_magnitude()).max(1e-300)
}

/// Flattens a set of elements into dense columns over a common monomial
/// index, each column normalized.
fn vectorize(elements: &[CasimirElement], max_deg: usize) -> CMat {
    let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
    for el in elements {
        for c in &el.u_coeffs {
            for (e, _) in c.terms() {
                let next = index.len();
                index.entry(e.clone()).or_insert(next);
            }
        }
    }
    let rows = index.len() * (max_deg + 1);
    let mut out = CMat::zeros(rows, elements.len());
    for (col, el) in elements.iter().enumerate() {
        for (d, c) in el.u_coeffs.iter().enumerate() {
            for (e, v) in c.terms() {
                out[(d * index.len() + index[e], col)] = *v;
            }
        }
        let norm = out.column(col).norm();
        if norm > 0.0 {
            out.column_mut(col).scale_mut(1.0 / norm);
        }
    }
    out
}

fn shift_u(el: &CasimirElement, a: usize) -> CasimirElement {
    let nv = el.u_coeffs.first().map(|c| c.num_vars()).unwrap_or(0);
    let mut u_coeffs = vec![PolyElement::zero(nv); a];
    u_coeffs.extend(el.u_coeffs.iter().cloned());
    CasimirElement { u_coeffs, ..el.clone() }
}

/// Degrees in `u` of a minimal generating set of the central elements of
/// one degree `p`, plus the checks reported alongside.
#[derive(Clone, Debug)]
pub struct DegreeRow {
    pub p: usize,
    pub degrees: Vec<usize>,
    pub expected: Vec<usize>,
    /// `|T(mu2 - u mu1)| / |T(mu2)|`.
    pub kernel_residual: f64,
    /// Largest centrality residual of the generators at sampled `u`.
    pub centrality: f64,
}

#[derive(Clone, Debug)]
pub struct DegreeLedger {
    pub rows: Vec<DegreeRow>,
    pub gz_sum: usize,
    pub dim: usize,
    pub expansion_residual: f64,
}

impl DegreeLedger {
    pub fn degrees_match(&self) -> bool {
        self.rows.iter().all(|r| r.degrees == r.expected)
    }

    pub fn gz_matches(&self) -> bool {
        self.gz_sum == self.dim
    }

    pub fn all_degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.rows.iter().flat_map(|r| r.degrees.iter().copied()).collect();
        d.sort_unstable();
        d
    }
}

pub fn expected_degrees(p: usize, m: usize) -> Vec<usize> {
    let mut v = vec![p - 2];
    v.extend(std::iter::repeat(p - 1).take(m.saturating_sub(2)));
    v.push(p);
    v
}

/// Builds `T(e_j)` over the theta basis and the last generator for each
/// `p = 2..=max_p`, and counts generator degrees over `C[u]`.
pub fn degree_ledger(pencil: &PencilData, max_p: usize, us: &[C64], opts: HOptions) -> Result<DegreeLedger> {
    let (n, m) = (pencil.n(), pencil.m());
    let builder = CasimirBuilder::new(pencil, max_p)?;
    let space = build_theta_space(m, pencil.lattice(), TRUNC_TOL)?;
    let mut rows = Vec::new();
    for p in 2..=max_p.min(n) {
        let family: Vec<CasimirElement> = space.iter().map(|e| builder.casimir_t(std::slice::from_ref(e), p)).collect();
        let t_mu2 = builder.casimir_t(std::slice::from_ref(&pencil.mu2), p);
        let kernel = builder.casimir_t(&[pencil.mu2.clone(), pencil.mu1.scaled(C64::new(-1.0, 0.0))], p);
        let kernel_residual = kernel.scale() / t_mu2.scale().max(1e-300);

        let mut gens: Vec<(CasimirElement, usize)> = Vec::new();
        for d in 0..p {
            // combinations of the family with no u-coefficients above d
            let top: Vec<CasimirElement> = family
                .iter()
                .map(|el| CasimirElement { u_coeffs: el.u_coeffs.iter().skip(d + 1).cloned().collect(), ..el.clone() })
                .collect();
            let combos = if top.iter().all(|t| t.u_coeffs.is_empty()) {
                CMat::identity(m, m)
            } else {
                // unnormalized columns, so kernel vectors are combination weights
                linalg::null_space(&raw_vectorize(&top, p), 1e-9)
            };
            let candidates: Vec<CasimirElement> = (0..combos.ncols())
                .map(|c| {
                    let mut acc = CasimirElement { u_coeffs: Vec::new(), ..family[0].clone() };
                    for (j, el) in family.iter().enumerate() {
                        acc = acc.combine(C64::new(1.0, 0.0), el, combos[(j, c)]);
                    }
                    acc
                })
                .collect();
            let span: Vec<CasimirElement> =
                gens.iter().flat_map(|(g, gd)| (0..=d.saturating_sub(*gd)).filter(move |_| *gd <= d).map(move |a| shift_u(g, a))).collect();
            let mut current = span.clone();
            let mut rank = if current.is_empty() { 0 } else { linalg::rank(&vectorize(&current, p), RANK_TOL) };
            for cand in candidates {
                let mut trial = current.clone();
                trial.push(cand.clone());
                let r = linalg::rank(&vectorize(&trial, p), 1e-7);
                if r > rank {
                    rank = r;
                    current = trial;
                    gens.push((cand, d));
                }
            }
        }
        let h = builder.casimir_h(p, opts);
        let h_deg = h.degree_u().unwrap_or(0);
        gens.push((h, h_deg));

        let mut centrality: f64 = 0.0;
        for (g, _) in &gens {
            centrality = centrality.max(g.centrality(pencil, us));
        }
        let mut degrees: Vec<usize> = gens.iter().map(|(_, d)| *d).collect();
        degrees.sort_unstable();
        rows.push(DegreeRow { p, degrees, expected: expected_degrees(p, m), kernel_residual, centrality });
    }
    let gz_sum = rows.iter().flat_map(|r| r.degrees.iter()).map(|d| 2 * d + 1).sum();
    Ok(DegreeLedger { rows, gz_sum, dim: pencil.basis.len(), expansion_residual: builder.max_expansion_residual.get() })
}

fn raw_vectorize(elements: &[CasimirElement], max_deg: usize) -> CMat {
    let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
    for el in elements {
        for c in &el.u_coeffs {
            for (e, _) in c.terms() {
                let next = index.len();
                index.entry(e.clone()).or_insert(next);
            }
        }
    }
    let mut out = CMat::zeros((index.len() * (max_deg + 1)).max(1), elements.len());
    for (col, el) in elements.iter().enumerate() {
        for (d, c) in el.u_coeffs.iter().enumerate() {
            for (e, v) in c.terms() {
                out[(d * index.len() + index[e], col)] = *v;
            }
        }
    }
    out
}

/// Seeded regular values of `u` for centrality sampling.
pub fn sample_regular(pencil: &PencilData, count: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let u = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if let Ok((_, true)) = pencil_roots(&pencil.mu1, &pencil.mu2, u) {
            out.push(u);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::{build_pair, commutator_constants, dual_basis, SLBasis};

    #[test]
    fn dp_sizes() {
        assert_eq!(build_dp(2, 2).entries.len(), 3);
        assert!(build_dp(2, 2).entries.iter().all(|t| t[0] == t[1]));
        assert_eq!(build_dp(2, 3).entries.len(), 6);
        assert_eq!(build_dp(3, 2).entries.len(), 8);
        for (n, p) in [(2, 2), (2, 3), (3, 2), (3, 3), (2, 4)] {
            assert_eq!(build_dp(n, p).entries.len(), dp_cardinality(n, p));
        }
    }

    fn sl_n(n: usize, k: usize) -> LieStructure {
        let secs = sectors(n);
        LieStructure::from_upper(secs.len(), "sl_n", |i, j, l| {
            let (c, s) = commutator_constants(n, k, secs[i], secs[j]);
            if !s.is_zero() && secs[l] == s {
                c
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    fn symbol(n: usize, p: usize, weight: impl Fn(&[SectorIndex]) -> C64) -> PolyElement {
        let secs = sectors(n);
        let mut out = PolyElement::zero(secs.len());
        for t in build_dp(n, p).entries {
            let mut e = vec![0u32; secs.len()];
            for s in &t {
                e[secs.iter().position(|x| x == s).unwrap()] += 1;
            }
            out.add_term(e, weight(&t));
        }
        out
    }

    #[test]
    fn phase_weights_give_invariant_symbols() {
        for (n, k, p) in [(2, 1, 2), (3, 1, 2), (3, 2, 3), (3, 1, 3)] {
            let c = sl_n(n, k);
            let f = symbol(n, p, |t| dp_phase(n, k, t));
            assert!(is_casimir(&f, &c) < 1e-12, "n={n} p={p}");
        }
    }

    #[test]
    fn phase_matches_reversed_trace_weight() {
        let (n, k) = (3, 2);
        let basis = dual_basis(SLBasis::new(build_pair(n, k).unwrap()));
        let trace = |t: &[SectorIndex]| {
            let mut acc = crate::heisenberg::Matrix::identity(n, n);
            for s in t.iter().rev() {
                acc = acc * &basis.duals[crate::heisenberg::sector_position(n, *s)];
            }
            acc.trace()
        };
        for p in [2, 3] {
            let ratio = {
                let t = &build_dp(n, p).entries[0];
                trace(t) / dp_phase(n, k, t)
            };
            for t in build_dp(n, p).entries {
                assert!((trace(&t) - ratio * dp_phase(n, k, &t)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn upoly_helpers() {
        let a = vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)];
        let b = upoly_mul(&a, &a);
        assert_eq!(b.len(), 3);
        assert!((eval_upoly(&b, C64::new(1.0, 0.0)) - C64::new(9.0, 0.0)).norm() < 1e-14);
    }
}
