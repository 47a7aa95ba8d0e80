//! Rank-`l` vector-valued theta functions and the `l + 1` pairwise
//! compatible brackets obtained by splitting a commutator as
//! `mu_1 P_1 + ... + mu_{l+1} P_{l+1}`.
//!
//! A section of rank `l` is a linear form `sum_c x_c f_c(z)` whose
//! components satisfy `f_c(z + 1) = exp(-2 pi i m c / l) f_c(z)` and
//! `f_c(z + tau) = exp(2 pi i ((m - l - 1) / (2l) - (m/l) z)) f_{c-1}(z)`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::elliptic::{r2_point, TRUNC_TOL};
use crate::error::{check_coprime, gcd, Error, Result};
use crate::heisenberg::{build_pair, commutator_constants, dual_basis, sector_position, sectors, Matrix, SLBasis, SectorIndex};
use crate::lie::{compatibility_residual, jacobiator, BracketPencil, LieStructure};
use crate::linalg::{self, CMat, RANK_TOL};
use crate::scalar::{exp_turns, C64};
use crate::theta::{build_space, Characteristic, Lattice, ThetaFunction};

/// Largest accepted held-out residual of a splitting.
pub const SPLIT_TOL: f64 = 1e-8;
/// Lower bound for the sampled common-zero certificate.
pub const COMMON_ZERO_TOL: f64 = 1e-4;

/// `m (l+1)(l+2)...(l+d-1) / (d-1)!`, the dimension of degree-`d` sections.
pub fn vector_theta_dimension(m: u64, l: u64, d: u64) -> u64 {
    if d == 0 {
        return 0;
    }
    // binomial(l + d - 1, d - 1) built incrementally stays integral
    let mut acc: u64 = 1;
    for i in 1..d {
        acc = acc * (l + i) / i;
    }
    m * acc
}

fn check_rank(m: usize, l: usize) -> Result<()> {
    if l == 0 || l >= m {
        return Err(Error::InvalidParameter(format!("need 1 <= l < m, got m = {m}, l = {l}")));
    }
    if gcd(m, l) != 1 {
        return Err(Error::NotCoprime { n: m, k: l, gcd: gcd(m, l) });
    }
    Ok(())
}

/// Characteristic of the scalar sections of degree `m` and rank `l`.
pub fn section_characteristic(m: usize, l: usize) -> Characteristic {
    Characteristic::vector(m, l, 1, 0, 0, 0)
}

/// Basis of the `m`-dimensional space of degree-one sections.
pub fn build_vector_theta_basis(m: usize, l: usize, lattice: Lattice) -> Result<Vec<ThetaFunction>> {
    check_rank(m, l)?;
    build_space(m, l, lattice, section_characteristic(m, l), TRUNC_TOL)
}

/// Sample vectors `e_c` and `e_c + e_d` (`c < d`); a quadratic form in `l`
/// variables is determined by its values on them.
pub fn quadratic_frame(l: usize) -> Vec<Vec<C64>> {
    let unit = |c: usize| -> Vec<C64> { (0..l).map(|i| C64::new(if i == c { 1.0 } else { 0.0 }, 0.0)).collect() };
    let mut out: Vec<Vec<C64>> = (0..l).map(unit).collect();
    for c in 0..l {
        for d in c + 1..l {
            out.push(unit(c).iter().zip(unit(d)).map(|(a, b)| a + b).collect());
        }
    }
    out
}

/// Basis of `sl_n`-valued sections: `m` rank-`l` functions per nonzero
/// sector, element `pos * m + j` being `f_j(z, x) t_{sector}`.
#[derive(Clone, Debug)]
pub struct VectorBasis {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub k: usize,
    pub lattice: Lattice,
    pub sl: SLBasis,
    pub sectors: Vec<SectorIndex>,
    pub elements: Vec<ThetaFunction>,
}

impl VectorBasis {
    pub fn new(n: usize, m: usize, l: usize, k: usize, lattice: Lattice) -> Result<Self> {
        check_rank(m, l)?;
        check_coprime(n, k)?;
        let sl = dual_basis(SLBasis::new(build_pair(n, k)?));
        let secs = sectors(n);
        let mut elements = Vec::with_capacity(m * secs.len());
        for &s in &secs {
            elements.extend(build_space(m, l, lattice, Characteristic::vector(m, l, n, k, s.alpha, s.beta), TRUNC_TOL)?);
        }
        Ok(Self { n, m, l, k, lattice, sl, sectors: secs, elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn block(&self, s: SectorIndex) -> std::ops::Range<usize> {
        let p = sector_position(self.n, s);
        p * self.m..(p + 1) * self.m
    }

    pub fn sector_of(&self, i: usize) -> SectorIndex {
        self.sectors[i / self.m]
    }

    /// `sum_i coords_i f_i(z, x) t_{s_i}`.
    pub fn eval_matrix(&self, coords: &[C64], z: C64, x: &[C64]) -> Matrix {
        let mut out = Matrix::zeros(self.n, self.n);
        for (pos, t) in self.sl.elements.iter().enumerate() {
            let scalar: C64 = (pos * self.m..(pos + 1) * self.m).map(|i| coords[i] * self.elements[i].eval_at(z, x, 0)).sum();
            if scalar.norm() > 0.0 {
                out += t * scalar;
            }
        }
        out
    }

    /// Relative residuals of `f(z + 1, x) = a f(z, p x) a^{-1}` and
    /// `f(z + tau, x) = exp(2 pi i ((m-l-1)/(2l) - (m/l) z)) b f(z, q x) b^{-1}`.
    pub fn quasi_residual(&self, coords: &[C64], z: C64, x: &[C64]) -> (f64, f64) {
        let (m, l) = (self.m as f64, self.l as f64);
        let a = &self.sl.pair.a;
        let b = &self.sl.pair.b;
        let px: Vec<C64> = x.iter().enumerate().map(|(c, &v)| v * exp_turns(C64::new(-m * c as f64 / l, 0.0))).collect();
        let qx: Vec<C64> = (0..self.l).map(|c| x[(c + 1) % self.l]).collect();
        let f = self.eval_matrix(coords, z, x);
        let scale = f.camax().max(1e-300);
        let shifted = a * self.eval_matrix(coords, z, &px) * a.adjoint();
        let r1 = (self.eval_matrix(coords, z + 1.0, x) - shifted).camax() / scale;
        let factor = exp_turns(-(z * (m / l)) + C64::new((m - l - 1.0) / (2.0 * l), 0.0));
        let rotated = b * self.eval_matrix(coords, z, &qx) * b.adjoint() * factor;
        let r2 = (self.eval_matrix(coords, z + self.lattice.tau(), x) - rotated).camax() / scale;
        (r1, r2)
    }
}

/// One collocation point `(z, x)`.
#[derive(Clone, Debug)]
struct Sample {
    z: C64,
    x: Vec<C64>,
}

#[derive(Clone, Debug)]
struct SplitSystem {
    samples: Vec<Sample>,
    pseudo_inverse: CMat,
    validation_samples: Vec<Sample>,
    validation: CMat,
    condition: f64,
}

#[derive(Clone, Debug, Default)]
pub struct MultiDiagnostics {
    /// Smallest sampled `|(mu_1, ..., mu_{l+1})(z, x)| / |x|`, relative to the section norms.
    pub common_zero_certificate: f64,
    pub split_residual: f64,
    pub max_condition: f64,
    pub asymmetry: f64,
}

/// `l + 1` brackets on the degree-one `sl_n`-valued sections.
#[derive(Clone, Debug)]
pub struct MultiPencil {
    pub sections: Vec<ThetaFunction>,
    pub basis: VectorBasis,
    pub brackets: Vec<LieStructure>,
    pub diagnostics: MultiDiagnostics,
    seed: u64,
}

fn random_point(rng: &mut ChaCha8Rng, lattice: &Lattice) -> C64 {
    crate::theta::ANCHOR + lattice.point(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))
}

fn random_vector(rng: &mut ChaCha8Rng, l: usize) -> Vec<C64> {
    (0..l).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Sampled certificate that the sections have no common zero with `x != 0`:
/// the minimum of `sqrt(sum_i |mu_i(z, x)|^2)` over a grid of `z` and a
/// grid of unit vectors `x`, relative to the largest sampled value.
pub fn common_zero_certificate(sections: &[ThetaFunction]) -> f64 {
    let Some(first) = sections.first() else { return 0.0 };
    let l = first.rank();
    let lattice = *first.lattice();
    let mut xs: Vec<Vec<C64>> = Vec::new();
    if l == 1 {
        xs.push(vec![C64::new(1.0, 0.0)]);
    } else {
        // affine charts x = (1, t, ...) and the coordinate axes
        let ts: Vec<C64> = (0..7).flat_map(|a| (0..7).map(move |b| C64::new(-1.5 + 0.5 * a as f64, -1.5 + 0.5 * b as f64))).collect();
        for c in 0..l {
            let mut e = vec![C64::new(0.0, 0.0); l];
            e[c] = C64::new(1.0, 0.0);
            xs.push(e);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for t in ts {
            let mut x = vec![C64::new(1.0, 0.0); l];
            x[1] = t;
            for v in x.iter_mut().skip(2) {
                *v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            xs.push(x);
        }
    }
    let grid = lattice.grid(24);
    let mut lowest = f64::INFINITY;
    let mut highest: f64 = 0.0;
    for z in &grid {
        for x in &xs {
            let norm_x = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let v = sections.iter().map(|mu| mu.eval_at(*z, x, 0).norm_sqr()).sum::<f64>().sqrt() / norm_x;
            lowest = lowest.min(v);
            highest = highest.max(v);
        }
    }
    if highest > 0.0 {
        lowest / highest
    } else {
        0.0
    }
}

impl MultiPencil {
    /// Draws `l + 1` sections from a seeded generator until they pass the
    /// common-zero certificate.
    pub fn seeded(n: usize, m: usize, l: usize, k: usize, tau: C64, seed: u64) -> Result<Self> {
        let lattice = Lattice::new(tau)?;
        let space = build_vector_theta_basis(m, l, lattice)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = 0.0;
        for _ in 0..20 {
            let sections = (0..=l)
                .map(|_| ThetaFunction::linear_combination(&space, &random_vector(&mut rng, m)))
                .collect::<Result<Vec<_>>>()?;
            let cert = common_zero_certificate(&sections);
            if cert > COMMON_ZERO_TOL {
                return Self::new(n, k, sections, seed);
            }
            best = f64::max(best, cert);
        }
        Err(Error::CommonZero(best))
    }

    pub fn new(n: usize, k: usize, sections: Vec<ThetaFunction>, seed: u64) -> Result<Self> {
        let first = sections.first().ok_or_else(|| Error::InvalidParameter("no sections".into()))?;
        let (m, l, lattice) = (first.order(), first.rank(), *first.lattice());
        if sections.len() != l + 1 {
            return Err(Error::InvalidParameter(format!("rank {l} needs {} sections, got {}", l + 1, sections.len())));
        }
        if sections.iter().any(|s| s.order() != m || s.rank() != l || s.characteristic() != section_characteristic(m, l)) {
            return Err(Error::InvalidParameter("sections must share degree, rank and characteristic".into()));
        }
        let certificate = common_zero_certificate(&sections);
        if !(certificate > COMMON_ZERO_TOL) {
            return Err(Error::CommonZero(certificate));
        }
        let basis = VectorBasis::new(n, m, l, k, lattice)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let systems = basis
            .sectors
            .iter()
            .map(|&s| build_split_system(&basis, &sections, s, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let max_condition = systems.iter().map(|s| s.condition).fold(0.0, f64::max);

        let dim = basis.len();
        let width = (l + 1) * m;
        let mut raw = vec![vec![C64::new(0.0, 0.0); dim * dim * dim]; l + 1];
        let mut worst: f64 = 0.0;
        let values = |samples: &[Sample]| -> Vec<Vec<C64>> {
            samples.iter().map(|s| basis.elements.iter().map(|e| e.eval_at(s.z, &s.x, 0)).collect()).collect()
        };
        let colloc: Vec<Vec<Vec<C64>>> = systems.iter().map(|s| values(&s.samples)).collect();
        let valid: Vec<Vec<Vec<C64>>> = systems.iter().map(|s| values(&s.validation_samples)).collect();
        for i in 0..dim {
            for j in 0..dim {
                let (c, target) = commutator_constants(n, k, basis.sector_of(i), basis.sector_of(j));
                if target.is_zero() || c.norm() < 1e-14 {
                    continue;
                }
                let pos = sector_position(n, target);
                let sys = &systems[pos];
                let rhs = CMat::from_iterator(colloc[pos].len(), 1, colloc[pos].iter().map(|v| c * v[i] * v[j]));
                let coeffs = &sys.pseudo_inverse * rhs;
                let check: Vec<C64> = valid[pos].iter().map(|v| c * v[i] * v[j]).collect();
                let fit = &sys.validation * &coeffs;
                let scale = check.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
                let err = fit.iter().zip(&check).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                worst = worst.max(err / scale);
                for (r, idx) in basis.block(target).enumerate() {
                    for t in 0..=l {
                        raw[t][(i * dim + j) * dim + idx] = coeffs[t * m + r];
                    }
                }
                debug_assert_eq!(coeffs.nrows(), width);
            }
        }
        if worst > SPLIT_TOL {
            return Err(Error::DecompositionResidual { residual: worst, tol: SPLIT_TOL });
        }
        let mut brackets = Vec::with_capacity(l + 1);
        let mut asym: f64 = 0.0;
        for (t, r) in raw.iter().enumerate() {
            let (c, a) = LieStructure::antisymmetrized(dim, format!("c{}", t + 1), |i, j, q| r[(i * dim + j) * dim + q]);
            asym = asym.max(a / c.max_magnitude().max(1e-300));
            brackets.push(c);
        }
        Ok(Self {
            sections,
            basis,
            brackets,
            diagnostics: MultiDiagnostics { common_zero_certificate: certificate, split_residual: worst, max_condition, asymmetry: asym },
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn rank(&self) -> usize {
        self.basis.l
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `sum_t weights_t c_t`.
    pub fn combination(&self, weights: &[C64]) -> LieStructure {
        let mut out = self.brackets[0].combine(&weights[0], &self.brackets[0], &C64::new(0.0, 0.0));
        for (c, w) in self.brackets.iter().zip(weights).skip(1) {
            out = out.combine(&C64::new(1.0, 0.0), c, w);
        }
        out.label = "combination".into();
        out
    }

    pub fn pair(&self, a: usize, b: usize) -> BracketPencil {
        BracketPencil::new(self.brackets[a].clone(), self.brackets[b].clone())
    }

    pub fn jacobiators(&self) -> Vec<f64> {
        self.brackets.iter().map(jacobiator).collect()
    }

    /// Compatibility residuals of all pairs `a < b`, in lexicographic order.
    pub fn pair_residuals(&self) -> Vec<((usize, usize), f64)> {
        let t = self.brackets.len();
        (0..t).flat_map(|a| (a + 1..t).map(move |b| (a, b))).map(|(a, b)| ((a, b), compatibility_residual(&self.pair(a, b)))).collect()
    }

    /// Max relative deviation of `sum_t mu_t [f, g]_t` from the pointwise
    /// commutator over held-out `(z, x)` samples.
    pub fn reconstruction_residual(&self, f: &[C64], g: &[C64], samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts: Vec<Vec<C64>> = self.brackets.iter().map(|c| c.bracket(f, g)).collect();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for _ in 0..samples {
            let z = random_point(&mut rng, &self.basis.lattice);
            let x = random_vector(&mut rng, self.basis.l);
            let ff = self.basis.eval_matrix(f, z, &x);
            let gg = self.basis.eval_matrix(g, z, &x);
            let direct = &ff * &gg - &gg * &ff;
            let mut split = Matrix::zeros(self.basis.n, self.basis.n);
            for (mu, p) in self.sections.iter().zip(&parts) {
                split += self.basis.eval_matrix(p, z, &x) * mu.eval_at(z, &x, 0);
            }
            worst = worst.max((&direct - split).camax());
            scale = scale.max(direct.camax());
        }
        worst / scale.max(1e-300)
    }
}

fn build_split_system(basis: &VectorBasis, sections: &[ThetaFunction], s: SectorIndex, rng: &mut ChaCha8Rng) -> Result<SplitSystem> {
    let (m, l) = (basis.m, basis.l);
    let width = (l + 1) * m;
    let block = basis.block(s);
    let row = |smp: &Sample| -> Vec<C64> {
        let vals: Vec<C64> = block.clone().map(|i| basis.elements[i].eval_at(smp.z, &smp.x, 0)).collect();
        sections.iter().flat_map(|mu| {
            let w = mu.eval_at(smp.z, &smp.x, 0);
            vals.iter().map(move |v| w * v).collect::<Vec<_>>()
        }).collect()
    };
    let frame = quadratic_frame(l);
    // enough z points that every frame vector sees at least twice the unknowns
    let z_count = (2 * width).div_ceil(frame.len()).max(2 * m);
    let samples: Vec<Sample> = (0..z_count)
        .flat_map(|i| {
            let z = r2_point(&basis.lattice, 1 + i + 37 * sector_position(basis.n, s));
            frame.iter().map(move |x| Sample { z, x: x.clone() })
        })
        .collect();
    let a = CMat::from_fn(samples.len(), width, |r, c| row(&samples[r])[c]);
    let condition = linalg::condition_number(&a);
    let identity = CMat::identity(samples.len(), samples.len());
    let (pseudo_inverse, used) = linalg::lstsq(&a, &identity, RANK_TOL);
    if used < width {
        return Err(Error::IllConditioned { cond: condition, attempts: 1 });
    }
    let validation_samples: Vec<Sample> =
        (0..2 * width).map(|_| Sample { z: random_point(rng, &basis.lattice), x: random_vector(rng, l) }).collect();
    let validation = CMat::from_fn(validation_samples.len(), width, |r, c| row(&validation_samples[r])[c]);
    Ok(SplitSystem { samples, pseudo_inverse, validation_samples, validation, condition })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_formula() {
        assert_eq!(vector_theta_dimension(3, 2, 1), 3);
        assert_eq!(vector_theta_dimension(3, 2, 2), 9);
        assert_eq!(vector_theta_dimension(5, 2, 3), 30);
    }

    #[test]
    fn frame_size() {
        assert_eq!(quadratic_frame(1).len(), 1);
        assert_eq!(quadratic_frame(2).len(), 3);
        assert_eq!(quadratic_frame(3).len(), 6);
    }

    #[test]
    fn rejects_non_coprime_rank() {
        let lattice = Lattice::new(C64::new(0.0, 1.0)).unwrap();
        assert!(build_vector_theta_basis(4, 2, lattice).is_err());
        assert!(build_vector_theta_basis(2, 2, lattice).is_err());
    }
}
