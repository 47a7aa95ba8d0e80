//! `sl_n`-valued quasi-periodic functions and the pair of brackets obtained
//! by splitting a commutator as `mu1 P + mu2 Q`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::heisenberg::{build_pair, commutator_constants, dual_basis, sector_position, sectors, Matrix, SLBasis, SectorIndex};
use crate::lie::{killing_semisimple, BracketPencil, LieStructure};
use crate::linalg::{self, CMat, RANK_TOL};
use crate::scalar::{exp_turns, C64};
use crate::theta::{build_space, build_theta_space, find_roots, pencil_roots, theta_generator, Characteristic, Lattice, ThetaFunction, ANCHOR};

/// Truncation tolerance used for every theta series built here.
pub const TRUNC_TOL: f64 = 1e-17;
/// Largest accepted held-out residual of a collocation solve.
pub const DECOMPOSITION_TOL: f64 = 1e-8;
/// Collocation points closer than this to a root (or to each other) are rejected.
pub const POINT_EXCLUSION: f64 = 1e-3;
pub const MAX_CONDITION: f64 = 1e8;
pub const MAX_REDRAWS: usize = 5;
/// Lower bound for `min |mu2(x)| / |mu2|` over roots `x` of `mu1`.
pub const COMMON_ZERO_TOL: f64 = 1e-3;

/// Point `i` of the plastic-number R2 sequence in the fundamental
/// parallelogram.
pub fn r2_point(lattice: &Lattice, i: usize) -> C64 {
    const G: f64 = 1.324_717_957_244_746;
    let s = (0.5 + i as f64 / G).fract();
    let t = (0.5 + i as f64 / (G * G)).fract();
    ANCHOR + lattice.point(s, t)
}

/// One scalar component `f_{alpha,beta}` of an element of `V_m`.
#[derive(Clone, Debug)]
pub struct SectorFunction {
    pub sector: SectorIndex,
    pub g: ThetaFunction,
}

impl SectorFunction {
    pub fn eval(&self, z: C64) -> C64 {
        self.g.eval(z, 0)
    }
}

/// Basis of `V_m`: `m` functions per nonzero sector, element
/// `pos * m + j` being `f_j(z) t_{sector}`.
#[derive(Clone, Debug)]
pub struct EquivariantBasis {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub lattice: Lattice,
    pub sl: SLBasis,
    pub sectors: Vec<SectorIndex>,
    pub elements: Vec<SectorFunction>,
}

pub fn build_vm_basis(n: usize, m: usize, k: usize, lattice: Lattice) -> Result<EquivariantBasis> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let sl = dual_basis(SLBasis::new(build_pair(n, k)?));
    let secs = sectors(n);
    let mut elements = Vec::with_capacity(m * secs.len());
    for &s in &secs {
        let ch = Characteristic::sector(m, n, k, s.alpha, s.beta);
        for g in build_space(m, 1, lattice, ch, TRUNC_TOL)? {
            elements.push(SectorFunction { sector: s, g });
        }
    }
    Ok(EquivariantBasis { n, m, k, lattice, sl, sectors: secs, elements })
}

impl EquivariantBasis {
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
        self.elements[i].sector
    }

    /// Values of the `m` sector functions of `s` at `z`.
    pub fn sector_values(&self, s: SectorIndex, z: C64) -> Vec<C64> {
        self.block(s).map(|i| self.elements[i].eval(z)).collect()
    }

    /// `sum_i x_i f_i(z) t_{s_i}`.
    pub fn eval_matrix(&self, x: &[C64], z: C64) -> Matrix {
        let mut out = Matrix::zeros(self.n, self.n);
        for (pos, &s) in self.sectors.iter().enumerate() {
            let vals = self.sector_values(s, z);
            let scalar: C64 = vals.iter().zip(&x[pos * self.m..(pos + 1) * self.m]).map(|(a, b)| a * b).sum();
            if scalar.norm() > 0.0 {
                out += &self.sl.elements[pos] * scalar;
            }
        }
        out
    }

    /// Relative residuals of `f(z + 1) = a f a^{-1}` and
    /// `f(z + tau) = (-1)^m exp(-2 pi i m z) b f b^{-1}`.
    pub fn quasi_residual(&self, x: &[C64], z: C64) -> (f64, f64) {
        let a = &self.sl.pair.a;
        let b = &self.sl.pair.b;
        let a_inv = a.adjoint();
        let b_inv = b.adjoint();
        let f = self.eval_matrix(x, z);
        let scale = f.camax().max(1e-300);
        let r1 = (self.eval_matrix(x, z + 1.0) - a * &f * &a_inv).camax() / scale;
        let sign = if self.m % 2 == 0 { 1.0 } else { -1.0 };
        let factor = exp_turns(-(self.m as f64) * z) * sign;
        let r2 = (self.eval_matrix(x, z + self.lattice.tau()) / factor - b * &f * &b_inv).camax() / scale;
        (r1, r2)
    }
}

/// Collocation data for one target sector of the splitting
/// `Z_s = mu1 P_s + mu2 Q_s`.
#[derive(Clone, Debug)]
struct SectorSystem {
    points: Vec<C64>,
    inverse: CMat,
    col_scale: Vec<f64>,
    validation: CMat,
    condition: f64,
}

impl SectorSystem {
    fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let b = CMat::from_column_slice(rhs.len(), 1, rhs);
        let x = &self.inverse * b;
        x.iter().zip(&self.col_scale).map(|(v, s)| v / *s).collect()
    }

    /// Max held-out error, relative to the largest target value.
    fn validate(&self, coeffs: &[C64], target: &[C64]) -> f64 {
        let x = CMat::from_column_slice(coeffs.len(), 1, coeffs);
        let fit = &self.validation * x;
        let scale = target.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let err = fit.iter().zip(target).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if scale > 1e-300 {
            err / scale
        } else {
            err
        }
    }
}

/// Result of splitting a `V_{2m}` element.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub p: Vec<C64>,
    pub q: Vec<C64>,
    pub residual: f64,
    pub condition: f64,
}

#[derive(Clone, Debug, Default)]
pub struct PencilDiagnostics {
    /// `min |mu2(x)| / |mu2|_grid` over roots `x` of `mu1`.
    pub common_zero_certificate: f64,
    pub asymmetry: f64,
    pub decomposition_residual: f64,
    pub max_condition: f64,
}

#[derive(Clone, Debug)]
pub struct PencilData {
    pub mu1: ThetaFunction,
    pub mu2: ThetaFunction,
    pub basis: EquivariantBasis,
    pub c1: LieStructure,
    pub c2: LieStructure,
    pub diagnostics: PencilDiagnostics,
    systems: Vec<SectorSystem>,
    seed: u64,
}

fn common_zero_certificate(mu1: &ThetaFunction, mu2: &ThetaFunction) -> Result<f64> {
    let roots = find_roots(mu1)?;
    let norm = mu2.grid_norm();
    Ok(roots.roots.iter().map(|&x| mu2.eval(x, 0).norm() / norm).fold(f64::INFINITY, f64::min))
}

fn random_coefficients(rng: &mut ChaCha8Rng, m: usize) -> Vec<C64> {
    (0..m).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

impl PencilData {
    /// Draws `mu1`, `mu2` from a seeded generator until the pair passes the
    /// no-common-zero certificate.
    pub fn seeded(n: usize, m: usize, k: usize, tau: C64, seed: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::DegeneratePencil("m = 1 admits no two independent sections".into()));
        }
        let lattice = Lattice::new(tau)?;
        let space = build_theta_space(m, lattice, TRUNC_TOL)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let mu1 = ThetaFunction::linear_combination(&space, &random_coefficients(&mut rng, m))?;
            let mu2 = ThetaFunction::linear_combination(&space, &random_coefficients(&mut rng, m))?;
            if common_zero_certificate(&mu1, &mu2)? > COMMON_ZERO_TOL {
                return Self::new(n, k, mu1, mu2, seed);
            }
        }
        Err(Error::CommonZero(0.0))
    }

    /// Builds the pencil from coordinates of `mu1`, `mu2` in the seeded
    /// basis of the order-`m` theta functions.
    pub fn from_coefficients(n: usize, k: usize, tau: C64, mu1: &[C64], mu2: &[C64], seed: u64) -> Result<Self> {
        let m = mu1.len();
        if m < 2 || mu2.len() != m {
            return Err(Error::InvalidParameter("need two coefficient vectors of equal length >= 2".into()));
        }
        let lattice = Lattice::new(tau)?;
        let space = build_theta_space(m, lattice, TRUNC_TOL)?;
        let f1 = ThetaFunction::linear_combination(&space, mu1)?;
        let f2 = ThetaFunction::linear_combination(&space, mu2)?;
        Self::new(n, k, f1, f2, seed)
    }

    pub fn new(n: usize, k: usize, mu1: ThetaFunction, mu2: ThetaFunction, seed: u64) -> Result<Self> {
        let m = mu1.order();
        let lattice = *mu1.lattice();
        let certificate = common_zero_certificate(&mu1, &mu2)?;
        if !(certificate > COMMON_ZERO_TOL) {
            return Err(Error::CommonZero(certificate));
        }
        let basis = build_vm_basis(n, m, k, lattice)?;
        let mut excluded = find_roots(&mu1)?.roots;
        excluded.extend(find_roots(&mu2)?.roots);
        let mut systems = Vec::with_capacity(basis.sectors.len());
        let mut max_condition: f64 = 0.0;
        for (pos, &s) in basis.sectors.iter().enumerate() {
            let sys = build_system(&basis, &mu1, &mu2, s, &excluded, pos)?;
            max_condition = max_condition.max(sys.condition);
            systems.push(sys);
        }
        let placeholder = LieStructure::zeros(basis.len(), "");
        let mut data = Self {
            mu1,
            mu2,
            basis,
            c1: placeholder.clone(),
            c2: placeholder,
            diagnostics: PencilDiagnostics { common_zero_certificate: certificate, max_condition, ..Default::default() },
            systems,
            seed,
        };
        data.compute_structure_constants()?;
        Ok(data)
    }

    pub fn n(&self) -> usize {
        self.basis.n
    }

    pub fn m(&self) -> usize {
        self.basis.m
    }

    pub fn k(&self) -> usize {
        self.basis.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lattice(&self) -> Lattice {
        self.basis.lattice
    }

    pub fn pencil(&self) -> BracketPencil {
        BracketPencil::new(self.c1.clone(), self.c2.clone())
    }

    fn compute_structure_constants(&mut self) -> Result<()> {
        let basis = &self.basis;
        let (n, k, m) = (basis.n, basis.k, basis.m);
        let dim = basis.len();
        // values of every basis element at each system's collocation and validation points
        let sample = |sys: &SectorSystem, pts: &[C64]| -> Vec<Vec<C64>> {
            let _ = sys;
            pts.iter().map(|&z| basis.elements.iter().map(|e| e.eval(z)).collect()).collect()
        };
        let mut raw1 = vec![C64::new(0.0, 0.0); dim * dim * dim];
        let mut raw2 = raw1.clone();
        let mut worst: f64 = 0.0;
        let mut colloc_vals = Vec::with_capacity(self.systems.len());
        let mut valid_vals = Vec::with_capacity(self.systems.len());
        for (pos, sys) in self.systems.iter().enumerate() {
            colloc_vals.push(sample(sys, &sys.points));
            valid_vals.push(sample(sys, &validation_points(&basis.lattice, pos, m)));
        }
        for i in 0..dim {
            for j in 0..dim {
                let (c, target) = commutator_constants(n, k, basis.sector_of(i), basis.sector_of(j));
                if target.is_zero() || c.norm() < 1e-14 {
                    continue;
                }
                let pos = sector_position(n, target);
                let sys = &self.systems[pos];
                let rhs: Vec<C64> = colloc_vals[pos].iter().map(|v| c * v[i] * v[j]).collect();
                let coeffs = sys.solve(&rhs);
                let check: Vec<C64> = valid_vals[pos].iter().map(|v| c * v[i] * v[j]).collect();
                worst = worst.max(sys.validate(&coeffs, &check));
                for (r, idx) in basis.block(target).enumerate() {
                    raw1[(i * dim + j) * dim + idx] = coeffs[r];
                    raw2[(i * dim + j) * dim + idx] = coeffs[m + r];
                }
            }
        }
        if worst > DECOMPOSITION_TOL {
            return Err(Error::DecompositionResidual { residual: worst, tol: DECOMPOSITION_TOL });
        }
        let (c1, a1) = LieStructure::antisymmetrized(dim, "c1", |i, j, l| raw1[(i * dim + j) * dim + l]);
        let (c2, a2) = LieStructure::antisymmetrized(dim, "c2", |i, j, l| raw2[(i * dim + j) * dim + l]);
        let scale = c1.max_magnitude().max(c2.max_magnitude()).max(1e-300);
        self.c1 = c1;
        self.c2 = c2;
        self.diagnostics.asymmetry = a1.max(a2) / scale;
        self.diagnostics.decomposition_residual = worst;
        Ok(())
    }

    /// Splits `Z` (an element of `V_{2m}` given pointwise) into coordinates
    /// of `P` and `Q` with `Z = mu1 P + mu2 Q`.
    pub fn decompose_by_sections(&self, z_fn: impl Fn(C64) -> Matrix) -> Decomposition {
        let basis = &self.basis;
        let m = basis.m;
        let dim = basis.len();
        let mut p = vec![C64::new(0.0, 0.0); dim];
        let mut q = p.clone();
        let mut residual: f64 = 0.0;
        let mut condition: f64 = 0.0;
        for (pos, &s) in basis.sectors.iter().enumerate() {
            let sys = &self.systems[pos];
            let rhs: Vec<C64> = sys.points.iter().map(|&z| basis.sl.component(s, &z_fn(z))).collect();
            let coeffs = sys.solve(&rhs);
            let check: Vec<C64> =
                validation_points(&basis.lattice, pos, m).iter().map(|&z| basis.sl.component(s, &z_fn(z))).collect();
            residual = residual.max(sys.validate(&coeffs, &check));
            condition = condition.max(sys.condition);
            for (r, idx) in basis.block(s).enumerate() {
                p[idx] = coeffs[r];
                q[idx] = coeffs[m + r];
            }
        }
        Decomposition { p, q, residual, condition }
    }

    /// Max relative deviation of `mu1 [x,y]_1 + mu2 [x,y]_2` from the
    /// pointwise matrix commutator over `points`, relative to `|x(z)| |y(z)|`.
    pub fn combrack_residual(&self, x: &[C64], y: &[C64], points: &[C64]) -> f64 {
        let b1 = self.c1.bracket(x, y);
        let b2 = self.c2.bracket(x, y);
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for &z in points {
            let fx = self.basis.eval_matrix(x, z);
            let fy = self.basis.eval_matrix(y, z);
            let direct = &fx * &fy - &fy * &fx;
            let split = self.basis.eval_matrix(&b1, z) * self.mu1.eval(z, 0) + self.basis.eval_matrix(&b2, z) * self.mu2.eval(z, 0);
            worst = worst.max((direct.clone() - split).camax());
            scale = scale.max(fx.camax() * fy.camax());
        }
        worst / scale.max(1e-300)
    }

    /// Condition number of the evaluation map `f -> (f(x_1), ..., f(x_m))`
    /// on one sector, with columns normalized.
    pub fn evaluation_condition(&self, s: SectorIndex, points: &[C64]) -> f64 {
        let m = self.basis.m;
        let mut a = CMat::from_fn(points.len(), m, |r, c| self.basis.elements[self.basis.block(s).start + c].eval(points[r]));
        normalize_columns(&mut a);
        linalg::condition_number(&a)
    }
}

fn normalize_columns(a: &mut CMat) -> Vec<f64> {
    let mut scales = Vec::with_capacity(a.ncols());
    for mut col in a.column_iter_mut() {
        let s = col.norm().max(1e-300);
        col /= C64::new(s, 0.0);
        scales.push(s);
    }
    scales
}

fn validation_points(lattice: &Lattice, pos: usize, m: usize) -> Vec<C64> {
    (0..4 * m).map(|i| r2_point(lattice, 100_003 + 97 * pos + i)).collect()
}

fn build_system(
    basis: &EquivariantBasis,
    mu1: &ThetaFunction,
    mu2: &ThetaFunction,
    s: SectorIndex,
    excluded: &[C64],
    pos: usize,
) -> Result<SectorSystem> {
    let m = basis.m;
    let lattice = basis.lattice;
    let row = |z: C64| -> Vec<C64> {
        let vals = basis.sector_values(s, z);
        let (a, b) = (mu1.eval(z, 0), mu2.eval(z, 0));
        vals.iter().map(|v| a * v).chain(vals.iter().map(|v| b * v)).collect()
    };
    let mut best = f64::INFINITY;
    for attempt in 0..MAX_REDRAWS {
        let mut points: Vec<C64> = Vec::with_capacity(2 * m);
        let mut i = 1 + 1000 * attempt + 31 * pos;
        while points.len() < 2 * m {
            let z = r2_point(&lattice, i);
            i += 1;
            let near_root = excluded.iter().any(|&r| lattice.distance(z, r) < POINT_EXCLUSION);
            let near_point = points.iter().any(|&p| lattice.distance(z, p) < POINT_EXCLUSION);
            if !near_root && !near_point {
                points.push(z);
            }
        }
        let mut a = CMat::zeros(2 * m, 2 * m);
        for (r, &z) in points.iter().enumerate() {
            for (c, v) in row(z).into_iter().enumerate() {
                a[(r, c)] = v;
            }
        }
        let col_scale = normalize_columns(&mut a);
        let condition = linalg::condition_number(&a);
        best = best.min(condition);
        if condition > MAX_CONDITION {
            continue;
        }
        let Some(inverse) = a.try_inverse() else { continue };
        let vpts = validation_points(&lattice, pos, m);
        let validation = CMat::from_fn(vpts.len(), 2 * m, |r, c| row(vpts[r])[c]);
        return Ok(SectorSystem { points, inverse, col_scale, validation, condition });
    }
    Err(Error::IllConditioned { cond: best, attempts: MAX_REDRAWS })
}

/// One element of the splitting basis, with `beta` possibly outside
/// `0..n` (the scalar factor depends on the unreduced value).
#[derive(Clone, Debug)]
pub struct SplittingElement {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    pub prefactor: C64,
    pub coords: Vec<C64>,
    pub fit_residual: f64,
}

#[derive(Clone, Debug)]
pub struct SplittingBasis {
    pub u: C64,
    /// Roots of `mu2 - u mu1`, shifted so that they sum to zero exactly.
    pub roots: Vec<C64>,
    theta: ThetaFunction,
    n: usize,
    k: usize,
    /// Elements with `0 <= alpha, beta < n`, ordered like the `V_m` basis
    /// blocks with `gamma` inside each block.
    pub elements: Vec<SplittingElement>,
}

impl SplittingBasis {
    fn shift(&self, alpha: usize, beta: usize) -> C64 {
        let (n, k) = (self.n as f64, self.k as f64);
        C64::new(k * alpha as f64 / n, 0.0) + self.theta.lattice().tau() * (k * beta as f64 / n)
    }

    pub fn prefactor(&self, mu1: &ThetaFunction, alpha: usize, beta: usize, gamma: usize) -> C64 {
        let xg = self.roots[gamma];
        let mut denom = self.theta.eval(-self.shift(alpha, beta), 0);
        for (d, &xd) in self.roots.iter().enumerate() {
            if d != gamma {
                denom *= self.theta.eval(xg - xd, 0);
            }
        }
        mu1.eval(xg, 0) / denom
    }

    /// Scalar factor of `v_{alpha,beta,gamma}(z)` without the prefactor.
    pub fn scalar_part(&self, alpha: usize, beta: usize, gamma: usize, z: C64) -> C64 {
        let mut v = exp_turns(-((self.k * beta) as f64) / self.n as f64 * z);
        for (d, &xd) in self.roots.iter().enumerate() {
            if d != gamma {
                v *= self.theta.eval(z - xd, 0);
            }
        }
        v * self.theta.eval(z - self.roots[gamma] - self.shift(alpha, beta), 0)
    }
}

/// Builds `v_{alpha,beta,gamma}` for a regular `u` and expresses each in the
/// `V_m` basis by least squares on held-out points.
pub fn splitting_basis(pencil: &PencilData, u: C64) -> Result<SplittingBasis> {
    let (roots, regular) = pencil_roots(&pencil.mu1, &pencil.mu2, u)?;
    if !regular {
        return Err(Error::NotRegular(format!("{u}")));
    }
    let lattice = pencil.lattice();
    let theta = theta_generator(lattice, TRUNC_TOL)?;
    let mut sb = SplittingBasis { u, roots: roots.balanced(&lattice), theta, n: pencil.n(), k: pencil.k(), elements: Vec::new() };
    let basis = &pencil.basis;
    for &s in &basis.sectors {
        for gamma in 0..pencil.m() {
            sb.elements.push(splitting_element(pencil, &sb, s.alpha, s.beta, gamma)?);
        }
    }
    Ok(sb)
}

/// Coordinates of `v_{alpha,beta,gamma}` for any `alpha, beta >= 0`.
pub fn splitting_element(pencil: &PencilData, sb: &SplittingBasis, alpha: usize, beta: usize, gamma: usize) -> Result<SplittingElement> {
    let basis = &pencil.basis;
    let n = basis.n;
    let m = basis.m;
    let s = SectorIndex::new(alpha % n, beta % n);
    assert!(!s.is_zero(), "splitting elements live in nonzero sectors");
    let denom = sb.theta.eval(-sb.shift(alpha, beta), 0);
    assert!(denom.norm() > 1e-12, "theta vanishes at a nonzero torsion point");
    let prefactor = sb.prefactor(&pencil.mu1, alpha, beta, gamma);
    let lattice = basis.lattice;
    let fit_pts: Vec<C64> = (0..3 * m).map(|i| r2_point(&lattice, 50_021 + i)).collect();
    let check_pts: Vec<C64> = (0..4 * m).map(|i| r2_point(&lattice, 70_001 + i)).collect();
    let design = |pts: &[C64]| CMat::from_fn(pts.len(), m, |r, c| basis.elements[basis.block(s).start + c].eval(pts[r]));
    let target = |pts: &[C64]| CMat::from_fn(pts.len(), 1, |r, _| prefactor * sb.scalar_part(alpha, beta, gamma, pts[r]));
    let (y, rank) = linalg::lstsq(&design(&fit_pts), &target(&fit_pts), RANK_TOL);
    if rank < m {
        return Err(Error::Singular(format!("sector fit has rank {rank} < {m}")));
    }
    let t = target(&check_pts);
    let fit_residual = (design(&check_pts) * &y - &t).camax() / t.camax().max(1e-300);
    let mut coords = vec![C64::new(0.0, 0.0); basis.len()];
    for (r, idx) in basis.block(s).enumerate() {
        coords[idx] = y[(r, 0)];
    }
    Ok(SplittingElement { alpha, beta, gamma, prefactor, coords, fit_residual })
}

#[derive(Clone, Debug, Default)]
pub struct SplittingReport {
    pub u: C64,
    /// `max |[v_a, v_b]_u|` over pairs with different `gamma`, relative to
    /// `|v_a| |v_b| max|c_u|`.
    pub comm1: f64,
    /// Max relative deviation from the `sl_n` relations inside each block.
    pub comm2: f64,
    pub expansion: f64,
    /// `max |v_{.,.,gamma}(x_delta)|`, `delta != gamma`, from coordinates.
    pub vanishing: f64,
    /// Deviation of `v(x_gamma)` from `mu1(x_gamma) exp(-2 pi i k beta x_gamma / n) t`.
    pub at_root: f64,
    pub semisimple: bool,
    pub ideal_dims: Vec<usize>,
    pub skipped: Option<String>,
}

impl SplittingReport {
    pub fn skipped(reason: impl Into<String>) -> Self {
        Self { skipped: Some(reason.into()), ..Default::default() }
    }
}

fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn verify_splitting(pencil: &PencilData, u: C64) -> Result<SplittingReport> {
    if pencil.m() < 2 {
        return Ok(SplittingReport::skipped("m = 1: no pencil"));
    }
    let sb = splitting_basis(pencil, u)?;
    let bracket = pencil.pencil().at(&u);
    let cu = bracket.max_magnitude();
    let basis = &pencil.basis;
    let (n, k, m) = (basis.n, basis.k, basis.m);
    let mut rep = SplittingReport { u, ..Default::default() };

    for e in &sb.elements {
        rep.expansion = rep.expansion.max(e.fit_residual);
        let scale = max_norm(&e.coords);
        for (d, &xd) in sb.roots.iter().enumerate() {
            let val = basis.eval_matrix(&e.coords, xd);
            if d == e.gamma {
                let t = basis.sl.elements[sector_position(n, SectorIndex::new(e.alpha, e.beta))].clone();
                let expect = t * (pencil.mu1.eval(xd, 0) * exp_turns(-((k * e.beta) as f64) / n as f64 * xd));
                rep.at_root = rep.at_root.max((val - &expect).camax() / expect.camax().max(1e-300));
            } else {
                // zeros are lattice invariant; the reduced point avoids the automorphy growth
                let reduced = basis.eval_matrix(&e.coords, pencil.lattice().reduce(xd));
                rep.vanishing = rep.vanishing.max(reduced.camax() / scale.max(1e-300));
            }
        }
    }

    let mut cache = std::collections::HashMap::new();
    for a in &sb.elements {
        for b in &sb.elements {
            let br = bracket.bracket(&a.coords, &b.coords);
            let norm = max_norm(&a.coords) * max_norm(&b.coords) * cu;
            if a.gamma != b.gamma {
                rep.comm1 = rep.comm1.max(max_norm(&br) / norm);
                continue;
            }
            let (c, target) = commutator_constants(n, k, SectorIndex::new(a.alpha, a.beta), SectorIndex::new(b.alpha, b.beta));
            let key = ((a.alpha + b.alpha) % n, a.beta + b.beta, a.gamma);
            let expected: Vec<C64> = if target.is_zero() || c.norm() < 1e-14 {
                vec![C64::new(0.0, 0.0); br.len()]
            } else {
                if !cache.contains_key(&key) {
                    let el = splitting_element(pencil, &sb, key.0, key.1, key.2)?;
                    rep.expansion = rep.expansion.max(el.fit_residual);
                    cache.insert(key, el.coords);
                }
                cache[&key].iter().map(|v| v * c).collect()
            };
            let diff: Vec<C64> = br.iter().zip(&expected).map(|(x, y)| x - y).collect();
            rep.comm2 = rep.comm2.max(max_norm(&diff) / norm);
        }
    }

    let killing = killing_semisimple(&bracket, 1e-8, pencil.seed() ^ 0x5eed);
    rep.semisimple = killing.semisimple;
    rep.ideal_dims = killing.ideal_dims();
    let _ = m;
    Ok(rep)
}

/// Draws `count` regular values of `u` from a seeded generator.
pub fn regular_parameters(pencil: &PencilData, count: usize, seed: u64) -> Result<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..50 * count.max(1) {
        if out.len() == count {
            break;
        }
        let u = C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        if let Ok((_, true)) = pencil_roots(&pencil.mu1, &pencil.mu2, u) {
            out.push(u);
        }
    }
    if out.len() < count {
        return Err(Error::RootFinding("could not draw enough regular parameters".into()));
    }
    Ok(out)
}

/// A value of `u` at which `mu2 - u mu1` has a double root: `u = mu2(x) / mu1(x)`
/// at a zero `x` of the Wronskian `mu1 mu2' - mu2 mu1'`, found by Newton's
/// method from a grid of starting points.
pub fn branch_parameter(pencil: &PencilData) -> Result<C64> {
    let (f, g) = (&pencil.mu1, &pencil.mu2);
    let w = |z: C64| f.eval(z, 0) * g.eval(z, 1) - g.eval(z, 0) * f.eval(z, 1);
    let dw = |z: C64| f.eval(z, 0) * g.eval(z, 2) - g.eval(z, 0) * f.eval(z, 2);
    let scale = f.grid_norm() * g.grid_norm();
    for start in pencil.lattice().grid(6) {
        let mut z = start;
        for _ in 0..60 {
            let d = dw(z);
            if d.norm() == 0.0 {
                break;
            }
            z -= w(z) / d;
        }
        let at = f.eval(z, 0);
        if z.is_finite() && w(z).norm() < 1e-12 * scale && at.norm() > 1e-6 * f.grid_norm() {
            return Ok(g.eval(z, 0) / at);
        }
    }
    Err(Error::RootFinding("no branch point of the pencil found".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{compatibility_residual, jacobiator};

    fn tau_i() -> C64 {
        C64::new(0.0, 1.0)
    }

    #[test]
    fn basis_counts() {
        let lat = Lattice::new(tau_i()).unwrap();
        assert_eq!(build_vm_basis(2, 1, 1, lat).unwrap().len(), 3);
        assert_eq!(build_vm_basis(2, 2, 1, lat).unwrap().len(), 6);
        assert_eq!(build_vm_basis(3, 2, 1, lat).unwrap().len(), 16);
    }

    #[test]
    fn basis_is_quasi_periodic() {
        let lat = Lattice::new(tau_i()).unwrap();
        let basis = build_vm_basis(2, 2, 1, lat).unwrap();
        for i in 0..basis.len() {
            let mut x = vec![C64::new(0.0, 0.0); basis.len()];
            x[i] = C64::new(1.0, 0.0);
            for z in lat.grid(3) {
                let (r1, r2) = basis.quasi_residual(&x, z);
                assert!(r1 < 1e-9 && r2 < 1e-9, "{i}: {r1} {r2}");
            }
        }
    }

    #[test]
    fn shifted_theta_lies_in_sector() {
        // exp(-2 pi i k beta z / n) g(z - k alpha/(mn) - k beta tau/(mn)) with g in Theta_m
        let lat = Lattice::new(C64::new(0.1, 0.9)).unwrap();
        let (n, m, k) = (3, 2, 2);
        let basis = build_vm_basis(n, m, k, lat).unwrap();
        let g = ThetaFunction::linear_combination(
            &build_theta_space(m, lat, TRUNC_TOL).unwrap(),
            &[C64::new(0.3, -1.0), C64::new(1.1, 0.4)],
        )
        .unwrap();
        let s = SectorIndex::new(1, 2);
        let off = C64::new((k * s.alpha) as f64 / (m * n) as f64, 0.0) + lat.tau() * ((k * s.beta) as f64 / (m * n) as f64);
        let f = |z: C64| exp_turns(-((k * s.beta) as f64) / n as f64 * z) * g.eval(z - off, 0);
        let pts: Vec<C64> = (0..8).map(|i| r2_point(&lat, i + 3)).collect();
        let a = CMat::from_fn(pts.len(), m, |r, c| basis.elements[basis.block(s).start + c].eval(pts[r]));
        let b = CMat::from_fn(pts.len(), 1, |r, _| f(pts[r]));
        let (y, _) = linalg::lstsq(&a, &b, RANK_TOL);
        assert!((a * y - &b).camax() / b.camax() < 1e-10);
    }

    #[test]
    fn elliptic_pair_is_compatible() {
        let p = PencilData::seeded(2, 2, 1, tau_i(), 11).unwrap();
        assert!(p.diagnostics.asymmetry < 1e-9);
        assert!(jacobiator(&p.c1) < 1e-8);
        assert!(jacobiator(&p.c2) < 1e-8);
        assert!(compatibility_residual(&p.pencil()) < 1e-8);
    }

    #[test]
    fn decomposition_of_products() {
        let p = PencilData::seeded(2, 2, 1, tau_i(), 5).unwrap();
        let dim = p.basis.len();
        for i in [0, 3] {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[i] = C64::new(1.0, 0.0);
            let d1 = p.decompose_by_sections(|z| p.basis.eval_matrix(&e, z) * p.mu1.eval(z, 0));
            assert!(max_norm(&d1.q) < 1e-10);
            assert!((d1.p[i] - C64::new(1.0, 0.0)).norm() < 1e-10);
            let d2 = p.decompose_by_sections(|z| p.basis.eval_matrix(&e, z) * p.mu2.eval(z, 0));
            assert!(max_norm(&d2.p) < 1e-10);
            assert!((d2.q[i] - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn scaling_mu1_scales_first_bracket() {
        let p = PencilData::seeded(2, 2, 1, tau_i(), 5).unwrap();
        let lam = C64::new(2.0, -0.5);
        let q = PencilData::new(2, 1, p.mu1.scaled(lam), p.mu2.clone(), 5).unwrap();
        let scaled = p.c1.combine(&(C64::new(1.0, 0.0) / lam), &q.c1, &C64::new(-1.0, 0.0));
        assert!(scaled.max_magnitude() < 1e-9 * p.c1.max_magnitude());
        assert!(p.c2.combine(&C64::new(1.0, 0.0), &q.c2, &C64::new(-1.0, 0.0)).max_magnitude() < 1e-9 * p.c2.max_magnitude());
    }

    #[test]
    fn common_zero_rejected() {
        let lat = Lattice::new(tau_i()).unwrap();
        let sp = build_theta_space(2, lat, TRUNC_TOL).unwrap();
        let f = ThetaFunction::linear_combination(&sp, &[C64::new(1.0, 0.0), C64::new(0.5, 0.2)]).unwrap();
        assert!(matches!(PencilData::new(2, 1, f.clone(), f.scaled(C64::new(2.0, 0.0)), 0), Err(Error::CommonZero(_))));
    }

    #[test]
    fn splitting_relations() {
        let p = PencilData::seeded(2, 2, 1, tau_i(), 11).unwrap();
        let u = regular_parameters(&p, 1, 4).unwrap()[0];
        let rep = verify_splitting(&p, u).unwrap();
        assert!(rep.comm1 < 1e-7, "{rep:?}");
        assert!(rep.comm2 < 1e-7, "{rep:?}");
        assert!(rep.vanishing < 1e-9 && rep.at_root < 1e-8 && rep.expansion < 1e-9, "{rep:?}");
        assert_eq!(rep.ideal_dims, vec![3, 3]);
    }
}
