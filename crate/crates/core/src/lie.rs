//! Structure-constant tensors `c^k_{ij}` and the checks run on them.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exact::DenseMatrix;
use crate::linalg::{self, CMat, RANK_TOL};
use crate::poly::PolyElement;
use crate::scalar::{Scalar, C64};

/// Antisymmetric tensor `c^k_{ij}`, stored as `data[(i * dim + j) * dim + k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LieStructure<S = C64> {
    dim: usize,
    data: Vec<S>,
    pub label: String,
}

impl<S: Scalar> LieStructure<S> {
    pub fn zeros(dim: usize, label: impl Into<String>) -> Self {
        Self { dim, data: vec![S::zero(); dim * dim * dim], label: label.into() }
    }

    /// Builds the tensor from its `i < j` entries.
    pub fn from_upper(dim: usize, label: impl Into<String>, mut f: impl FnMut(usize, usize, usize) -> S) -> Self {
        let mut out = Self::zeros(dim, label);
        for i in 0..dim {
            for j in i + 1..dim {
                for k in 0..dim {
                    out.set(i, j, k, f(i, j, k));
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> &S {
        &self.data[(i * self.dim + j) * self.dim + k]
    }

    /// Sets `c^k_{ij} = v` and `c^k_{ji} = -v`.
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: S) {
        assert!(i != j || v.is_zero(), "diagonal entries of a bracket must vanish");
        let d = self.dim;
        self.data[(j * d + i) * d + k] = -v.clone();
        self.data[(i * d + j) * d + k] = v;
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, &S)> {
        let d = self.dim;
        self.data.iter().enumerate().map(move |(idx, v)| (idx / (d * d), (idx / d) % d, idx % d, v))
    }

    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(|v| v.magnitude()).fold(0.0, f64::max)
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.entries().all(|(i, j, k, v)| *v == -self.get(j, i, k).clone())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LieStructure<T> {
        LieStructure { dim: self.dim, data: self.data.iter().map(f).collect(), label: self.label.clone() }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: &S, other: &Self, b: &S) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a.clone() * x.clone() + b.clone() * y.clone()).collect();
        Self { dim: self.dim, data, label: format!("{}+{}", self.label, other.label) }
    }

    /// `[x, y]` for coordinate vectors.
    pub fn bracket(&self, x: &[S], y: &[S]) -> Vec<S> {
        let d = self.dim;
        let mut out = vec![S::zero(); d];
        for i in 0..d {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..d {
                if y[j].is_zero() {
                    continue;
                }
                let w = x[i].clone() * y[j].clone();
                for (k, o) in out.iter_mut().enumerate() {
                    let c = self.get(i, j, k);
                    if !c.is_zero() {
                        *o = o.clone() + w.clone() * c.clone();
                    }
                }
            }
        }
        out
    }

    /// Block-diagonal sum of two algebras.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let d = self.dim + other.dim;
        let mut out = Self::zeros(d, format!("{}+{}", self.label, other.label));
        for (i, j, k, v) in self.entries() {
            if i < j {
                out.set(i, j, k, v.clone());
            }
        }
        let o = self.dim;
        for (i, j, k, v) in other.entries() {
            if i < j {
                out.set(i + o, j + o, k + o, v.clone());
            }
        }
        out
    }
}

impl LieStructure<C64> {
    /// Antisymmetrizes a raw tensor, returning the structure and the
    /// largest deviation `|c^k_{ij} + c^k_{ji}|` before the fix.
    pub fn antisymmetrized(dim: usize, label: impl Into<String>, raw: impl Fn(usize, usize, usize) -> C64) -> (Self, f64) {
        let mut out = Self::zeros(dim, label);
        let mut asym: f64 = 0.0;
        for i in 0..dim {
            for k in 0..dim {
                asym = asym.max(raw(i, i, k).norm());
            }
            for j in i + 1..dim {
                for k in 0..dim {
                    let a = raw(i, j, k);
                    let b = raw(j, i, k);
                    asym = asym.max((a + b).norm());
                    out.set(i, j, k, (a - b) * 0.5);
                }
            }
        }
        (out, asym)
    }

    /// Matrix of `ad_{e_i}`: column `j` holds `[e_i, e_j]`.
    pub fn ad(&self, i: usize) -> CMat {
        CMat::from_fn(self.dim, self.dim, |k, j| *self.get(i, j, k))
    }

    pub fn ad_vec(&self, x: &[C64]) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (i, &xi) in x.iter().enumerate() {
            if xi != C64::new(0.0, 0.0) {
                out += self.ad(i) * xi;
            }
        }
        out
    }

    /// Adds `scale` times a seeded random antisymmetric tensor.
    pub fn perturbed(&self, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                for k in 0..self.dim {
                    let v = *self.get(i, j, k) + C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
                    out.set(i, j, k, v);
                }
            }
        }
        out.label = format!("{}~perturbed", self.label);
        out
    }

    /// The standard `sl_2` constants in the basis `(h, e, f)`.
    pub fn sl2() -> Self {
        let one = C64::new(1.0, 0.0);
        let mut c = Self::zeros(3, "sl2");
        c.set(0, 1, 1, one * 2.0);
        c.set(0, 2, 2, -one * 2.0);
        c.set(1, 2, 0, one);
        c
    }

    pub fn random_antisymmetric(dim: usize, seed: u64) -> Self {
        Self::zeros(dim, "random").perturbed(1.0, seed)
    }
}

/// Two brackets on the same space; member at `u` is `c1 + u c2`.
#[derive(Clone, Debug)]
pub struct BracketPencil<S = C64> {
    pub c1: LieStructure<S>,
    pub c2: LieStructure<S>,
}

impl<S: Scalar> BracketPencil<S> {
    pub fn new(c1: LieStructure<S>, c2: LieStructure<S>) -> Self {
        assert_eq!(c1.dim(), c2.dim(), "pencil ends must share a dimension");
        Self { c1, c2 }
    }

    pub fn at(&self, u: &S) -> LieStructure<S> {
        let mut out = self.c1.combine(&S::one(), &self.c2, u);
        out.label = format!("{}+u*{}", self.c1.label, self.c2.label);
        out
    }

    pub fn dim(&self) -> usize {
        self.c1.dim()
    }
}

/// Visits `sum_m (a^m_{ij} b^l_{mk} + b^m_{ij} a^l_{mk})` plus cyclic
/// terms for every `i < j < k` and `l`.
fn for_each_mixed_jacobi<S: Scalar>(a: &LieStructure<S>, b: &LieStructure<S>, mut visit: impl FnMut(S)) {
    let d = a.dim();
    let term = |x: &LieStructure<S>, y: &LieStructure<S>, i: usize, j: usize, k: usize, l: usize| {
        let mut acc = S::zero();
        for m in 0..d {
            let p = x.get(i, j, m);
            if p.is_zero() {
                continue;
            }
            let q = y.get(m, k, l);
            if !q.is_zero() {
                acc = acc + p.clone() * q.clone();
            }
        }
        acc
    };
    for i in 0..d {
        for j in i + 1..d {
            for k in j + 1..d {
                for l in 0..d {
                    let mut s = term(a, b, i, j, k, l) + term(a, b, j, k, i, l) + term(a, b, k, i, j, l);
                    if !std::ptr::eq(a, b) {
                        s = s + term(b, a, i, j, k, l) + term(b, a, j, k, i, l) + term(b, a, k, i, j, l);
                    }
                    visit(s);
                }
            }
        }
    }
}

fn mixed_jacobi_max<S: Scalar>(a: &LieStructure<S>, b: &LieStructure<S>) -> f64 {
    let mut worst: f64 = 0.0;
    for_each_mixed_jacobi(a, b, |s| worst = worst.max(s.magnitude()));
    worst
}

/// Number of Jacobi sums that are not exactly zero.
pub fn jacobi_violations<S: Scalar>(c: &LieStructure<S>) -> usize {
    let mut count = 0;
    for_each_mixed_jacobi(c, c, |s| count += usize::from(!s.is_zero()));
    count
}

/// Number of mixed Jacobi sums of the pencil ends that are not exactly zero.
pub fn compatibility_violations<S: Scalar>(p: &BracketPencil<S>) -> usize {
    let mut count = 0;
    for_each_mixed_jacobi(&p.c1, &p.c2, |s| count += usize::from(!s.is_zero()));
    count
}

/// Jacobi identity defect normalized by `max|c|^2`; exactly zero for an
/// exact Lie algebra over an exact field.
pub fn jacobiator<S: Scalar>(c: &LieStructure<S>) -> f64 {
    let scale = c.max_magnitude();
    if scale == 0.0 {
        return 0.0;
    }
    mixed_jacobi_max(c, c) / (scale * scale)
}

/// Polarized Jacobi defect between the two ends, normalized by
/// `max|c1| * max|c2|`. Zero iff every pencil member is Lie, given both
/// ends are.
pub fn compatibility_residual<S: Scalar>(p: &BracketPencil<S>) -> f64 {
    let scale = p.c1.max_magnitude() * p.c2.max_magnitude();
    if scale == 0.0 {
        return 0.0;
    }
    mixed_jacobi_max(&p.c1, &p.c2) / scale
}

/// Linear Poisson bracket `{f, g} = sum c^k_{ij} x_k d_i f d_j g`.
pub fn lie_poisson_bracket(f: &PolyElement, g: &PolyElement, c: &LieStructure) -> PolyElement {
    let d = c.dim();
    assert_eq!(f.num_vars(), d);
    assert_eq!(g.num_vars(), d);
    let df: Vec<PolyElement> = (0..d).map(|i| f.derivative(i)).collect();
    let dg: Vec<PolyElement> = (0..d).map(|i| g.derivative(i)).collect();
    let mut out = PolyElement::zero(d);
    for i in 0..d {
        for j in i + 1..d {
            let lin: Vec<C64> = (0..d).map(|k| *c.get(i, j, k)).collect();
            if lin.iter().all(|v| v.norm() == 0.0) {
                continue;
            }
            let cross = &(&df[i] * &dg[j]) - &(&df[j] * &dg[i]);
            if cross.is_zero() {
                continue;
            }
            out = &out + &(&cross * &PolyElement::linear(&lin));
        }
    }
    out
}

/// `max_j |{f, x_j}| / (|f| max|c|)` with coefficient max-norms.
pub fn is_casimir(f: &PolyElement, c: &LieStructure) -> f64 {
    let scale = f.norm() * c.max_magnitude();
    if scale == 0.0 {
        return 0.0;
    }
    (0..c.dim())
        .map(|j| lie_poisson_bracket(f, &PolyElement::var(c.dim(), j), c).norm())
        .fold(0.0, f64::max)
        / scale
}

/// Linear Casimirs: vectors `v` with `sum_i v_i c^k_{ij} = 0`, returned in
/// reduced echelon form.
pub fn center_basis(c: &LieStructure) -> Vec<PolyElement> {
    let d = c.dim();
    let m = CMat::from_fn(d * d, d, |row, i| *c.get(i, row / d, row % d));
    let ns = linalg::null_space(&m, RANK_TOL);
    echelon_columns(&ns).into_iter().map(|v| PolyElement::linear(&v)).collect()
}

/// Gauss-Jordan on the transpose of a column basis, with tiny entries
/// snapped to zero.
fn echelon_columns(basis: &CMat) -> Vec<Vec<C64>> {
    let (n, r) = basis.shape();
    let mut rows: Vec<Vec<C64>> = (0..r).map(|c| (0..n).map(|i| basis[(i, c)]).collect()).collect();
    let mut lead = 0;
    for col in 0..n {
        if lead == r {
            break;
        }
        let (p, best) = (lead..r).map(|i| (i, rows[i][col].norm())).fold((lead, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        if best < 1e-10 {
            continue;
        }
        rows.swap(lead, p);
        let inv = rows[lead][col].inv();
        for v in rows[lead].iter_mut() {
            *v *= inv;
        }
        for i in 0..r {
            if i != lead {
                let f = rows[i][col];
                for j in 0..n {
                    let t = rows[lead][j];
                    rows[i][j] -= f * t;
                }
            }
        }
        lead += 1;
    }
    for row in rows.iter_mut() {
        for v in row.iter_mut() {
            if v.re.abs() < 1e-12 {
                v.re = 0.0;
            }
            if v.im.abs() < 1e-12 {
                v.im = 0.0;
            }
        }
    }
    rows
}

/// Outcome of the Killing-form test and ideal splitting.
#[derive(Clone, Debug)]
pub struct KillingReport {
    pub killing: CMat,
    pub condition: f64,
    pub semisimple: bool,
    pub centroid_dim: usize,
    /// Residual of the centroid basis against every `ad_{e_i}`.
    pub centroid_residual: f64,
    /// Column bases of the simple ideals.
    pub ideals: Vec<CMat>,
}

impl KillingReport {
    pub fn ideal_dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.ideals.iter().map(|m| m.ncols()).collect();
        d.sort_unstable();
        d
    }
}

/// `B_{ij} = sum c^l_{ik} c^k_{jl}`.
pub fn killing_form(c: &LieStructure) -> CMat {
    let ads: Vec<CMat> = (0..c.dim()).map(|i| c.ad(i)).collect();
    CMat::from_fn(c.dim(), c.dim(), |i, j| (&ads[i] * &ads[j]).trace())
}

pub fn killing_semisimple(c: &LieStructure, tol: f64, seed: u64) -> KillingReport {
    let killing = killing_form(c);
    let sv = linalg::singular_values(&killing);
    let top = sv.first().copied().unwrap_or(0.0);
    let low = sv.last().copied().unwrap_or(0.0);
    let condition = if low > 0.0 { top / low } else { f64::INFINITY };
    let semisimple = top > 0.0 && low > tol * top;
    let mut report = KillingReport { killing, condition, semisimple, centroid_dim: 0, centroid_residual: 0.0, ideals: Vec::new() };
    if !semisimple {
        return report;
    }

    let d = c.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_vec = || (0..d).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect::<Vec<_>>();
    let probes = [c.ad_vec(&random_vec()), c.ad_vec(&random_vec())];
    // rows: entries (r, s) of A T - T A; unknown T_{qs} at q + d * s
    let mut sys = CMat::zeros(2 * d * d, d * d);
    for (p, a) in probes.iter().enumerate() {
        for r in 0..d {
            for s in 0..d {
                let row = p * d * d + r + d * s;
                for q in 0..d {
                    sys[(row, q + d * s)] += a[(r, q)];
                    sys[(row, r + d * q)] -= a[(q, s)];
                }
            }
        }
    }
    let ns = linalg::null_space(&sys, RANK_TOL);
    report.centroid_dim = ns.ncols();
    let as_matrix = |col: usize| CMat::from_fn(d, d, |q, s| ns[(q + d * s, col)]);
    let ads: Vec<CMat> = (0..d).map(|i| c.ad(i)).collect();
    let mut generic = CMat::zeros(d, d);
    for col in 0..ns.ncols() {
        let t = as_matrix(col);
        for a in &ads {
            let res = (a * &t - &t * a).camax() / a.camax().max(1e-300);
            report.centroid_residual = report.centroid_residual.max(res);
        }
        generic += t * C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }

    let mut eig = linalg::eigenvalues(&generic);
    let spread = eig.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let mut distinct: Vec<C64> = Vec::new();
    eig.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    for z in eig {
        if distinct.iter().all(|w| (w - z).norm() > 1e-6 * spread) {
            distinct.push(z);
        }
    }
    for lam in distinct {
        let shifted = &generic - CMat::identity(d, d) * lam;
        let basis = linalg::null_space(&shifted, 1e-7);
        if basis.ncols() > 0 {
            report.ideals.push(basis);
        }
    }
    report
}

/// Solution of `c2(R) = c2` with
/// `c2(R)^k_{ij} = sum_a R_{ai} c1^k_{aj} + R_{aj} c1^k_{ia} - c1^a_{ij} R_{ka}`.
#[derive(Clone, Debug)]
pub struct ROperator {
    pub matrix: CMat,
}

#[derive(Clone, Debug)]
pub struct RRecovery {
    pub operator: ROperator,
    /// `|c2 - c2(R)| / |c2|` in Frobenius norm, absolute when `c2 = 0`.
    pub residual: f64,
    pub rank: usize,
    /// Dimension of the affine solution space, `N^2 - rank`.
    pub solution_dim: usize,
}

fn r_system(c1: &LieStructure) -> CMat {
    let d = c1.dim();
    let rows: Vec<(usize, usize, usize)> =
        (0..d).flat_map(|i| (i + 1..d).flat_map(move |j| (0..d).map(move |k| (i, j, k)))).collect();
    let mut a = CMat::zeros(rows.len(), d * d);
    for (r, &(i, j, k)) in rows.iter().enumerate() {
        for x in 0..d {
            a[(r, x + d * i)] += *c1.get(x, j, k);
            a[(r, x + d * j)] += *c1.get(i, x, k);
            a[(r, k + d * x)] -= *c1.get(i, j, x);
        }
    }
    a
}

fn upper_vector(c: &LieStructure) -> CMat {
    let d = c.dim();
    let vals: Vec<C64> =
        (0..d).flat_map(|i| (i + 1..d).flat_map(move |j| (0..d).map(move |k| (i, j, k)))).map(|(i, j, k)| *c.get(i, j, k)).collect();
    CMat::from_column_slice(vals.len(), 1, &vals)
}

pub fn recover_r_operator(p: &BracketPencil) -> RRecovery {
    let d = p.dim();
    let a = r_system(&p.c1);
    let b = upper_vector(&p.c2);
    let (x, rank) = linalg::lstsq(&a, &b, RANK_TOL);
    let fit = &a * &x;
    let scale = b.norm();
    let residual = if scale > 0.0 { (&fit - &b).norm() / scale } else { fit.norm() };
    RRecovery {
        operator: ROperator { matrix: CMat::from_fn(d, d, |r, c| x[(r + d * c, 0)]) },
        residual,
        rank,
        solution_dim: d * d - rank,
    }
}

/// Applies the formula above for a given `R`.
pub fn bracket_from_r(c1: &LieStructure, r: &ROperator) -> LieStructure {
    let d = c1.dim();
    let a = r_system(c1);
    let x = CMat::from_fn(d * d, 1, |idx, _| r.matrix[(idx % d, idx / d)]);
    let v = a * x;
    let mut idx = 0;
    let mut out = LieStructure::zeros(d, "c2(R)");
    for i in 0..d {
        for j in i + 1..d {
            for k in 0..d {
                out.set(i, j, k, v[(idx, 0)]);
                idx += 1;
            }
        }
    }
    out
}

/// Minimal indices of the skew pencil `A + lambda B` with
/// `A_{ij} = c1^k_{ij} x_k`, `B_{ij} = c2^k_{ij} x_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct KroneckerIndices {
    pub indices: Vec<usize>,
    /// `N - sum (2 e + 1)`; zero when the pencil has no Jordan part.
    pub jordan_size: usize,
}

impl KroneckerIndices {
    pub fn gz_sum(&self) -> usize {
        self.indices.iter().map(|e| 2 * e + 1).sum()
    }
}

/// Counts minimal indices from kernel dimensions of the block Toeplitz
/// matrices whose kernels are polynomial kernel vectors of degree `<= d`.
pub fn kronecker_indices<S: Scalar>(
    p: &BracketPencil<S>,
    point: &[S],
    lambda0: &S,
    rank: impl Fn(&DenseMatrix<S>) -> usize,
) -> KroneckerIndices {
    let n = p.dim();
    let eval = |c: &LieStructure<S>| {
        DenseMatrix::from_fn(n, n, |i, j| {
            let mut acc = S::zero();
            for (k, xk) in point.iter().enumerate() {
                let v = c.get(i, j, k);
                if !v.is_zero() {
                    acc = acc + v.clone() * xk.clone();
                }
            }
            acc
        })
    };
    let a = eval(&p.c1);
    let b = eval(&p.c2);
    let generic = DenseMatrix::from_fn(n, n, |i, j| a.get(i, j).clone() + lambda0.clone() * b.get(i, j).clone());
    let corank = n - rank(&generic);

    let mut counts = Vec::new();
    let mut prev_kernel = 0usize;
    let mut prev_delta = 0usize;
    let mut found = 0usize;
    for d in 0..=n {
        if found == corank {
            break;
        }
        let m = DenseMatrix::from_fn((d + 2) * n, (d + 1) * n, |r, c| {
            let (re, ri) = (r / n, r % n);
            let (ce, ci) = (c / n, c % n);
            if re == ce {
                a.get(ri, ci).clone()
            } else if re == ce + 1 {
                b.get(ri, ci).clone()
            } else {
                S::zero()
            }
        });
        let kernel = (d + 1) * n - rank(&m);
        let delta = kernel - prev_kernel;
        let new = delta.saturating_sub(prev_delta);
        counts.extend(std::iter::repeat(d).take(new));
        found += new;
        prev_kernel = kernel;
        prev_delta = delta;
    }
    let total: usize = counts.iter().map(|e| 2 * e + 1).sum();
    KroneckerIndices { indices: counts, jordan_size: n.saturating_sub(total) }
}

/// Floating-point Kronecker indices at a seeded random point.
pub fn kronecker_indices_numeric(p: &BracketPencil, seed: u64) -> KroneckerIndices {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point: Vec<C64> = (0..p.dim()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let lambda0 = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    kronecker_indices(p, &point, &lambda0, |m| linalg::rank(&m.to_cmat(), RANK_TOL))
}
