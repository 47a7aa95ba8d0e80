//! Quasi-periodic Fourier series on the elliptic curve `C / (Z + tau Z)`.
//!
//! A [`ThetaFunction`] stores coefficients `c_j` of
//! `f(z) = sum_j c_j exp(2 pi i e_j z)` with exponents `e_j = j / l + shift`.
//! The coefficients obey `c_{j+m} = twist * exp(2 pi i e_j tau) * c_j`, which
//! is the coefficient form of
//!
//! ```text
//! f_c(z + 1)   = exp(2 pi i (shift - m c / l)) f_c(z)
//! f_c(z + tau) = twist^{-1} exp(-2 pi i (m / l) z) f_{c-1}(z)
//! ```
//!
//! where `f_c` collects the exponents with `j = -m c (mod l)`. With `l = 1`,
//! `shift = 0` and `twist = (-1)^m` this is the space of order-`m` theta
//! functions; twisted characteristics give the sector spaces of the
//! `sl_n`-valued construction and `l > 1` gives vector-valued sections.

use std::f64::consts::PI;

use crate::error::{gcd, Error, Result};
use crate::scalar::{cis_turns, C64};

/// Corner of the fundamental parallelogram. Lattice points are zeros of the
/// generator, so the parallelogram is not anchored at the origin.
pub const ANCHOR: C64 = C64::new(0.013, 0.017);

/// Minimum root separation for a pencil parameter to count as regular.
pub const REGULARITY_DELTA: f64 = 1e-4;

const TRUNCATION_BUDGET: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    tau: C64,
}

impl Lattice {
    pub fn new(tau: C64) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(Error::BadModulus(tau.im));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    /// Real coordinates `(s, t)` with `z = s + t tau`.
    pub fn coords(&self, z: C64) -> (f64, f64) {
        let t = z.im / self.tau.im;
        let s = z.re - t * self.tau.re;
        (s, t)
    }

    pub fn point(&self, s: f64, t: f64) -> C64 {
        C64::new(s, 0.0) + self.tau * t
    }

    /// Representative of `z` in the parallelogram anchored at [`ANCHOR`].
    pub fn reduce(&self, z: C64) -> C64 {
        let (s, t) = self.coords(z - ANCHOR);
        ANCHOR + self.point(s - s.floor(), t - t.floor())
    }

    /// Lattice point closest to `z` in the `(s, t)` coordinates.
    pub fn nearest_lattice_point(&self, z: C64) -> C64 {
        let (s, t) = self.coords(z);
        self.point(s.round(), t.round())
    }

    /// Distance between `a` and `b` on the torus.
    pub fn distance(&self, a: C64, b: C64) -> f64 {
        let d = a - b;
        let base = d - self.nearest_lattice_point(d);
        let mut best = f64::INFINITY;
        for i in -1..=1 {
            for j in -1..=1 {
                best = best.min((base - self.point(i as f64, j as f64)).norm());
            }
        }
        best
    }

    /// Distance from `z` to the lattice.
    pub fn distance_to_lattice(&self, z: C64) -> f64 {
        self.distance(z, C64::new(0.0, 0.0))
    }

    /// `n x n` grid of interior points of the fundamental parallelogram.
    pub fn grid(&self, n: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let s = (a as f64 + 0.5) / n as f64;
                let t = (b as f64 + 0.5) / n as f64;
                out.push(ANCHOR + self.point(s, t));
            }
        }
        out
    }
}

/// Exponent offset and recurrence multiplier of a quasi-periodic space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Characteristic {
    pub shift: f64,
    pub twist: C64,
}

impl Characteristic {
    /// Order-`m` scalar theta functions.
    pub fn scalar(m: usize) -> Self {
        Self { shift: 0.0, twist: C64::new(if m % 2 == 0 { 1.0 } else { -1.0 }, 0.0) }
    }

    /// Sector `(alpha, beta)` of the `sl_n`-valued space: exponents shifted by
    /// `-k beta / n`, translation by `tau` picks up `exp(2 pi i k alpha / n)`.
    pub fn sector(m: usize, n: usize, k: usize, alpha: usize, beta: usize) -> Self {
        let base = Self::scalar(m).twist;
        Self {
            shift: -((k * beta) as f64) / n as f64,
            twist: base * cis_turns(-((k * alpha) as f64) / n as f64),
        }
    }

    /// Rank-`l` vector-valued sections twisted by sector `(alpha, beta)`.
    pub fn vector(m: usize, l: usize, n: usize, k: usize, alpha: usize, beta: usize) -> Self {
        let base = cis_turns((m as f64 - l as f64 - 1.0) / (2.0 * l as f64));
        Self {
            shift: -((k * beta) as f64) / n as f64,
            twist: base * cis_turns(-((k * alpha) as f64) / n as f64),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ThetaFunction {
    order: usize,
    rank: usize,
    lattice: Lattice,
    ch: Characteristic,
    first: i64,
    coeffs: Vec<C64>,
    inv_order_mod_rank: i64,
}

/// Bound on `|Im z|` for which the truncation error estimate is guaranteed.
fn window(lattice: &Lattice) -> f64 {
    2.0 * lattice.tau().im + 1.0
}

impl ThetaFunction {
    /// Extends seed coefficients `c_0, ..., c_{m-1}` by the recurrence until
    /// every dropped term is below `tol` relative to the seeds on the window
    /// `|Im z| <= 2 Im tau + 1`.
    pub fn from_seeds(
        order: usize,
        rank: usize,
        lattice: Lattice,
        ch: Characteristic,
        seeds: &[C64],
        tol: f64,
    ) -> Result<Self> {
        if order == 0 || rank == 0 {
            return Err(Error::InvalidParameter("order and rank must be positive".into()));
        }
        if seeds.len() != order {
            return Err(Error::InvalidParameter(format!(
                "expected {order} seed coefficients, got {}",
                seeds.len()
            )));
        }
        if gcd(order, rank) != 1 {
            return Err(Error::NotCoprime { n: order, k: rank, gcd: gcd(order, rank) });
        }
        let m = order as i64;
        let l = rank as f64;
        let tau = lattice.tau();
        let y = window(&lattice);
        let scale = seeds.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let exponent = |j: i64| j as f64 / l + ch.shift;
        let step = |j: i64| ch.twist * (C64::new(0.0, 2.0 * PI * exponent(j)) * tau).exp();
        let turning = (order as f64 / l) * y / tau.im + 1.0;
        let inv_step = |j: i64| (C64::new(0.0, -2.0 * PI * exponent(j)) * tau).exp() / ch.twist;
        // log of the term's bound on the window; stays finite where the bound itself would overflow
        let log_bound = |j: i64, c: C64| if c.norm() == 0.0 { f64::NEG_INFINITY } else { c.norm().ln() + 2.0 * PI * exponent(j).abs() * y };
        let log_cut = (tol * scale).ln();

        let mut upper: Vec<(i64, C64)> = Vec::new();
        let mut lower: Vec<(i64, C64)> = Vec::new();
        let mut total = 0usize;
        for (j0, &seed) in seeds.iter().enumerate() {
            let j0 = j0 as i64;
            let mut j = j0;
            let mut c = seed;
            loop {
                let next = step(j) * c;
                j += m;
                c = next;
                total += 1;
                if total > TRUNCATION_BUDGET || !c.re.is_finite() || !c.im.is_finite() {
                    return Err(Error::TruncationBudget { budget: TRUNCATION_BUDGET });
                }
                if exponent(j) > turning && log_bound(j, c) < log_cut {
                    break;
                }
                upper.push((j, c));
            }
            let mut j = j0;
            let mut c = seed;
            loop {
                let prev = j - m;
                c *= inv_step(prev);
                j = prev;
                total += 1;
                if total > TRUNCATION_BUDGET || !c.re.is_finite() || !c.im.is_finite() {
                    return Err(Error::TruncationBudget { budget: TRUNCATION_BUDGET });
                }
                if exponent(j) < -turning && log_bound(j, c) < log_cut {
                    break;
                }
                lower.push((j, c));
            }
        }
        let mut all: Vec<(i64, C64)> =
            seeds.iter().enumerate().map(|(j, &c)| (j as i64, c)).collect();
        all.extend(upper);
        all.extend(lower);
        let first = all.iter().map(|e| e.0).min().unwrap();
        let last = all.iter().map(|e| e.0).max().unwrap();
        let mut coeffs = vec![C64::new(0.0, 0.0); (last - first + 1) as usize];
        for (j, c) in all {
            coeffs[(j - first) as usize] = c;
        }
        let inv = (1..=rank as i64).find(|x| (x * m).rem_euclid(rank as i64) == 1 % rank as i64).unwrap_or(0);
        Ok(Self { order, rank, lattice, ch, first, coeffs, inv_order_mod_rank: inv })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn characteristic(&self) -> Characteristic {
        self.ch
    }

    /// Stored coefficients as `(j, c_j)` pairs.
    pub fn coefficients(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &c)| (self.first + i as i64, c))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    fn exponent(&self, j: i64) -> f64 {
        j as f64 / self.rank as f64 + self.ch.shift
    }

    fn component_of(&self, j: i64) -> usize {
        let l = self.rank as i64;
        (-j * self.inv_order_mod_rank).rem_euclid(l) as usize
    }

    /// Maximum violation of the coefficient recurrence over stored indices.
    pub fn recurrence_residual(&self) -> f64 {
        let m = self.order as i64;
        let tau = self.lattice.tau();
        let mut worst: f64 = 0.0;
        for i in 0..self.coeffs.len() {
            let j = self.first + i as i64;
            let Some(&next) = self.coeffs.get(i + self.order) else { continue };
            let c = self.coeffs[i];
            let pred = self.ch.twist * (C64::new(0.0, 2.0 * PI * self.exponent(j)) * tau).exp() * c;
            let scale = c.norm().max(next.norm());
            if scale > 0.0 {
                worst = worst.max((pred - next).norm() / scale);
            }
            let _ = m;
        }
        worst
    }

    /// Component values `f_c^{(d)}(z)`, `c = 0..l`.
    pub fn eval_components(&self, z: C64, deriv: u32) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.rank];
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let j = self.first + i as i64;
            let e = self.exponent(j);
            let w = C64::new(0.0, 2.0 * PI * e);
            let mut term = c * (w * z).exp();
            for _ in 0..deriv {
                term *= w;
            }
            out[self.component_of(j)] += term;
        }
        out
    }

    /// `f^{(d)}(z)` for scalar functions; for `l > 1` the sum of components.
    pub fn eval(&self, z: C64, deriv: u32) -> C64 {
        self.eval_components(z, deriv).into_iter().sum()
    }

    /// `sum_c x_c f_c^{(d)}(z)`.
    pub fn eval_at(&self, z: C64, x: &[C64], deriv: u32) -> C64 {
        self.eval_components(z, deriv).into_iter().zip(x).map(|(a, &b)| a * b).sum()
    }

    /// Residuals of the two functional equations at `z`; the translation by
    /// `tau` is compared after dividing out the automorphy factor.
    pub fn functional_residual(&self, z: C64) -> (f64, f64) {
        let l = self.rank;
        let m = self.order as f64;
        let base = self.eval_components(z, 0);
        let plus1 = self.eval_components(z + 1.0, 0);
        let plus_tau = self.eval_components(z + self.lattice.tau(), 0);
        let mut r1: f64 = 0.0;
        let mut r2: f64 = 0.0;
        let factor_tau = (C64::new(0.0, -2.0 * PI * m / l as f64) * z).exp() / self.ch.twist;
        for c in 0..l {
            let phase = cis_turns(self.ch.shift - m * c as f64 / l as f64);
            r1 = r1.max((plus1[c] - phase * base[c]).norm());
            let prev = base[(c + l - 1) % l];
            r2 = r2.max((plus_tau[c] / factor_tau - prev).norm());
        }
        (r1, r2)
    }

    /// `a * self + b * other`; both must share order, rank and characteristic.
    pub fn combine(&self, a: C64, other: &ThetaFunction, b: C64) -> Result<ThetaFunction> {
        if self.order != other.order || self.rank != other.rank || self.ch != other.ch {
            return Err(Error::InvalidParameter("incompatible theta spaces".into()));
        }
        let first = self.first.min(other.first);
        let last = (self.first + self.coeffs.len() as i64).max(other.first + other.coeffs.len() as i64);
        let mut coeffs = vec![C64::new(0.0, 0.0); (last - first) as usize];
        for (j, c) in self.coefficients() {
            coeffs[(j - first) as usize] += a * c;
        }
        for (j, c) in other.coefficients() {
            coeffs[(j - first) as usize] += b * c;
        }
        Ok(ThetaFunction { first, coeffs, ..self.clone() })
    }

    /// Linear combination `sum_i w_i f_i` of functions from one space.
    pub fn linear_combination(funcs: &[ThetaFunction], weights: &[C64]) -> Result<ThetaFunction> {
        let mut acc = funcs
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty combination".into()))?
            .scaled(weights[0]);
        for (f, &w) in funcs.iter().zip(weights).skip(1) {
            acc = acc.combine(C64::new(1.0, 0.0), f, w)?;
        }
        Ok(acc)
    }

    pub fn scaled(&self, a: C64) -> ThetaFunction {
        ThetaFunction { coeffs: self.coeffs.iter().map(|&c| c * a).collect(), ..self.clone() }
    }

    /// Largest modulus over the 16 x 16 grid.
    pub fn grid_norm(&self) -> f64 {
        self.lattice.grid(16).into_iter().map(|z| self.eval(z, 0).norm()).fold(0.0, f64::max)
    }
}

/// Basis `e_0, ..., e_{m-1}` of a space with given characteristic, with
/// seed `c_j = delta_{ij}`.
pub fn build_space(
    m: usize,
    l: usize,
    lattice: Lattice,
    ch: Characteristic,
    trunc_tol: f64,
) -> Result<Vec<ThetaFunction>> {
    (0..m)
        .map(|i| {
            let seeds: Vec<C64> =
                (0..m).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect();
            ThetaFunction::from_seeds(m, l, lattice, ch, &seeds, trunc_tol)
        })
        .collect()
}

/// Basis of the order-`m` theta functions.
pub fn build_theta_space(m: usize, lattice: Lattice, trunc_tol: f64) -> Result<Vec<ThetaFunction>> {
    if m == 0 {
        return Err(Error::InvalidParameter("order must be at least 1".into()));
    }
    build_space(m, 1, lattice, Characteristic::scalar(m), trunc_tol)
}

/// The generator of the order-one space, normalized by `c_0 = 1`.
pub fn theta_generator(lattice: Lattice, trunc_tol: f64) -> Result<ThetaFunction> {
    Ok(build_theta_space(1, lattice, trunc_tol)?.remove(0))
}

/// Zeros of a scalar quasi-periodic function, repeated by multiplicity.
#[derive(Clone, Debug)]
pub struct RootSet {
    pub roots: Vec<C64>,
    pub multiplicity_flags: Vec<bool>,
    /// Zero count from the boundary argument-principle integral.
    pub boundary_count: i64,
}

impl RootSet {
    /// Distance from the sum of the roots to the nearest lattice point.
    pub fn sum_residual(&self, lattice: &Lattice) -> f64 {
        let s: C64 = self.roots.iter().sum();
        lattice.distance_to_lattice(s)
    }

    /// Representatives shifted so that their sum is the lattice-reduced value
    /// closest to zero (the last root absorbs the lattice translation).
    pub fn balanced(&self, lattice: &Lattice) -> Vec<C64> {
        let mut out = self.roots.clone();
        let s: C64 = out.iter().sum();
        if let Some(last) = out.last_mut() {
            *last -= lattice.nearest_lattice_point(s);
        }
        out
    }

    pub fn min_separation(&self, lattice: &Lattice) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.roots.len() {
            for j in 0..i {
                best = best.min(lattice.distance(self.roots[i], self.roots[j]));
            }
        }
        best
    }
}

fn contour_count(f: &ThetaFunction, path: &dyn Fn(f64) -> (C64, C64), samples: usize) -> C64 {
    // trapezoid on a closed contour; path returns (z, dz/ds) for s in [0,1)
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..samples {
        let s = i as f64 / samples as f64;
        let (z, dz) = path(s);
        acc += f.eval(z, 1) / f.eval(z, 0) * dz;
    }
    acc / samples as f64 / C64::new(0.0, 2.0 * PI)
}

fn boundary_count(f: &ThetaFunction, anchor: C64) -> Option<i64> {
    let tau = f.lattice().tau();
    let corners = [anchor, anchor + 1.0, anchor + 1.0 + tau, anchor + tau];
    let scale = f.grid_norm();
    let edge = |s: f64| {
        let side = ((s * 4.0).floor() as usize).min(3);
        let local = s * 4.0 - side as f64;
        let a = corners[side];
        let b = corners[(side + 1) % 4];
        (a + (b - a) * local, (b - a) * 4.0)
    };
    let samples = 2048;
    for i in 0..samples {
        let (z, _) = edge(i as f64 / samples as f64);
        if f.eval(z, 0).norm() < 1e-6 * scale {
            return None;
        }
    }
    let count = contour_count(f, &edge, samples);
    if (count.re - count.re.round()).abs() > 0.1 || count.im.abs() > 0.1 {
        return None;
    }
    Some(count.re.round() as i64)
}

fn newton(f: &ThetaFunction, mut z: C64, mult: f64, iters: usize) -> Option<C64> {
    for _ in 0..iters {
        let v = f.eval(z, 0);
        let d = f.eval(z, 1);
        if d.norm() == 0.0 {
            return if v.norm() == 0.0 { Some(z) } else { None };
        }
        let step = v / d * mult;
        z -= step;
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    Some(z)
}

/// Zeros of a scalar function in the fundamental parallelogram.
///
/// Coarse grid minima seed Newton iterations; multiplicities come from small
/// contour integrals and the total is certified against the boundary
/// argument-principle count, which must equal the order.
pub fn find_roots(f: &ThetaFunction) -> Result<RootSet> {
    if f.rank() != 1 {
        return Err(Error::InvalidParameter("root finding needs a scalar function".into()));
    }
    let lattice = *f.lattice();
    let m = f.order();
    let scale = f.grid_norm();
    if scale == 0.0 {
        return Err(Error::RootFinding("function vanishes identically".into()));
    }
    let mut anchor = ANCHOR;
    let mut count = None;
    for attempt in 0..5 {
        count = boundary_count(f, anchor);
        if count.is_some() {
            break;
        }
        anchor += C64::new(0.0173 * (attempt + 1) as f64, 0.0119 * (attempt + 1) as f64);
    }
    let count = count.ok_or_else(|| Error::RootFinding("boundary passes through a root".into()))?;
    if count != m as i64 {
        return Err(Error::RootFinding(format!("argument principle count {count} != {m}")));
    }

    let res = 64;
    let grid = |a: usize, b: usize| {
        ANCHOR + lattice.point((a as f64 + 0.5) / res as f64, (b as f64 + 0.5) / res as f64)
    };
    let vals: Vec<Vec<f64>> =
        (0..res).map(|a| (0..res).map(|b| f.eval(grid(a, b), 0).norm()).collect()).collect();
    let mut seeds = Vec::new();
    for a in 0..res {
        for b in 0..res {
            let v = vals[a][b];
            let mut is_min = true;
            for da in -1i64..=1 {
                for db in -1i64..=1 {
                    if da == 0 && db == 0 {
                        continue;
                    }
                    let (x, y) = (a as i64 + da, b as i64 + db);
                    if x < 0 || y < 0 || x >= res as i64 || y >= res as i64 {
                        continue;
                    }
                    if vals[x as usize][y as usize] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                seeds.push(grid(a, b));
            }
        }
    }

    let mut distinct: Vec<C64> = Vec::new();
    for s in seeds {
        let Some(z) = newton(f, s, 1.0, 100) else { continue };
        if f.eval(z, 0).norm() > 1e-7 * scale {
            continue;
        }
        let z = lattice.reduce(z);
        if distinct.iter().all(|&d| lattice.distance(d, z) > 1e-6) {
            distinct.push(z);
        }
    }

    let sep = {
        let mut best: f64 = 0.05;
        for i in 0..distinct.len() {
            for j in 0..i {
                best = best.min(0.25 * lattice.distance(distinct[i], distinct[j]));
            }
        }
        best
    };
    let mut roots = Vec::new();
    let mut flags = Vec::new();
    for &z0 in &distinct {
        let circle = |s: f64| {
            let w = cis_turns(s);
            (z0 + w * sep, C64::new(0.0, 2.0 * PI) * w * sep)
        };
        let k = contour_count(f, &circle, 256).re.round().max(1.0) as usize;
        let z = if k > 1 { newton(f, z0, k as f64, 20).unwrap_or(z0) } else { z0 };
        let z = lattice.reduce(z);
        for _ in 0..k {
            roots.push(z);
            flags.push(k > 1);
        }
    }
    if roots.len() != m {
        return Err(Error::RootFinding(format!(
            "found {} roots with multiplicity, expected {m}",
            roots.len()
        )));
    }
    Ok(RootSet { roots, multiplicity_flags: flags, boundary_count: count })
}

/// Roots of `mu2 - u mu1` and whether `u` is regular.
pub fn pencil_roots(mu1: &ThetaFunction, mu2: &ThetaFunction, u: C64) -> Result<(RootSet, bool)> {
    let member = mu2.combine(C64::new(1.0, 0.0), mu1, -u)?;
    let reference = mu2.grid_norm() + u.norm() * mu1.grid_norm();
    if member.grid_norm() <= 1e-12 * reference {
        return Err(Error::DegeneratePencil(format!("{u}")));
    }
    let roots = find_roots(&member)?;
    let regular = !roots.multiplicity_flags.iter().any(|&f| f)
        && roots.min_separation(member.lattice()) > REGULARITY_DELTA;
    Ok((roots, regular))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn high_order_with_large_imaginary_part_truncates() {
        for m in 4..7 {
            let lattice = lat(0.0, 1.6);
            let space = build_theta_space(m, lattice, 1e-17).unwrap();
            for f in &space {
                let worst = lattice.grid(5).into_iter().map(|z| {
                    let (r1, r2) = f.functional_residual(z);
                    r1.max(r2)
                });
                assert!(worst.fold(0.0, f64::max) < 1e-9 * f.grid_norm(), "m = {m}");
            }
        }
    }

    fn lat(re: f64, im: f64) -> Lattice {
        Lattice::new(C64::new(re, im)).unwrap()
    }

    #[test]
    fn generator_vanishes_at_origin() {
        let th = theta_generator(lat(0.0, 1.0), 1e-16).unwrap();
        assert!(th.eval(C64::new(0.0, 0.0), 0).norm() < 1e-14);
        assert!(th.eval(C64::new(0.0, 0.0), 1).norm() > 1.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let th = theta_generator(lat(0.1, 0.8), 1e-16).unwrap();
        let z = C64::new(0.31, 0.22);
        let h = 1e-5;
        let fd = (th.eval(z + h, 0) - th.eval(z - h, 0)) / (2.0 * h);
        let d = th.eval(z, 1);
        assert!((fd - d).norm() / d.norm() < 1e-7);
    }

    #[test]
    fn space_satisfies_functional_equations() {
        let l = lat(0.0, 1.0);
        for f in build_theta_space(2, l, 1e-16).unwrap() {
            let norm = f.grid_norm();
            for z in l.grid(5) {
                let (r1, r2) = f.functional_residual(z);
                assert!(r1 < 1e-10 * norm && r2 < 1e-10 * norm, "{r1} {r2}");
            }
            assert!(f.recurrence_residual() < 1e-12);
        }
    }

    #[test]
    fn bad_modulus_rejected() {
        assert!(matches!(Lattice::new(C64::new(0.0, -1.0)), Err(Error::BadModulus(_))));
    }

    #[test]
    fn truncation_budget_trips_near_real_axis() {
        let l = lat(0.0, 1e-4);
        assert!(matches!(build_theta_space(1, l, 1e-16), Err(Error::TruncationBudget { .. })));
    }

    #[test]
    fn lattice_distance_wraps() {
        let l = lat(0.2, 0.9);
        let a = C64::new(0.1, 0.1);
        let b = a + l.tau() + 1.0;
        assert!(l.distance(a, b) < 1e-12);
        assert!(l.distance_to_lattice(l.tau() * 2.0 - 3.0) < 1e-12);
    }
}
