//! Residual batteries for each construction, producing [`Report`]s shared
//! by the command-line tool and the acceptance tests.

use std::time::Instant;

use num_rational::BigRational;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bundle::{vector_theta_dimension, MultiPencil};
use crate::casimir::{casimir_quadratic, degree_ledger, CasimirBuilder, HOptions};
use crate::degenerate::cyclotomic::Cyclotomic;
use crate::degenerate::rational::{default_sections, rational_structure_constants};
use crate::degenerate::trig::{trig_structure_constants, TrigPoly};
use crate::degenerate::{exact_kronecker, quadratic_invariants, ExactPencil};
use crate::elliptic::{branch_parameter, regular_parameters, splitting_basis, verify_splitting, PencilData};
use crate::error::{Error, Result};
use crate::lie::{compatibility_residual, compatibility_violations, is_casimir, jacobi_violations, jacobiator, kronecker_indices_numeric, recover_r_operator};
use crate::report::{Check, Report};
use crate::scalar::{ExactField, C64};
use crate::theta::{build_theta_space, pencil_roots, ThetaFunction};

/// Tolerances of the floating-point batteries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub jacobi: f64,
    pub splitting: f64,
    pub casimir_kernel: f64,
    pub centrality: f64,
    pub quadratic: f64,
    pub r_operator: f64,
    pub vector: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::profile("desk").expect("built-in profile")
    }
}

impl Tolerances {
    /// Named profiles: `desk` (the defaults), `strict` (ten times tighter)
    /// and `loose` (a hundred times looser).
    pub fn profile(name: &str) -> Result<Self> {
        let desk = Self { jacobi: 1e-8, splitting: 1e-7, casimir_kernel: 1e-10, centrality: 1e-6, quadratic: 1e-8, r_operator: 1e-6, vector: 1e-7 };
        Ok(desk.scaled(profile_scale(name)?))
    }

    pub fn scaled(self, f: f64) -> Self {
        Self {
            jacobi: self.jacobi * f,
            splitting: self.splitting * f,
            casimir_kernel: self.casimir_kernel * f,
            centrality: self.centrality * f,
            quadratic: self.quadratic * f,
            r_operator: self.r_operator * f,
            vector: self.vector * f,
        }
    }

    fn record(&self, report: &mut Report) {
        report.note(
            "tolerances",
            format!(
                "jacobi {:.0e}, splitting {:.0e}, casimir kernel {:.0e}, centrality {:.0e}, quadratic {:.0e}, r-operator {:.0e}, vector {:.0e}",
                self.jacobi, self.splitting, self.casimir_kernel, self.centrality, self.quadratic, self.r_operator, self.vector
            ),
        );
    }
}

/// Factor a named profile applies to the default tolerances.
pub fn profile_scale(name: &str) -> Result<f64> {
    match name {
        "desk" => Ok(1.0),
        "strict" => Ok(0.1),
        "loose" => Ok(100.0),
        other => Err(Error::InvalidParameter(format!("unknown tolerance profile {other:?} (desk, strict, loose)"))),
    }
}

#[derive(Clone, Debug)]
pub struct EllipticConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub tau: C64,
    pub seed: u64,
    /// Coordinates of `mu1`, `mu2` in the order-`m` theta basis; seeded draw when absent.
    pub sections: Option<(Vec<C64>, Vec<C64>)>,
    /// Number of regular parameters sampled for the splitting checks.
    pub samples: usize,
    /// Noise added to the first bracket before checking, to exercise failure paths.
    pub perturb: Option<f64>,
    pub tolerances: Tolerances,
}

impl Default for EllipticConfig {
    fn default() -> Self {
        Self { n: 2, m: 2, k: 1, tau: C64::new(0.0, 1.0), seed: 7, sections: None, samples: 3, perturb: None, tolerances: Tolerances::default() }
    }
}

/// Brackets, splitting at regular parameters, the Casimir ledger, the
/// shared quadratic Casimir, R-operator recovery and negative controls.
pub fn elliptic_battery(cfg: &EllipticConfig) -> Result<Report> {
    let tol = cfg.tolerances;
    let mut report = Report::new(format!("elliptic pencil n = {}, m = {}, k = {}", cfg.n, cfg.m, cfg.k));
    report.note("tau", cfg.tau);
    report.note("seed", cfg.seed);
    tol.record(&mut report);

    let start = Instant::now();
    let mut pencil = match &cfg.sections {
        Some((mu1, mu2)) => PencilData::from_coefficients(cfg.n, cfg.k, cfg.tau, mu1, mu2, cfg.seed)?,
        None => PencilData::seeded(cfg.n, cfg.m, cfg.k, cfg.tau, cfg.seed)?,
    };
    report.push(
        Check::holds("construction", true, format!("dim {}, split residual {:.1e}", pencil.basis.len(), pencil.diagnostics.decomposition_residual))
            .with_seconds(start.elapsed().as_secs_f64()),
    );
    if let Some(scale) = cfg.perturb {
        pencil.c1 = pencil.c1.perturbed(scale, cfg.seed);
    }
    report.push(Check::below("jacobi c1", jacobiator(&pencil.c1), tol.jacobi));
    report.push(Check::below("jacobi c2", jacobiator(&pencil.c2), tol.jacobi));
    report.push(Check::below("compatibility", compatibility_residual(&pencil.pencil()), tol.jacobi));

    let us = regular_parameters(&pencil, cfg.samples, cfg.seed)?;
    for (idx, &u) in us.iter().enumerate() {
        let start = Instant::now();
        let th = verify_splitting(&pencil, u)?;
        let secs = start.elapsed().as_secs_f64();
        report.push(Check::below(format!("splitting #{idx} mixed brackets vanish"), th.comm1, tol.splitting).with_detail(format!("u = {u:.4}")).with_seconds(secs));
        report.push(Check::below(format!("splitting #{idx} sl_n relations"), th.comm2, tol.splitting));
        let expected = vec![cfg.n * cfg.n - 1; cfg.m];
        let mut dims = th.ideal_dims.clone();
        dims.sort_unstable();
        report.push(Check::holds(format!("splitting #{idx} simple ideals"), th.semisimple && dims == expected, format!("ideals {dims:?}")));
    }

    let start = Instant::now();
    let ledger = degree_ledger(&pencil, cfg.n, &us, HOptions::default())?;
    let secs = start.elapsed().as_secs_f64();
    let kernel = ledger.rows.iter().map(|r| r.kernel_residual).fold(0.0, f64::max);
    let centrality = ledger.rows.iter().map(|r| r.centrality).fold(0.0, f64::max);
    report.push(Check::below("pencil member in the kernel", kernel, tol.casimir_kernel).with_seconds(secs));
    report.push(Check::below("casimir generators central", centrality, tol.centrality));
    let rows: Vec<String> = ledger.rows.iter().map(|r| format!("p={}: {:?}", r.p, r.degrees)).collect();
    report.push(Check::holds("casimir degrees in u", ledger.degrees_match(), rows.join("; ")));
    report.push(Check::holds("gelfand-zakharevich count", ledger.gz_matches(), format!("sum {} vs dim {}", ledger.gz_sum, ledger.dim)));

    let builder = CasimirBuilder::new(&pencil, 2)?;
    let t_mu2 = builder.casimir_t(std::slice::from_ref(&pencil.mu2), 2);
    report.push(Check::holds(
        "T(mu2)/u has u-degree 0",
        t_mu2.valuation_u() == Some(1) && t_mu2.normalized().degree_u() == Some(0),
        format!("valuation {:?}", t_mu2.valuation_u()),
    ));
    let space = build_theta_space(cfg.m, pencil.lattice(), 1e-17)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5151);
    let weights: Vec<C64> = (0..cfg.m).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let generic = ThetaFunction::linear_combination(&space, &weights)?;
    let deg = builder.casimir_t(std::slice::from_ref(&generic), 2).degree_u();
    report.push(Check::holds("generic T(g) has u-degree 1", deg == Some(1), format!("{deg:?}")));
    let h_deg = builder.casimir_h(2, HOptions::default()).degree_u();
    report.push(Check::holds("last generator has u-degree 2", h_deg == Some(2), format!("{h_deg:?}")));

    let quad = casimir_quadratic(&pencil)?;
    let q0 = quad.at(C64::new(0.0, 0.0));
    report.push(Check::holds("quadratic casimir is u-independent", quad.degree_u() == Some(0), format!("{:?}", quad.degree_u())));
    report.push(Check::below("quadratic casimir central for c1", is_casimir(&q0, &pencil.c1), tol.quadratic));
    report.push(Check::below("quadratic casimir central for c2", is_casimir(&q0, &pencil.c2), tol.quadratic));

    let kr = kronecker_indices_numeric(&pencil.pencil(), cfg.seed);
    report.push(Check::holds("kronecker indices", kr.jordan_size == 0 && kr.gz_sum() == pencil.basis.len(), format!("{:?}", kr.indices)));

    let start = Instant::now();
    let r = recover_r_operator(&pencil.pencil());
    report.push(Check::below("r-operator reconstruction", r.residual, tol.r_operator).with_seconds(start.elapsed().as_secs_f64()));

    let noisy = pencil.c1.perturbed(1e-3, cfg.seed ^ 0xbad);
    report.push(Check::above("perturbed bracket fails jacobi", jacobiator(&noisy), tol.jacobi));
    if cfg.m >= 2 {
        let branch = branch_parameter(&pencil)?;
        let (_, regular) = pencil_roots(&pencil.mu1, &pencil.mu2, branch)?;
        let refused = matches!(splitting_basis(&pencil, branch), Err(Error::NotRegular(_)));
        report.push(Check::holds("branch parameter flagged non-regular", !regular && refused, format!("u = {branch:.6}")));
    }
    Ok(report)
}

/// Which exact degeneration to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degeneration {
    Rational,
    Trigonometric,
}

impl std::str::FromStr for Degeneration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" => Ok(Self::Rational),
            "trig" | "trigonometric" => Ok(Self::Trigonometric),
            other => Err(Error::InvalidParameter(format!("unknown degeneration {other:?} (rational, trig)"))),
        }
    }
}

/// Exact tensors of either field, for export.
pub enum ExactTensors {
    Rational(ExactPencil<BigRational>),
    Cyclotomic2(ExactPencil<Cyclotomic<2>>),
    Cyclotomic3(ExactPencil<Cyclotomic<3>>),
}

/// `mu1 = 1 + (-1)^m w^m`, `mu2 = w`: both satisfy the boundary condition.
pub fn default_trig_sections<const N: usize>(m: usize) -> Result<(TrigPoly<N>, TrigPoly<N>)> {
    if m < 2 {
        return Err(Error::InvalidParameter("the tied trigonometric model needs m >= 2".into()));
    }
    let mut a = vec![0i64; m + 1];
    a[0] = 1;
    a[m] = if m % 2 == 0 { 1 } else { -1 };
    let mut b = vec![0i64; m + 1];
    b[1] = 1;
    Ok((TrigPoly::from_ints(&a), TrigPoly::from_ints(&b)))
}

pub fn build_degeneration(kind: Degeneration, n: usize, m: usize) -> Result<ExactTensors> {
    match kind {
        Degeneration::Rational => {
            let (mu1, mu2) = default_sections(m);
            Ok(ExactTensors::Rational(rational_structure_constants(n, m, &mu1, &mu2)?))
        }
        Degeneration::Trigonometric => match n {
            2 => {
                let (mu1, mu2) = default_trig_sections::<2>(m)?;
                Ok(ExactTensors::Cyclotomic2(trig_structure_constants(m, &mu1, &mu2)?))
            }
            3 => {
                let (mu1, mu2) = default_trig_sections::<3>(m)?;
                Ok(ExactTensors::Cyclotomic3(trig_structure_constants(m, &mu1, &mu2)?))
            }
            _ => Err(Error::InvalidParameter(format!("trigonometric degeneration is built for n in {{2, 3}}, got {n}"))),
        },
    }
}

fn exact_checks<S: ExactField>(pencil: &ExactPencil<S>, n: usize, m: usize, report: &mut Report) {
    let dim = pencil.dim();
    report.push(Check::holds("dimension m (n^2 - 1)", dim == m * (n * n - 1), format!("{dim}")));
    report.push(Check::holds("jacobi c1 exact", jacobi_violations(&pencil.c1) == 0, format!("{} violations", jacobi_violations(&pencil.c1))));
    report.push(Check::holds("jacobi c2 exact", jacobi_violations(&pencil.c2) == 0, format!("{} violations", jacobi_violations(&pencil.c2))));
    let cv = compatibility_violations(&pencil.pencil());
    report.push(Check::holds("compatibility exact", cv == 0, format!("{cv} violations")));
    let k = exact_kronecker(&pencil.pencil(), 3);
    let mut idx = k.indices.clone();
    idx.sort_unstable();
    let mut expected: Vec<usize> = (2..=n).flat_map(|p| crate::casimir::expected_degrees(p, m)).collect();
    expected.sort_unstable();
    let gz: usize = idx.iter().map(|e| 2 * e + 1).sum();
    report.push(Check::holds("kronecker indices match the elliptic case", k.jordan_size == 0 && idx == expected, format!("{idx:?}")));
    report.push(Check::holds("gelfand-zakharevich count", gz == dim, format!("sum {gz} vs dim {dim}")));
    let common = quadratic_invariants(&[&pencil.c1, &pencil.c2]).len();
    report.push(Check::holds("shared quadratic casimir", common >= 1, format!("{common} invariant forms")));
}

pub fn degenerate_battery(kind: Degeneration, n: usize, m: usize) -> Result<Report> {
    let mut report = Report::new(format!("{kind:?} degeneration n = {n}, m = {m}").to_lowercase());
    let start = Instant::now();
    let tensors = build_degeneration(kind, n, m)?;
    report.note("build seconds", format!("{:.2}", start.elapsed().as_secs_f64()));
    match &tensors {
        ExactTensors::Rational(p) => exact_checks(p, n, m, &mut report),
        ExactTensors::Cyclotomic2(p) => exact_checks(p, n, m, &mut report),
        ExactTensors::Cyclotomic3(p) => exact_checks(p, n, m, &mut report),
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug)]
pub struct VectorConfig {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub k: usize,
    pub tau: C64,
    pub seed: u64,
    pub combinations: usize,
    pub tolerance: f64,
}

impl Default for VectorConfig {
    fn default() -> Self {
        Self { n: 2, m: 3, l: 2, k: 1, tau: C64::new(0.0, 1.0), seed: 7, combinations: 10, tolerance: 1e-7 }
    }
}

pub fn vector_battery(cfg: &VectorConfig) -> Result<Report> {
    let mut report = Report::new(format!("vector family n = {}, m = {}, l = {}", cfg.n, cfg.m, cfg.l));
    report.note("tau", cfg.tau);
    report.note("seed", cfg.seed);
    report.note("tolerance", format!("{:.0e}", cfg.tolerance));
    let start = Instant::now();
    let family = MultiPencil::seeded(cfg.n, cfg.m, cfg.l, cfg.k, cfg.tau, cfg.seed)?;
    let secs = start.elapsed().as_secs_f64();
    let sections = vector_theta_dimension(cfg.m as u64, cfg.l as u64, 1);
    report.push(
        Check::holds("section space dimension", sections == cfg.m as u64, format!("{sections}"))
            .with_seconds(secs),
    );
    report.push(Check::holds("algebra dimension m (n^2 - 1)", family.dim() == cfg.m * (cfg.n * cfg.n - 1), format!("{}", family.dim())));
    report.push(Check::below("split residual", family.diagnostics.split_residual, 1e-8));
    for (t, j) in family.jacobiators().into_iter().enumerate() {
        report.push(Check::below(format!("jacobi c{}", t + 1), j, cfg.tolerance));
    }
    for ((a, b), r) in family.pair_residuals() {
        report.push(Check::below(format!("compatibility c{} c{}", a + 1, b + 1), r, cfg.tolerance));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x77);
    let worst = (0..cfg.combinations)
        .map(|_| {
            let w: Vec<C64> = (0..=cfg.l).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            jacobiator(&family.combination(&w))
        })
        .fold(0.0, f64::max);
    report.push(Check::below(format!("jacobi of {} random combinations", cfg.combinations), worst, cfg.tolerance));
    Ok(report)
}
