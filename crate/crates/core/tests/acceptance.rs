//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line. Run with `--nocapture` to see the lines.

use std::time::Instant;

use pencil_core::battery::{degenerate_battery, vector_battery, Degeneration, VectorConfig};
use pencil_core::casimir::{casimir_quadratic, degree_ledger, CasimirBuilder, HOptions};
use pencil_core::elliptic::{branch_parameter, regular_parameters, splitting_basis, verify_splitting, PencilData};
use pencil_core::lie::{compatibility_residual, is_casimir, jacobiator, recover_r_operator};
use pencil_core::report::Check;
use pencil_core::shift::{build_q83, q83_battery, Family, Q83Config};
use pencil_core::theta::{build_theta_space, pencil_roots, ThetaFunction};
use pencil_core::{Error, C64};

fn tau() -> C64 {
    C64::new(0.0, 1.0)
}

fn pencil(m: usize) -> PencilData {
    PencilData::seeded(2, m, 1, tau(), 7).expect("elliptic pencil")
}

/// Prints the criterion line and fails the test with every failed sub-check.
fn conclude(label: &str, checks: &[Check]) {
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
    let status = if failed.is_empty() { "PASS" } else { "FAIL" };
    println!("{status} {label} ({}/{} sub-checks)", checks.len() - failed.len(), checks.len());
    for c in checks {
        println!("    {c}");
    }
    assert!(failed.is_empty(), "{label}: {}", failed.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; "));
}

#[test]
fn criterion_1_elliptic_construction() {
    let start = Instant::now();
    let p = pencil(2);
    let checks = vec![
        Check::holds("dimension 6", p.basis.len() == 6, format!("{}", p.basis.len())),
        Check::below("jacobi c1", jacobiator(&p.c1), 1e-8),
        Check::below("jacobi c2", jacobiator(&p.c2), 1e-8),
        Check::below("compatibility", compatibility_residual(&p.pencil()), 1e-8),
        Check::below("runtime seconds", start.elapsed().as_secs_f64(), 30.0),
    ];
    conclude("elliptic construction n=2 m=2 k=1 tau=i", &checks);
}

#[test]
fn criterion_2_splitting_at_regular_parameters() {
    let p = pencil(2);
    let us = regular_parameters(&p, 3, 7).unwrap();
    let mut checks = vec![Check::holds("three regular parameters", us.len() == 3, format!("{}", us.len()))];
    for u in us {
        let th = verify_splitting(&p, u).unwrap();
        let mut dims = th.ideal_dims.clone();
        dims.sort_unstable();
        checks.push(Check::below(format!("mixed brackets at u={u:.3}"), th.comm1, 1e-7));
        checks.push(Check::below(format!("sl_2 relations at u={u:.3}"), th.comm2, 1e-7));
        checks.push(Check::holds(format!("two simple ideals at u={u:.3}"), th.semisimple && dims == vec![3, 3], format!("{dims:?}")));
    }
    conclude("splitting into sl_2 + sl_2 at 3 regular u", &checks);
}

#[test]
fn criterion_3_casimir_tower() {
    let mut checks = Vec::new();
    for m in [2, 3] {
        let p = pencil(m);
        let b = CasimirBuilder::new(&p, 2).unwrap();
        let t_mu2 = b.casimir_t(std::slice::from_ref(&p.mu2), 2);
        let kernel = b.casimir_t(&[p.mu2.clone(), p.mu1.scaled(C64::new(-1.0, 0.0))], 2);
        checks.push(Check::below(format!("m={m} T(mu2 - u mu1)"), kernel.scale() / t_mu2.scale(), 1e-10));
        checks.push(Check::holds(
            format!("m={m} T(mu2)/u has degree 0"),
            t_mu2.valuation_u() == Some(1) && t_mu2.normalized().degree_u() == Some(0),
            format!("valuation {:?}, degree {:?}", t_mu2.valuation_u(), t_mu2.normalized().degree_u()),
        ));
        let space = build_theta_space(m, p.lattice(), 1e-17).unwrap();
        let weights: Vec<C64> = (0..m).map(|i| C64::new(0.4 - 0.3 * i as f64, 0.9 + 0.2 * i as f64)).collect();
        let g = ThetaFunction::linear_combination(&space, &weights).unwrap();
        let deg = b.casimir_t(std::slice::from_ref(&g), 2).degree_u();
        checks.push(Check::holds(format!("m={m} generic T(g) has degree 1"), deg == Some(1), format!("{deg:?}")));
        let h = b.casimir_h(2, HOptions::default());
        checks.push(Check::holds(format!("m={m} last generator has degree 2"), h.degree_u() == Some(2), format!("{:?}", h.degree_u())));

        let us = regular_parameters(&p, 3, 11).unwrap();
        let central = h.centrality(&p, &us).max(b.casimir_t(std::slice::from_ref(&g), 2).centrality(&p, &us));
        checks.push(Check::below(format!("m={m} central at 3 regular u"), central, 1e-6));

        let ledger = degree_ledger(&p, 2, &us, HOptions::default()).unwrap();
        let mut expected = vec![0];
        expected.extend(std::iter::repeat(1).take(m - 2));
        expected.push(2);
        checks.push(Check::holds(format!("m={m} degree multiset"), ledger.all_degrees() == expected, format!("{:?}", ledger.all_degrees())));
        checks.push(Check::holds(format!("m={m} gelfand-zakharevich sum"), ledger.gz_sum == 3 * m, format!("{}", ledger.gz_sum)));
    }
    conclude("casimir tower n=2 m in {2,3}", &checks);
}

#[test]
fn criterion_4_quadratic_casimir() {
    let p = pencil(2);
    let q = casimir_quadratic(&p).unwrap();
    let q0 = q.at(C64::new(0.0, 0.0));
    let u = C64::new(0.37, -1.2);
    let drift = (&q.at(u) - &q0).norm() / q0.norm();
    let checks = vec![
        Check::holds("independent of u", q.degree_u() == Some(0), format!("{:?}", q.degree_u())),
        Check::below("value drift in u", drift, 1e-8),
        Check::below("central for c1", is_casimir(&q0, &p.c1), 1e-8),
        Check::below("central for c2", is_casimir(&q0, &p.c2), 1e-8),
    ];
    conclude("quadratic casimir shared by both brackets", &checks);
}

#[test]
fn criterion_5_exact_degenerations() {
    let mut checks = Vec::new();
    let cases = [
        (Degeneration::Rational, 2, 2),
        (Degeneration::Rational, 2, 3),
        (Degeneration::Rational, 3, 2),
        (Degeneration::Rational, 3, 3),
        (Degeneration::Trigonometric, 2, 2),
    ];
    for (kind, n, m) in cases {
        let report = degenerate_battery(kind, n, m).unwrap();
        for c in report.checks {
            checks.push(Check { name: format!("{kind:?} n={n} m={m}: {}", c.name).to_lowercase(), ..c });
        }
    }
    conclude("exact rational and trigonometric degenerations", &checks);
}

#[test]
fn criterion_6_vector_family() {
    let start = Instant::now();
    let report = vector_battery(&VectorConfig { n: 2, m: 3, l: 2, combinations: 10, tolerance: 1e-7, ..Default::default() }).unwrap();
    let mut checks = report.checks;
    let jacobi = checks.iter().filter(|c| c.name.starts_with("jacobi c")).count();
    let pairs = checks.iter().filter(|c| c.name.starts_with("compatibility")).count();
    checks.push(Check::holds("three brackets and three pairs", jacobi == 3 && pairs == 3, format!("{jacobi} brackets, {pairs} pairs")));
    checks.push(Check::below("runtime seconds", start.elapsed().as_secs_f64(), 120.0));
    conclude("vector family n=2 m=3 l=2", &checks);
}

#[test]
fn criterion_7_argument_shift() {
    let start = Instant::now();
    let mut checks = Vec::new();
    for family in Family::ALL {
        let report = q83_battery(&Q83Config { k1: 1.0, k2: 1.0, family, ..Default::default() }).unwrap();
        for c in report.checks {
            checks.push(Check { name: format!("{family}: {}", c.name), ..c });
        }
    }
    checks.push(Check::below("runtime seconds", start.elapsed().as_secs_f64(), 60.0));
    conclude("argument shift on q83 with k1=k2=1", &checks);
}

#[test]
fn criterion_8_r_operator() {
    let p = pencil(2);
    let r = recover_r_operator(&p.pencil());
    conclude("r-operator recovery", &[Check::below("residual", r.residual, 1e-6)]);
}

#[test]
fn criterion_9_negative_controls() {
    let p = pencil(2);
    let noisy = p.c1.perturbed(1e-3, 99);
    let mut checks = vec![Check::above("perturbed c1 fails jacobi", jacobiator(&noisy), 1e-8)];
    let mut pencil_noisy = p.pencil();
    pencil_noisy.c2 = p.c2.perturbed(1e-3, 98);
    checks.push(Check::above("perturbed c2 fails compatibility", compatibility_residual(&pencil_noisy), 1e-8));

    let inst = build_q83(1.0, 1.0).unwrap();
    let bad = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0];
    checks.push(Check::above("non-admissible vector fails admissibility", inst.poisson.admissibility_residual(&bad), 1e-12));
    let rejected = matches!(inst.poisson.shift(&bad, 1e-12), Err(Error::NotAdmissible(_)));
    checks.push(Check::holds("shift refuses the vector", rejected, ""));
    let good = Family::APlus.vector(1.0, 0.7);
    checks.push(Check::below("admissible vector still passes", inst.poisson.admissibility_residual(&good), 1e-12));

    let branch = branch_parameter(&p).unwrap();
    let (_, regular) = pencil_roots(&p.mu1, &p.mu2, branch).unwrap();
    checks.push(Check::holds("branch parameter is flagged non-regular", !regular, format!("u = {branch:.6}")));
    let refused = matches!(splitting_basis(&p, branch), Err(Error::NotRegular(_)));
    checks.push(Check::holds("splitting refuses the branch parameter", refused, ""));
    conclude("negative controls", &checks);
}
