use pencil_core::lie::{compatibility_residual, jacobiator, killing_semisimple};
use pencil_core::shift::*;
use pencil_core::{Error, C64};

fn unit() -> Q83Instance {
    build_q83(1.0, 1.0).unwrap()
}

#[test]
fn coefficients_match_closed_forms() {
    let inst = unit();
    let expected = [-1.1180340, 2.2360680, 1.4953488, 3.3437015];
    for (p, e) in inst.p.iter().zip(expected) {
        assert!((p - e).abs() < 5e-8, "{p} vs {e}");
    }
    assert!(build_q83(-1.0, 1.0).is_err());
    assert!(build_q83(1.0, 0.0).is_err());
}

#[test]
fn relation_reads_back_from_tensor() {
    let inst = unit();
    let rel = inst.poisson.relation(0, 2);
    let p3 = inst.p[2];
    let mut e1 = vec![0u32; 8];
    e1[1] = 2;
    let mut e5 = vec![0u32; 8];
    e5[5] = 2;
    assert!((rel.coefficient(&e1) - C64::new(p3, 0.0)).norm() < 1e-15);
    assert!((rel.coefficient(&e5) + C64::new(p3, 0.0)).norm() < 1e-15);
    assert_eq!(rel.num_terms(), 2);
    // antisymmetry: {x_2, x_0} = -{x_0, x_2}
    let back = inst.poisson.relation(2, 0);
    assert!((&rel + &back).is_zero());
}

#[test]
fn quadratic_bracket_is_poisson_for_several_ratios() {
    for (k1, k2) in [(1.0, 1.0), (0.3, 2.0), (5.0, 0.7)] {
        let inst = build_q83(k1, k2).unwrap();
        assert!(inst.poisson.jacobi_residual() < 1e-10, "k1={k1} k2={k2}");
        for i in 0..4 {
            assert!(inst.casimir_residual(i) < 1e-9, "C_{i} at k1={k1} k2={k2}");
        }
        assert_eq!(inst.casimir_jacobian_rank(3), 4);
    }
}

#[test]
fn admissibility_scales_quadratically() {
    let inst = unit();
    let a = [0.3, -0.2, 0.7, 0.1, 0.5, -0.9, 0.25, 0.4];
    let doubled: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
    assert_eq!(inst.poisson.admissibility_residual(&doubled), 4.0 * inst.poisson.admissibility_residual(&a));
}

#[test]
fn non_admissible_shift_is_rejected() {
    let inst = unit();
    let a = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0];
    match inst.poisson.shift(&a, 1e-12) {
        Err(Error::NotAdmissible(r)) => assert!(r > 1e-3),
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn every_family_gives_gl2_plus_gl2() {
    let inst = unit();
    for fam in Family::ALL {
        let pencil = ShiftedPencil::new(&inst, fam).unwrap();
        assert!(compatibility_residual(&pencil.pencil()) < 1e-10, "{fam}");
        let generic = pencil.at(1.0, 0.7);
        assert!(jacobiator(&generic) < 1e-10);
        let center = linear_center(&generic);
        assert_eq!(center.len(), 2, "{fam}");
        for (t1, t2) in parameter_grid() {
            assert!(span_distance(&linear_center(&pencil.at(t1, t2)), &center) < 1e-10, "{fam} ({t1}, {t2})");
        }
        let (quotient, kept) = central_quotient(&generic, &center).unwrap();
        assert_eq!(kept.len(), 6);
        let report = killing_semisimple(&quotient, 1e-8, 1);
        let mut dims = report.ideal_dims();
        dims.sort_unstable();
        assert!(report.semisimple, "{fam}");
        assert_eq!(dims, vec![3, 3], "{fam}");
    }
}

#[test]
fn batteries_pass_for_all_families() {
    for fam in Family::ALL {
        let cfg = Q83Config { family: fam, ..Default::default() };
        let report = q83_battery(&cfg).unwrap();
        assert!(report.all_passed(), "{report}");
    }
    let cfg = Q83Config { k1: 0.4, k2: 1.3, t1: -0.6, t2: 1.9, ..Default::default() };
    let report = q83_battery(&cfg).unwrap();
    assert!(report.all_passed(), "{report}");
}

#[test]
fn search_finds_four_planes_spanning_the_space() {
    let inst = unit();
    let comps = search_admissible(&inst.poisson, SearchOptions::default());
    assert_eq!(comps.len(), 4, "{comps:?}");
    assert!(comps.iter().all(|c| c.hits >= 2));
    for c in &comps {
        assert_eq!(c.basis.len(), 2);
    }
    // each printed family is one of the found planes
    for fam in Family::ALL {
        let printed = [fam.vector(1.0, 0.0), fam.vector(0.0, 1.0)];
        let hit = comps.iter().any(|c| {
            printed.iter().all(|v| {
                let mut r = v.clone();
                for u in &c.basis {
                    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                    r.iter_mut().zip(u).for_each(|(x, y)| *x -= dot * y);
                }
                r.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-8
            })
        });
        assert!(hit, "{fam} not found");
    }
    let all: Vec<f64> = comps.iter().flat_map(|c| c.basis.iter().flatten().cloned()).collect();
    let m = nalgebra::DMatrix::from_column_slice(8, 8, &all);
    assert_eq!(m.rank(1e-8), 8);
}

#[test]
fn lenard_magri_integrals_commute_under_both_brackets() {
    let inst = unit();
    let shifted = ShiftedPencil::new(&inst, Family::APlus).unwrap();
    let center = linear_center(&shifted.at(1.0, 0.7));
    let (c1, _) = central_quotient(&shifted.first, &center).unwrap();
    let (c2, _) = central_quotient(&shifted.second, &center).unwrap();
    let pencil = pencil_core::lie::BracketPencil::new(c1, c2);
    let lm = lenard_magri(&pencil, 2).unwrap();
    assert!(lm.commutator < 1e-9);
    assert!(lm.functional_rank >= 4);
    assert!(lm.endpoint < 1e-9);
    // the integrals are not all Casimirs of one end
    let non_casimir = lm.integrals.iter().map(|q| pencil_core::lie::is_casimir(q, &pencil.c1)).fold(0.0, f64::max);
    assert!(non_casimir > 1e-6);
    for q in &lm.integrals {
        assert_eq!(q.degree(), Some(2));
    }
}
