use num_rational::BigRational;
use pencil_core::casimir::expected_degrees;
use pencil_core::degenerate::cyclotomic::Cyclotomic;
use pencil_core::degenerate::rational::*;
use pencil_core::degenerate::trig::*;
use pencil_core::degenerate::*;
use pencil_core::elliptic::PencilData;
use pencil_core::lie::{compatibility_violations, jacobi_violations};
use pencil_core::scalar::Scalar;
use pencil_core::{Error, C64};

fn q(v: i64) -> BigRational {
    BigRational::from_i64(v)
}

fn expected_multiset(n: usize, m: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (2..=n).flat_map(|p| expected_degrees(p, m)).collect();
    v.sort_unstable();
    v
}

#[test]
fn rational_quadratic_pair_is_exactly_lie_and_compatible() {
    let pencil = rational_structure_constants(2, 2, &RationalPoly::from_ints(&[1]), &RationalPoly::from_ints(&[0, 0, 1])).unwrap();
    assert_eq!(pencil.dim(), 6);
    assert_eq!(jacobi_violations(&pencil.c1), 0);
    assert_eq!(jacobi_violations(&pencil.c2), 0);
    assert_eq!(compatibility_violations(&pencil.pencil()), 0);
    assert!(pencil.c1.is_antisymmetric() && pencil.c2.is_antisymmetric());
}

#[test]
fn section_multiples_split_uniquely() {
    let (mu1, mu2) = default_sections(2);
    let model = rational_model(2, 2, &mu1, &mu2).unwrap();
    let f: Vec<BigRational> = (0..model.dim()).map(|i| q(i as i64 - 2)).collect();
    let (p, qq) = model.decompose(&model.section_product(&model.mu1, &f)).unwrap();
    assert_eq!(p, f);
    assert!(qq.iter().all(|v| Scalar::is_zero(v)));
    let (p, qq) = model.decompose(&model.section_product(&model.mu2, &f)).unwrap();
    assert!(p.iter().all(|v| Scalar::is_zero(v)));
    assert_eq!(qq, f);
}

#[test]
fn rational_family_matches_elliptic_counts() {
    for n in [2, 3] {
        for m in [2, 3] {
            let (mu1, mu2) = default_sections(m);
            let pencil = rational_structure_constants(n, m, &mu1, &mu2).unwrap();
            assert_eq!(pencil.dim(), m * (n * n - 1));
            assert_eq!(jacobi_violations(&pencil.c1), 0, "n={n} m={m}");
            assert_eq!(jacobi_violations(&pencil.c2), 0, "n={n} m={m}");
            assert_eq!(compatibility_violations(&pencil.pencil()), 0, "n={n} m={m}");
            let k = exact_kronecker(&pencil.pencil(), 3);
            assert_eq!(k.jordan_size, 0, "n={n} m={m}");
            let mut idx = k.indices;
            idx.sort_unstable();
            assert_eq!(idx, expected_multiset(n, m), "n={n} m={m}");
            assert_eq!(idx.iter().map(|e| 2 * e + 1).sum::<usize>(), m * (n * n - 1));
        }
    }
}

#[test]
fn truncated_top_coefficient_leaves_a_jordan_block() {
    let (mu1, mu2) = default_sections(2);
    let pencil = rational_model_twisted(2, 2, &mu1, &mu2, &TopTwist::truncated(2)).unwrap().build("truncated").unwrap();
    assert_eq!(jacobi_violations(&pencil.c1), 0);
    assert_eq!(compatibility_violations(&pencil.pencil()), 0);
    let k = exact_kronecker(&pencil.pencil(), 3);
    assert!(k.jordan_size > 0, "{k:?}");
}

#[test]
fn printed_rational_space_splits_ambiguously() {
    // g_{m-1} = 0 with g_m free: constants times the sections are in both summands
    let (mu1, mu2) = default_sections(2);
    let mut model = rational_model_twisted(2, 2, &mu1, &mu2, &TopTwist::truncated(2)).unwrap();
    for element in model.basis.iter_mut() {
        if element.terms[0].0 == 1 {
            element.terms[0].0 = 2;
        }
    }
    assert!(matches!(model.build("printed"), Err(Error::SharedRoot(_))));
}

#[test]
fn unbalanced_sections_are_rejected() {
    let mu1 = RationalPoly::from_ints(&[-1, 0, 1]);
    let mu2 = RationalPoly::from_ints(&[-4, 1, 1]);
    assert!(!mu2.is_balanced(2));
    assert!(matches!(rational_structure_constants(2, 2, &mu1, &mu2), Err(Error::InvalidParameter(_))));
}

#[test]
fn rational_quadratic_casimir_is_shared_by_both_brackets() {
    for m in [2, 3] {
        let (mu1, mu2) = default_sections(m);
        let pencil = rational_structure_constants(2, m, &mu1, &mu2).unwrap();
        assert_eq!(quadratic_invariants(&[&pencil.c1, &pencil.c2]).len(), 1, "m={m}");
    }
}

#[test]
fn common_root_is_rejected() {
    let mu1 = RationalPoly::from_ints(&[-1, 0, 1]);
    let mu2 = RationalPoly::from_ints(&[1, 0, -1]);
    assert!(matches!(rational_structure_constants(2, 2, &mu1, &mu2), Err(Error::SharedRoot(_))));
    // both sections of degree below m share the root at infinity
    let low = RationalPoly::from_ints(&[0, 1]);
    assert!(matches!(rational_structure_constants(2, 3, &RationalPoly::from_ints(&[1]), &low), Err(Error::SharedRoot(_))));
}

#[test]
fn trig_single_section_space_closes() {
    // for m = 1 the boundary condition leaves a single section up to scale;
    // the second one is taken outside it and the top modes are left untied
    let mu1 = TrigPoly::<2>::from_ints(&[1, -1]);
    let mu2 = TrigPoly::<2>::from_ints(&[0, 1]);
    assert!(mu1.satisfies_boundary(1) && !mu2.satisfies_boundary(1));
    assert!(matches!(trig_structure_constants(1, &mu1, &mu2), Err(Error::InvalidParameter(_))));
    assert!(trig_model(1, &mu1, &mu2).unwrap().build("tied").is_err());
    let pencil = trig_model_with(1, &mu1, &mu2, ModeTie::Untied).unwrap().build("untied").unwrap();
    assert_eq!(pencil.dim(), 3);
    assert!(pencil.c1.is_antisymmetric() && pencil.c2.is_antisymmetric());
    assert_eq!(jacobi_violations(&pencil.c1), 0);
    assert_eq!(jacobi_violations(&pencil.c2), 0);
    assert_eq!(compatibility_violations(&pencil.pencil()), 0);
}

#[test]
fn trig_pair_is_exactly_compatible() {
    let mu1 = TrigPoly::<2>::from_ints(&[1, 0, 1]);
    let mu2 = TrigPoly::<2>::from_ints(&[0, 1]);
    assert!(mu1.satisfies_boundary(2) && mu2.satisfies_boundary(2));
    let pencil = trig_structure_constants(2, &mu1, &mu2).unwrap();
    assert_eq!(pencil.dim(), 6);
    assert!(pencil.c1.is_antisymmetric() && pencil.c2.is_antisymmetric());
    assert_eq!(jacobi_violations(&pencil.c1), 0);
    assert_eq!(jacobi_violations(&pencil.c2), 0);
    assert_eq!(compatibility_violations(&pencil.pencil()), 0);
    let k = exact_kronecker(&pencil.pencil(), 5);
    assert_eq!(k.jordan_size, 0);
    let mut idx = k.indices;
    idx.sort_unstable();
    assert_eq!(idx, expected_multiset(2, 2));
    assert_eq!(quadratic_invariants(&[&pencil.c1, &pencil.c2]).len(), 1);
}

#[test]
fn trig_tie_variants() {
    let mu1 = TrigPoly::<2>::from_ints(&[2, 1, 2]);
    let mu2 = TrigPoly::<2>::from_ints(&[1, 3, 1]);
    let printed = trig_model_with(2, &mu1, &mu2, ModeTie::AsPrinted).unwrap().build("printed");
    assert!(matches!(printed, Err(Error::SharedRoot(_))));
    let untied = trig_model_with(2, &mu1, &mu2, ModeTie::Untied).unwrap().build("untied").unwrap();
    assert_eq!(compatibility_violations(&untied.pencil()), 0);
    let mut idx = exact_kronecker(&untied.pencil(), 5).indices;
    idx.sort_unstable();
    assert_eq!(idx, vec![1, 1]);
    assert!(quadratic_invariants(&[&untied.c1, &untied.c2]).is_empty());
}

#[test]
fn trig_over_third_roots_of_unity() {
    let mu1 = TrigPoly::<3>::from_ints(&[1, 0, 1]);
    let mu2 = TrigPoly::<3>::new(vec![Cyclotomic::zero(), Cyclotomic::zeta_pow(1), Cyclotomic::zero()]);
    let pencil = trig_structure_constants(2, &mu1, &mu2).unwrap();
    assert_eq!(pencil.dim(), 16);
    assert_eq!(jacobi_violations(&pencil.c1), 0);
    assert_eq!(jacobi_violations(&pencil.c2), 0);
    assert_eq!(compatibility_violations(&pencil.pencil()), 0);
    let k = exact_kronecker(&pencil.pencil(), 9);
    assert_eq!(k.jordan_size, 0);
    let mut idx = k.indices;
    idx.sort_unstable();
    assert_eq!(idx, expected_multiset(3, 2));
}

#[test]
fn cross_validation_against_elliptic_pencil() {
    for m in [2, 3] {
        let elliptic = PencilData::seeded(2, m, 1, C64::new(0.0, 1.0), 11).unwrap();
        let (mu1, mu2) = default_sections(m);
        let exact = rational_structure_constants(2, m, &mu1, &mu2).unwrap();
        let report = cross_validate(&elliptic, &exact, 21);
        assert!(report.agrees(), "{report:?}");
        assert_eq!(report.gz_sum(), 3 * m);
        assert!(report.elliptic_jacobi < 1e-8 && report.elliptic_compatibility < 1e-8);
    }
}

