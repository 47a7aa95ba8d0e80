use pencil_core::elliptic::{regular_parameters, splitting_basis, verify_splitting, PencilData};
use pencil_core::lie::{compatibility_residual, is_casimir, jacobiator, killing_semisimple, recover_r_operator, BracketPencil};
use pencil_core::poly::PolyElement;
use pencil_core::{Error, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn unit(dim: usize, i: usize) -> Vec<C64> {
    let mut v = vec![c(0.0, 0.0); dim];
    v[i] = c(1.0, 0.0);
    v
}

#[test]
fn brackets_reproduce_pointwise_commutators() {
    let p = PencilData::seeded(2, 2, 1, c(0.0, 1.0), 7).unwrap();
    let dim = p.basis.len();
    let x: Vec<C64> = (0..dim).map(|i| c(0.3 * i as f64 - 0.5, 0.2 + 0.1 * i as f64)).collect();
    let y: Vec<C64> = (0..dim).map(|i| c(1.0 - 0.4 * i as f64, -0.7 + 0.3 * i as f64)).collect();
    let points = p.lattice().grid(7);
    assert!(p.combrack_residual(&x, &y, &points) < 1e-9);
    for i in 0..dim {
        for j in 0..dim {
            assert!(p.combrack_residual(&unit(dim, i), &unit(dim, j), &points[..12]) < 1e-9);
        }
    }
}

#[test]
fn three_by_three_pencil_with_k_two() {
    let p = PencilData::seeded(3, 2, 2, c(0.1, 0.9), 13).unwrap();
    assert_eq!(p.basis.len(), 16);
    assert!(p.diagnostics.asymmetry < 1e-9);
    assert!(jacobiator(&p.c1) < 1e-8);
    assert!(jacobiator(&p.c2) < 1e-8);
    assert!(compatibility_residual(&p.pencil()) < 1e-8);
    let u = regular_parameters(&p, 1, 3).unwrap()[0];
    let th = verify_splitting(&p, u).unwrap();
    assert!(th.comm1 < 1e-7 && th.comm2 < 1e-7, "{th:?}");
    assert_eq!(th.ideal_dims, vec![8, 8]);
}

#[test]
fn splitting_elements_vanish_at_other_roots() {
    let p = PencilData::seeded(2, 3, 1, c(0.0, 1.0), 5).unwrap();
    let u = regular_parameters(&p, 1, 9).unwrap()[0];
    let sb = splitting_basis(&p, u).unwrap();
    assert_eq!(sb.elements.len(), 9);
    let root_sum: C64 = sb.roots.iter().sum();
    assert!(root_sum.norm() < 1e-10);
    let th = verify_splitting(&p, u).unwrap();
    assert!(th.vanishing < 1e-9, "{th:?}");
    assert!(th.expansion < 1e-9, "{th:?}");
    for e in &sb.elements {
        assert!(e.fit_residual < 1e-9);
    }
}

#[test]
fn semisimple_at_five_regular_parameters() {
    let p = PencilData::seeded(2, 3, 1, c(0.2, 1.1), 21).unwrap();
    for u in regular_parameters(&p, 5, 2).unwrap() {
        let rep = killing_semisimple(&p.pencil().at(&u), 1e-8, 1);
        let mut dims = rep.ideal_dims();
        dims.sort_unstable();
        assert!(rep.semisimple, "u = {u}");
        assert_eq!(dims, vec![3, 3, 3], "u = {u}");
    }
}

#[test]
fn single_section_is_refused() {
    assert!(matches!(PencilData::seeded(2, 1, 1, c(0.0, 1.0), 1), Err(Error::DegeneratePencil(_))));
    assert!(matches!(PencilData::seeded(4, 2, 2, c(0.0, 1.0), 1), Err(Error::NotCoprime { .. })));
    assert!(matches!(PencilData::seeded(2, 2, 1, c(0.0, -1.0), 1), Err(Error::BadModulus(_))));
}

#[test]
fn generators_are_not_central() {
    let p = PencilData::seeded(2, 2, 1, c(0.0, 1.0), 7).unwrap();
    let u = regular_parameters(&p, 1, 1).unwrap()[0];
    let member = p.pencil().at(&u);
    for j in 0..p.basis.len() {
        assert!(is_casimir(&PolyElement::var(p.basis.len(), j), &member) > 1e-3);
    }
}

#[test]
fn r_operator_trivial_and_elliptic() {
    let p = PencilData::seeded(2, 2, 1, c(0.0, 1.0), 7).unwrap();
    assert!(recover_r_operator(&p.pencil()).residual < 1e-6);
    assert!(recover_r_operator(&BracketPencil::new(p.c1.clone(), p.c1.clone())).residual < 1e-12);
    let zero = p.c1.map(|_| c(0.0, 0.0));
    assert_eq!(recover_r_operator(&BracketPencil::new(p.c1.clone(), zero)).residual, 0.0);
}

#[test]
fn seeds_are_reproducible() {
    let a = PencilData::seeded(2, 2, 1, c(0.0, 1.0), 42).unwrap();
    let b = PencilData::seeded(2, 2, 1, c(0.0, 1.0), 42).unwrap();
    assert_eq!(a.c1, b.c1);
    assert_eq!(a.c2, b.c2);
}
