use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use pencil_core::bundle::MultiPencil;
use pencil_core::casimir::CasimirBuilder;
use pencil_core::elliptic::PencilData;
use pencil_core::heisenberg::{build_pair, commutator_constants, SectorIndex};
use pencil_core::json::{Meta, TensorDocument};
use pencil_core::lie::{compatibility_residual, jacobiator, lie_poisson_bracket, BracketPencil, LieStructure};
use pencil_core::poly::PolyElement;
use pencil_core::shift::{build_q83, Family};
use pencil_core::theta::{build_theta_space, find_roots, Lattice, ThetaFunction};
use pencil_core::C64;

fn c64() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

fn modulus() -> impl Strategy<Value = C64> {
    (-0.5f64..0.5, 0.7f64..1.6).prop_map(|(re, im)| C64::new(re, im))
}

fn coprime_pair() -> impl Strategy<Value = (usize, usize)> {
    (2usize..6).prop_flat_map(|n| (Just(n), 1..n)).prop_filter("coprime", |&(n, k)| pencil_core::error::gcd(n, k) == 1)
}

/// Random polynomial of degree at most 2 in `d` variables.
fn quadratic(d: usize) -> impl Strategy<Value = PolyElement> {
    prop::collection::vec(c64(), 1 + d + d * d).prop_map(move |w| {
        let mut p = PolyElement::constant(d, w[0]);
        for i in 0..d {
            p = &p + &PolyElement::var(d, i).scaled(w[1 + i]);
            for j in 0..d {
                p = &p + &(&PolyElement::var(d, i) * &PolyElement::var(d, j)).scaled(w[1 + d + i * d + j] * 0.5);
            }
        }
        p
    })
}

fn raw_jacobi(c: &LieStructure) -> f64 {
    jacobiator(c) * c.max_magnitude().powi(2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn theta_functions_are_quasi_periodic(tau in modulus(), m in 1usize..5, w in prop::collection::vec(c64(), 4), z in c64()) {
        let lattice = Lattice::new(tau).unwrap();
        let space = build_theta_space(m, lattice, 1e-17).unwrap();
        let f = ThetaFunction::linear_combination(&space, &w[..m]).unwrap();
        let norm = f.grid_norm();
        let (r1, r2) = f.functional_residual(z * 0.5);
        prop_assert!(r1 < 1e-9 * norm && r2 < 1e-9 * norm, "{r1:e} {r2:e} vs {norm:e}");
    }

    #[test]
    fn roots_count_and_sum(tau in modulus(), m in 1usize..5, w in prop::collection::vec(c64(), 4)) {
        let lattice = Lattice::new(tau).unwrap();
        let space = build_theta_space(m, lattice, 1e-17).unwrap();
        let f = ThetaFunction::linear_combination(&space, &w[..m]).unwrap();
        let roots = find_roots(&f).unwrap();
        prop_assert_eq!(roots.roots.len(), m);
        prop_assert!(roots.sum_residual(&lattice) < 1e-7);
    }

    #[test]
    fn derivative_matches_central_difference(tau in modulus(), w in prop::collection::vec(c64(), 3), z in c64()) {
        let lattice = Lattice::new(tau).unwrap();
        let space = build_theta_space(3, lattice, 1e-17).unwrap();
        let f = ThetaFunction::linear_combination(&space, &w).unwrap();
        let h = 1e-5;
        let fd = (f.eval(z + h, 0) - f.eval(z - h, 0)) / (2.0 * h);
        let exact = f.eval(z, 1);
        prop_assume!(f.eval(z, 0).norm() > 1e-3 * f.grid_norm());
        prop_assert!((fd - exact).norm() < 1e-6 * exact.norm().max(f.grid_norm()));
    }

    #[test]
    fn clock_shift_commutators_match_closed_form((n, k) in coprime_pair(), a1 in 0usize..6, b1 in 0usize..6, a2 in 0usize..6, b2 in 0usize..6) {
        let pair = build_pair(n, k).unwrap();
        let s1 = SectorIndex::new(a1 % n, b1 % n);
        let s2 = SectorIndex::new(a2 % n, b2 % n);
        let lhs = pair.t(s1) * pair.t(s2) - pair.t(s2) * pair.t(s1);
        let (coef, s3) = commutator_constants(n, k, s1, s2);
        let rhs = pair.t(s3) * coef;
        prop_assert!((lhs - rhs).camax() < 1e-13);
        if !s1.is_zero() {
            prop_assert!(pair.t(s1).trace().norm() < 1e-13);
        }
    }

    #[test]
    fn pencil_jacobiator_obeys_polarization(seed in any::<u64>(), dim in 2usize..6, u in c64()) {
        let c1 = LieStructure::random_antisymmetric(dim, seed);
        let c2 = LieStructure::random_antisymmetric(dim, seed.wrapping_add(1));
        let pencil = BracketPencil::new(c1.clone(), c2.clone());
        let mixed = compatibility_residual(&pencil) * c1.max_magnitude() * c2.max_magnitude();
        let bound = raw_jacobi(&c1) + u.norm() * mixed + u.norm_sqr() * raw_jacobi(&c2);
        prop_assert!(raw_jacobi(&pencil.at(&u)) <= bound * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn lie_poisson_bracket_is_a_derivation(seed in any::<u64>(), f in quadratic(3), g in quadratic(3), h in quadratic(3)) {
        let c = LieStructure::random_antisymmetric(3, seed);
        let lhs = lie_poisson_bracket(&(&f * &g), &h, &c);
        let rhs = &(&f * &lie_poisson_bracket(&g, &h, &c)) + &(&g * &lie_poisson_bracket(&f, &h, &c));
        prop_assert!((&lhs - &rhs).norm() < 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn lie_algebra_gives_poisson_jacobi(f in quadratic(6), g in quadratic(6), h in quadratic(6), x in prop::collection::vec(c64(), 6)) {
        let c = LieStructure::sl2().direct_sum(&LieStructure::sl2());
        let br = |a: &PolyElement, b: &PolyElement| lie_poisson_bracket(a, b, &c);
        let cyc = &(&br(&br(&f, &g), &h) + &br(&br(&g, &h), &f)) + &br(&br(&h, &f), &g);
        let scale = br(&br(&f, &g), &h).norm().max(1.0);
        prop_assert!(cyc.eval(&x).norm() < 1e-8 * scale);
    }

    #[test]
    fn admissibility_scales_quadratically(a in prop::collection::vec(-1.0f64..1.0, 8), lambda in -3.0f64..3.0) {
        let inst = build_q83(1.0, 1.0).unwrap();
        let scaled: Vec<f64> = a.iter().map(|v| lambda * v).collect();
        let r = inst.poisson.admissibility_residual(&a);
        let rs = inst.poisson.admissibility_residual(&scaled);
        prop_assert!((rs - lambda * lambda * r).abs() <= 1e-12 * rs.abs().max(1e-300));
    }

    #[test]
    fn admissible_families_hold_everywhere(t1 in -3.0f64..3.0, t2 in -3.0f64..3.0, k1 in 0.2f64..3.0, k2 in 0.2f64..3.0) {
        let inst = build_q83(k1, k2).unwrap();
        for fam in Family::ALL {
            let v = fam.vector(t1, t2);
            let norm2: f64 = v.iter().map(|x| x * x).sum();
            prop_assert!(inst.poisson.admissibility_residual(&v) < 1e-12 * norm2.max(1.0), "{fam}");
        }
    }

    #[test]
    fn float_documents_round_trip(seed in any::<u64>(), dim in 1usize..5, scale in -20i32..20) {
        let c = LieStructure::random_antisymmetric(dim, seed).map(|v| v * 10f64.powi(scale));
        let doc = TensorDocument::from_structures(&[&c], Meta { seed: Some(seed), ..Default::default() }).unwrap();
        let text = doc.to_text().unwrap();
        let back = TensorDocument::parse(&text).unwrap();
        prop_assert_eq!(&back.to_structures::<C64>().unwrap()[0], &c);
        prop_assert_eq!(back.to_text().unwrap(), text);
    }

    #[test]
    fn rational_documents_round_trip(nums in prop::collection::vec((-1000i64..1000, 1i64..1000), 3)) {
        let vals: Vec<BigRational> = nums.iter().map(|&(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q))).collect();
        let c = LieStructure::from_upper(3, "q", |i, j, k| if k == 3 - i - j { vals[k].clone() } else { BigRational::from_integer(0.into()) });
        let doc = TensorDocument::from_structures(&[&c], Meta::default()).unwrap();
        let back = TensorDocument::parse(&doc.to_text().unwrap()).unwrap();
        prop_assert_eq!(&back.to_structures::<BigRational>().unwrap()[0], &c);
    }
}

fn unit_pencil() -> &'static PencilData {
    static P: OnceLock<PencilData> = OnceLock::new();
    P.get_or_init(|| PencilData::seeded(2, 2, 1, C64::new(0.0, 1.0), 3).unwrap())
}

fn vector_family() -> &'static MultiPencil {
    static F: OnceLock<MultiPencil> = OnceLock::new();
    F.get_or_init(|| MultiPencil::seeded(2, 3, 2, 1, C64::new(0.0, 1.0), 7).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn rescaling_first_section_rescales_first_bracket(re in 0.3f64..3.0, im in -2.0f64..2.0) {
        let p = unit_pencil();
        let lambda = C64::new(re, im);
        let q = PencilData::new(2, 1, p.mu1.scaled(lambda), p.mu2.clone(), p.seed()).unwrap();
        let expected = p.c1.map(|v| v / lambda);
        let diff = q.c1.entries().zip(expected.entries()).map(|(a, b)| (a.3 - b.3).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-8 * expected.max_magnitude());
        let diff2 = q.c2.entries().zip(p.c2.entries()).map(|(a, b)| (a.3 - b.3).norm()).fold(0.0, f64::max);
        prop_assert!(diff2 < 1e-8 * p.c2.max_magnitude());
    }

    #[test]
    fn casimir_map_is_linear(w1 in prop::collection::vec(c64(), 2), w2 in prop::collection::vec(c64(), 2), lambda in c64()) {
        let p = unit_pencil();
        let space = build_theta_space(2, p.lattice(), 1e-17).unwrap();
        let g1 = ThetaFunction::linear_combination(&space, &w1).unwrap();
        let g2 = ThetaFunction::linear_combination(&space, &w2).unwrap();
        let sum = g1.combine(C64::new(1.0, 0.0), &g2, lambda).unwrap();
        let b = CasimirBuilder::new(p, 2).unwrap();
        let t1 = b.casimir_t(std::slice::from_ref(&g1), 2);
        let t2 = b.casimir_t(std::slice::from_ref(&g2), 2);
        let ts = b.casimir_t(std::slice::from_ref(&sum), 2);
        let combo = t1.combine(C64::new(1.0, 0.0), &t2, lambda);
        let gap = (0..ts.u_coeffs.len().max(combo.u_coeffs.len()))
            .map(|d| {
                let zero = PolyElement::zero(6);
                (ts.u_coeffs.get(d).unwrap_or(&zero) - combo.u_coeffs.get(d).unwrap_or(&zero)).norm()
            })
            .fold(0.0, f64::max);
        prop_assert!(gap < 1e-10 * ts.scale().max(combo.scale()));
    }

    #[test]
    fn vector_family_combinations_are_lie(w in prop::collection::vec(c64(), 3)) {
        let family = vector_family();
        prop_assert!(jacobiator(&family.combination(&w)) < 1e-7);
    }
}
