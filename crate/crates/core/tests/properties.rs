mod common;

use std::sync::Arc;

use common::*;
use fmpartners::corpus;
use fmpartners::lattice_core::{int, Int, IntMat, Rat};
use fmpartners::product_audit::{decompose, kernel_on_torsion, projection_iso, reassemble, search_n, ProductClass};
use fmpartners::regress::level_two_instances;
use fmpartners::slopes::{pi1_invariants, Slope};
use fmpartners::varieties::{hom_lattice, FiniteSubgroup, Homomorphism, NsClass, TorusVariety};
use num_traits::{Signed, ToPrimitive, Zero};
use proptest::prelude::*;

fn e_i_squared() -> Arc<TorusVariety> {
    Arc::new(corpus::e_i_x_e_i())
}

fn combine(v: &Arc<TorusVariety>, basis: &[IntMat], coeffs: &[i64]) -> IntMat {
    let n = v.lattice_rank();
    coeffs.iter().zip(basis).fold(IntMat::zeros(n, n), |acc, (c, b)| &acc + &b.scale(&int(*c)))
}

fn endomorphism(v: &Arc<TorusVariety>, coeffs: &[i64]) -> Homomorphism {
    let m = combine(v, &hom_lattice(v, v), coeffs);
    Homomorphism::new(v.clone(), v.clone(), m).unwrap()
}

fn subgroup(v: &Arc<TorusVariety>, gens: &[Vec<i64>], n: i64) -> FiniteSubgroup {
    let points: Vec<Vec<Rat>> = gens.iter().map(|g| g.iter().map(|x| Rat::new(int(*x), int(n))).collect()).collect();
    FiniteSubgroup::generated_by(v.clone(), &points).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_divisors_come_in_pairs(coeffs in proptest::collection::vec(-4i64..=4, 4)) {
        let exe = e_i_squared();
        let e = combine(&exe, &exe.ns_lattice(), &coeffs);
        prop_assume!(!e.det().is_zero());
        let k = NsClass::new(exe, e.clone()).unwrap().kernel_group().unwrap();
        prop_assert!(k.is_paired());
        let lib: Vec<i64> = k.divisors().iter().map(|d| d.to_i64().unwrap()).collect();
        prop_assert_eq!(lib, kernel_divisors(&small(&e)));
    }

    #[test]
    fn decompose_then_reassemble(coeffs in proptest::collection::vec(-3i64..=3, 4)) {
        let ei = Arc::new(corpus::e_i());
        let exe = e_i_squared();
        let m = combine(&exe, exe.ns_basis(), &coeffs);
        let pc = ProductClass::from_parts(&ei, &ei, m.clone()).unwrap();
        let (ma, pi, mb) = decompose(&pc);
        prop_assert_eq!(reassemble(&ma, &pi, &mb), m);
        prop_assert_eq!(pi.is_isogeny(), !pc.c.det().is_zero());
    }

    #[test]
    fn dual_hom_is_an_involution(coeffs in proptest::collection::vec(-2i64..=2, 8)) {
        let exe = e_i_squared();
        let f = endomorphism(&exe, &coeffs);
        let dd = f.dual_hom().dual_hom();
        prop_assert_eq!(dd.matrix(), f.matrix());
        prop_assert_eq!(f.dual_hom().matrix().clone(), f.matrix().transpose());
    }

    #[test]
    fn degree_is_multiplicative(a in proptest::collection::vec(-2i64..=2, 8), b in proptest::collection::vec(-2i64..=2, 8)) {
        let exe = e_i_squared();
        let (f, g) = (endomorphism(&exe, &a), endomorphism(&exe, &b));
        prop_assume!(f.is_isogeny() && g.is_isogeny());
        let fg = f.compose(&g).unwrap();
        prop_assert_eq!(fg.degree().unwrap(), f.degree().unwrap() * g.degree().unwrap());
        prop_assert_eq!(f.kernel().unwrap().order(), f.degree().unwrap());
    }

    #[test]
    fn subgroup_order_law(
        a in proptest::collection::vec(proptest::collection::vec(0i64..4, 4), 1..3),
        b in proptest::collection::vec(proptest::collection::vec(0i64..4, 4), 1..3),
    ) {
        let exe = e_i_squared();
        let (h, k) = (subgroup(&exe, &a, 4), subgroup(&exe, &b, 4));
        let (meet, join) = (h.intersect(&k).unwrap(), h.sum(&k).unwrap());
        prop_assert!(h.contains(&meet).unwrap() && k.contains(&meet).unwrap());
        prop_assert!(join.contains(&h).unwrap() && join.contains(&k).unwrap());
        prop_assert_eq!(join.order() * meet.order(), h.order() * k.order());
        prop_assert_eq!(Int::from(h.elements().len()), h.order());
    }

    #[test]
    fn pi1_degree_is_rank_squared(coeffs in proptest::collection::vec(-2i64..=2, 4), l in 1i64..=3) {
        let exe = e_i_squared();
        let slope = Slope::from_coefficients(exe.clone(), &coeffs.iter().map(|c| int(*c)).collect::<Vec<_>>(), &int(l)).unwrap();
        let inv = pi1_invariants(&slope).unwrap();
        prop_assert_eq!(&inv.rank * &inv.rank, inv.deg_pi1.clone());
        prop_assert_eq!(inv.sigma.order(), inv.deg_pi1.clone());
        let ls = slope.denominator().to_i64().unwrap();
        let oracle = ls.pow(4) / count_killed(&small(slope.form()), ls) as i64;
        prop_assert_eq!(inv.deg_pi1, int(oracle));
    }

    #[test]
    fn search_n_results_satisfy_the_equality(coeffs in proptest::collection::vec(-2i64..=2, 4), l in 1i64..=4) {
        let exe = e_i_squared();
        let n0 = NsClass::from_coefficients(exe.clone(), &coeffs.iter().map(|c| int(*c)).collect::<Vec<_>>()).unwrap();
        let target = kernel_on_torsion(&n0, &int(l)).unwrap();
        let found = search_n(&exe, &int(l), &target, 2).unwrap();
        if coeffs.iter().any(|c| *c != 0) {
            prop_assert!(found.is_some());
        }
        if let Some(n) = found {
            for c in &n.coefficients {
                prop_assert!(c.abs() <= int(2));
            }
            let nm = small(n.class.form());
            let mut agree = true;
            let mut count = 0;
            for_each(4, l, |v| {
                let inside = apply_mod(&nm, v, l).iter().all(|x| *x == 0);
                let point: Vec<Rat> = v.iter().map(|x| Rat::new(int(*x), int(l))).collect();
                agree &= inside == target.contains_point(&point).unwrap();
                count += inside as i64;
            });
            prop_assert!(agree);
            prop_assert_eq!(int(count), target.order());
        }
    }
}

#[test]
fn projections_are_unimodular_on_searched_classes() {
    for (coeffs, pc) in level_two_instances().unwrap() {
        let iso = projection_iso(&pc, &int(2), 3).unwrap();
        for h in [&iso.p, &iso.q, &iso.eta] {
            assert!(is_unimodular(&small(h.matrix())), "{coeffs:?}");
        }
        assert!(iso.eta_image_ok, "{coeffs:?}");
    }
}
