mod common;

use std::collections::BTreeMap;

use adelion::{
    adelic_character, decompose, fractional_apply, lizorkin_check, AdelePoint, Ball, BallRelation,
    LocalFunction, PAdicScalar, Prime, Valuation,
};
use common::*;
use proptest::prelude::*;

fn any_prime() -> impl Strategy<Value = Prime> {
    prop::sample::select(vec![2u64, 3, 5, 7]).prop_map(prime)
}

fn scalar() -> impl Strategy<Value = PAdicScalar> {
    (-500i64..=500, 1i64..=200).prop_map(|(n, d)| PAdicScalar::ratio(n, d))
}

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cfg(256))]

    #[test]
    fn valuation_is_ultrametric(p in any_prime(), x in scalar(), y in scalar()) {
        let s = &x + &y;
        prop_assert!(s.valuation(p) >= x.valuation(p).min(y.valuation(p)));
    }

    #[test]
    fn valuation_is_multiplicative(p in any_prime(), x in scalar(), y in scalar()) {
        let v = |z: &PAdicScalar| z.valuation(p).finite();
        match (v(&x), v(&y)) {
            (Some(a), Some(b)) => prop_assert_eq!(v(&(&x * &y)), Some(a + b)),
            _ => prop_assert!((&x * &y).is_zero()),
        }
    }

    #[test]
    fn frac_part_is_idempotent_and_leaves_an_integer(p in any_prime(), x in scalar()) {
        let f = x.frac_part(p);
        prop_assert_eq!(f.frac_part(p), f.clone());
        prop_assert!((&x - &f).valuation(p) >= Valuation::Finite(0));
        prop_assert!(f.to_f64() >= 0.0 && f.to_f64() < 1.0);
    }

    #[test]
    fn character_is_additive(p in any_prime(), x in scalar(), y in scalar()) {
        let lhs = adelion::chi(&(&x + &y), p);
        let rhs = adelion::chi(&x, p).add(&adelion::chi(&y, p));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn principal_adeles_have_trivial_character(r in scalar()) {
        prop_assert!(adelic_character(&AdelePoint::principal(&r)).is_zero());
    }

    #[test]
    fn ball_relation_is_consistent(
        p in any_prime(),
        a in scalar(),
        b in scalar(),
        ga in -3i64..=3,
        gb in -3i64..=3,
    ) {
        let x = Ball::new(p, &a, ga);
        let y = Ball::new(p, &b, gb);
        let rel = x.relation(&y);
        let back = y.relation(&x);
        let expect_back = match rel {
            BallRelation::Disjoint => BallRelation::Disjoint,
            BallRelation::Equal => BallRelation::Equal,
            BallRelation::FirstInsideSecond => BallRelation::SecondInsideFirst,
            BallRelation::SecondInsideFirst => BallRelation::FirstInsideSecond,
        };
        prop_assert_eq!(back, expect_back);
        // exactly one of the four cases, matched by the containment tests
        let xy = y.contains_ball(&x);
        let yx = x.contains_ball(&y);
        let want = match (xy, yx) {
            (true, true) => BallRelation::Equal,
            (true, false) => BallRelation::FirstInsideSecond,
            (false, true) => BallRelation::SecondInsideFirst,
            (false, false) => BallRelation::Disjoint,
        };
        prop_assert_eq!(rel, want);
        prop_assert!(x.contains(&a) && y.contains(&b));
    }
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn fourier_is_an_isometric_involution(seed in any::<u64>(), pi in 0usize..3) {
        let p = prime([2, 3, 5][pi]);
        let mut r = rng(seed);
        let f = random_local_function(&mut r, p);
        let g = random_local_function(&mut r, p);
        prop_assert!(f.fourier().inverse_fourier().sup_distance(&f) < 1e-12);
        let d = f.inner(&g) - f.fourier().inner(&g.fourier());
        prop_assert!(d.norm() < 1e-12);
    }

    #[test]
    fn fourier_is_linear(seed in any::<u64>(), pi in 0usize..3) {
        let p = prime([2, 3, 5][pi]);
        let mut r = rng(seed);
        let f = random_local_function(&mut r, p);
        let g = random_local_function(&mut r, p);
        let z = random_amp(&mut r);
        let lhs = f.add(&g.scale(z)).fourier();
        let rhs = f.fourier().add(&g.fourier().scale(z));
        prop_assert!(lhs.sup_distance(&rhs) < 1e-12);
    }

    #[test]
    fn canonical_form_preserves_values(seed in any::<u64>(), pi in 0usize..3) {
        let p = prime([2, 3, 5][pi]);
        let mut r = rng(seed);
        let f = random_local_function(&mut r, p);
        prop_assert_eq!(f.canonicalize(), f.clone());
        for _ in 0..8 {
            let x = random_scalar(&mut r, p, 3);
            let direct: num_complex::Complex64 = f.terms().iter().map(|t| t.evaluate(&x)).sum();
            prop_assert!((f.evaluate(&x) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn translations_and_dilations_compose(
        seed in any::<u64>(),
        pi in 0usize..3,
        j1 in -2i64..=2,
        j2 in -2i64..=2,
    ) {
        let p = prime([2, 3, 5][pi]);
        let mut r = rng(seed);
        let f = random_local_function(&mut r, p);
        let a = random_scalar(&mut r, p, 2);
        let b = random_scalar(&mut r, p, 2);
        prop_assert!(f.translate(&a).translate(&b).sup_distance(&f.translate(&(&a + &b))) < 1e-12);
        prop_assert!(f.dilate(j1).dilate(j2).sup_distance(&f.dilate(j1 + j2)) < 1e-12);
        prop_assert!(f.translate(&a).translate(&-&a).sup_distance(&f) < 1e-12);
    }

    #[test]
    fn multiplication_matches_pointwise_product(seed in any::<u64>(), pi in 0usize..3) {
        let p = prime([2, 3, 5][pi]);
        let mut r = rng(seed);
        let f = random_local_function(&mut r, p);
        let g = random_local_function(&mut r, p);
        let fg = f.multiply(&g);
        for _ in 0..8 {
            let x = random_scalar(&mut r, p, 3);
            prop_assert!((fg.evaluate(&x) - f.evaluate(&x) * g.evaluate(&x)).norm() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(cfg(16))]

    #[test]
    fn joint_norm_matches_inner_product(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (s, _) = random_wavelet_sum(&mut r, &[2, 3], 4, -1..=1, 1);
        let n2 = s.norm_sq().unwrap();
        let ip = s.inner(&s).unwrap();
        prop_assert!((n2 - ip.re).abs() < 1e-10 && ip.im.abs() < 1e-10);
        // one orthonormal family: the norm is the l2 norm of the coefficients
        let (s, want) = random_wavelet_sum(&mut r, &[3], 4, -1..=1, 1);
        let n2 = s.norm_sq().unwrap();
        let l2: f64 = want.values().map(|c| c.norm_sqr()).sum();
        prop_assert!((n2 - l2).abs() < 1e-10);
    }

    #[test]
    fn fractional_operators_keep_lizorkin_functions(seed in any::<u64>(), g2 in -2.0f64..2.0, g3 in -2.0f64..2.0) {
        let mut r = rng(seed);
        // every piece must have wavelets at the places where the operator acts
        let (s, _) = random_wavelet_sum(&mut r, &[3, 5], 3, -1..=2, 1);
        prop_assert!(lizorkin_check(&s, 0, 1e-12).unwrap().passes);
        let gammas: BTreeMap<Prime, _> = [(prime(2), c(g2, 0.0)), (prime(3), c(g3, 0.5))].into();
        let out = fractional_apply(&s, &gammas).unwrap();
        prop_assert!(lizorkin_check(&out, 0, 1e-12).unwrap().passes);
    }

    #[test]
    fn decomposition_recovers_wavelet_coefficients(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (s, want) = random_wavelet_sum(&mut r, &[2, 3], 3, -1..=1, 1);
        let d = decompose(&s).unwrap();
        prop_assert!(d.residual < 1e-10);
        for (alpha, coef) in &want {
            prop_assert!((d.coefficient(alpha) - coef).norm() < 1e-10);
        }
    }
}

#[test]
fn omega_is_its_own_transform() {
    for p in [2, 3, 5, 7] {
        let om = LocalFunction::omega(prime(p));
        assert_eq!(om.fourier(), om);
    }
}
