use num_complex::Complex64 as C64;
use proptest::prelude::*;

use antipode::calculus::{critical_gap, dynamic_rotation_number, in_lambda, phi, psi, rho_inverse_plus};
use antipode::circle::{cyclic_order, orbit, Angle};
use antipode::dynamics::{antipode as anti, chordal_distance, classify_orbit, classify_parameter, f, OrbitKind};
use antipode::rays::boettcher;
use antipode::rotation::{collapse_extension, rotation_number, PLCircleMap, RotationNumber};
use antipode::CircleInterval;

fn angle_strategy(max_den: i64) -> impl Strategy<Value = Angle> {
    (1..=max_den).prop_flat_map(|d| (0..d).prop_map(move |n| Angle::frac(n, d)))
}

fn odd_angle(max_den: i64) -> impl Strategy<Value = Angle> {
    (0..=(max_den - 1) / 2).prop_flat_map(|h| {
        let d = 2 * h + 1;
        (0..d).prop_map(move |n| Angle::frac(n, d))
    })
}

fn complex_in(r: f64) -> impl Strategy<Value = C64> {
    (-r..r, -r..r).prop_map(|(x, y)| C64::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn multiplication_is_additive(x in angle_strategy(60), y in angle_strategy(60), d in 2u64..5) {
        prop_assert_eq!(x.add(&y).mul_by(d), x.mul_by(d).add(&y.mul_by(d)));
    }

    #[test]
    fn antipode_is_an_involution(x in angle_strategy(200)) {
        prop_assert_eq!(x.antipode().antipode(), x.clone());
        prop_assert_eq!(x.antipode().sub(&x), Angle::half());
    }

    #[test]
    fn cyclic_order_is_rotation_invariant(
        a in angle_strategy(40), b in angle_strategy(40), c in angle_strategy(40), s in angle_strategy(40)
    ) {
        prop_assert_eq!(cyclic_order(&a, &b, &c), cyclic_order(&a.add(&s), &b.add(&s), &c.add(&s)));
    }

    #[test]
    fn orbits_return(x in angle_strategy(300), d in 2u64..4) {
        let o = orbit(&x, d);
        let r = o.preperiod.len();
        let k = o.cycle.len();
        let mut y = x.clone();
        for _ in 0..r {
            y = y.mul_by(d);
        }
        let start = y.clone();
        for _ in 0..k {
            y = y.mul_by(d);
        }
        prop_assert_eq!(y, start);
    }

    #[test]
    fn landing_map_conjugates_doubling_to_tripling(tc in odd_angle(63), th in angle_strategy(64)) {
        prop_assume!(in_lambda(&tc, &th) && in_lambda(&tc, &th.mul_by(2)));
        let (x, _) = phi(&tc, &th).unwrap();
        let (x2, _) = phi(&tc, &th.mul_by(2)).unwrap();
        prop_assert_eq!(x.mul_by(3), x2);
        prop_assert_eq!(psi(&tc, &x).unwrap(), th);
    }

    #[test]
    fn psi_semiconjugates(tc in odd_angle(31), x in angle_strategy(80)) {
        let g = critical_gap(&tc);
        prop_assume!(!CircleInterval::closed(g.a, g.b).contains(&x));
        let p = psi(&tc, &x).unwrap();
        let p3 = psi(&tc, &x.mul_by(3)).unwrap();
        prop_assert_eq!(p.mul_by(2), p3);
    }

    #[test]
    fn gap_length_is_at_least_a_third(tc in angle_strategy(200)) {
        let g = critical_gap(&tc);
        prop_assert!(g.length >= Angle::frac(1, 3));
        prop_assert_eq!(g.b.sub(&g.a), g.length.clone());
        prop_assert!(g.length <= Angle::half());
    }

    #[test]
    fn rho_is_monotone(x in angle_strategy(50), y in angle_strategy(50)) {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(dynamic_rotation_number(&lo).unwrap() <= dynamic_rotation_number(&hi).unwrap());
    }

    #[test]
    fn rho_inverts(t in odd_angle(41)) {
        prop_assert_eq!(dynamic_rotation_number(&rho_inverse_plus(&t).unwrap()).unwrap(), t);
    }

    #[test]
    fn rotation_number_is_conjugation_invariant(c in angle_strategy(12), s in angle_strategy(12)) {
        let g = collapse_extension(&[CircleInterval::open(c.clone(), c.add(&Angle::half()))], 2).unwrap();
        let r = PLCircleMap::rotation(&s);
        let rinv = PLCircleMap::rotation(&s.neg());
        let conj = r.compose(&g).compose(&rinv);
        let a = rotation_number(&g).unwrap();
        let b = rotation_number(&conj).unwrap();
        if let (RotationNumber::Exact(a), RotationNumber::Exact(b)) = (a, b) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn map_commutes_with_antipode(q in complex_in(10.0), z in complex_in(5.0)) {
        prop_assume!(z.norm() > 1e-3);
        prop_assert!(chordal_distance(f(q, anti(z)), anti(f(q, z))) < 1e-12);
    }

    #[test]
    fn sign_conjugation(q in complex_in(10.0), z in complex_in(5.0)) {
        let lhs = f(-q, z);
        let rhs = -f(q, -z);
        prop_assert!(chordal_distance(lhs, rhs) < 1e-12);
    }

    #[test]
    fn classification_symmetric_in_q(q in complex_in(4.0)) {
        prop_assume!(q.norm() > 1e-3);
        let a = classify_parameter(q, 300, 1e-3).unwrap().0;
        let b = classify_parameter(-q, 300, 1e-3).unwrap().0;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn antipodal_orbits_swap_basins(q in complex_in(4.0), z in complex_in(3.0)) {
        prop_assume!(z.norm() > 1e-3);
        let a = classify_orbit(q, z, 300, 1e-3).kind;
        let b = classify_orbit(q, anti(z), 300, 1e-3).kind;
        match a {
            OrbitKind::ToZero => prop_assert_eq!(b, OrbitKind::ToInfinity),
            OrbitKind::ToInfinity => prop_assert_eq!(b, OrbitKind::ToZero),
            _ => {}
        }
    }

    #[test]
    fn boettcher_modulus_squares(r in 0.5f64..5.0, t in 0.0f64..std::f64::consts::TAU, s in 0.0f64..0.01, u in 0.0f64..std::f64::consts::TAU) {
        let q = C64::from_polar(r, t);
        let z = C64::from_polar(s / r, u);
        prop_assume!(z.norm() > 0.0);
        let b = boettcher(q, z).unwrap();
        let b2 = boettcher(q, f(q, z)).unwrap();
        prop_assert!((b2.norm() - b.norm_sqr()).abs() <= 1e-12 * b.norm_sqr());
    }
}
