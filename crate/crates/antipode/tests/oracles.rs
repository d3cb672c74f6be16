//! Values recomputed here by brute force or plain floating point and
//! compared against the exact library routines.

use num_bigint::BigInt;
use num_complex::Complex64 as C64;
use num_rational::BigRational;

use antipode::calculus::{balanced_pair, collapse_arcs, critical_gap, dynamic_rotation_number, phi, psi};
use antipode::circle::{orbit, Angle};
use antipode::dynamics::{
    antipode as anti, chordal_distance, classify_parameter, f, fixed_points, iterate_with_derivative,
    large_q_rotation_check, ParamClass,
};
use antipode::rays::{
    doubly_visible_check, internal_ray, measure_doubly_visible, parameter_ray, ParamRayOptions, RayStatus,
};
use antipode::render::{antipodal_agreement, render_julia, ImageSpec};
use antipode::rotation::{collapse_extension, deployment_sequence, gap_length_extremes, goldberg_orbit, semiconjugacy_to_md};

fn a(n: i64, d: i64) -> Angle {
    Angle::frac(n, d)
}

fn fr(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// All period-`p` orbits of doubling with `p < 12`, by direct enumeration.
fn brute_rotation_orbits(p: u32, rot: (u64, u64)) -> Vec<Vec<(u64, u64)>> {
    let den = (1u64 << p) - 1;
    let mut out = Vec::new();
    for n in 0..den {
        let mut o = vec![n];
        let mut y = n;
        loop {
            y = (2 * y) % den;
            if y == n {
                break;
            }
            o.push(y);
        }
        if o.len() != p as usize || o.iter().min() != Some(&n) {
            continue;
        }
        // Rotation: position shift of the successor in cyclic order.
        let mut sorted = o.clone();
        sorted.sort();
        let idx = |v: u64| sorted.iter().position(|&s| s == v).unwrap() as u64;
        let shifts: Vec<u64> = sorted.iter().map(|&v| (idx((2 * v) % den) + p as u64 - idx(v)) % p as u64).collect();
        if shifts.iter().all(|&s| s == shifts[0]) && shifts[0] * rot.1 == rot.0 * p as u64 {
            out.push(sorted.iter().map(|&v| (v, den)).collect());
        }
    }
    out
}

#[test]
fn orbit_of_one_sixth() {
    let o = orbit(&a(1, 6), 2);
    assert_eq!(o.preperiod, vec![a(1, 6)]);
    assert_eq!(o.cycle, vec![a(1, 3), a(2, 3)]);
}

#[test]
fn goldberg_matches_enumeration() {
    for (t, p) in [((1u64, 3u64), 3u32), ((1, 4), 4), ((1, 5), 5), ((2, 5), 5)] {
        let brute = brute_rotation_orbits(p, t);
        assert_eq!(brute.len(), 1, "rotation {}/{} should have one orbit", t.0, t.1);
        let got = goldberg_orbit(&a(t.0 as i64, t.1 as i64)).unwrap();
        let mut pts = got.periodic_points();
        pts.sort();
        let want: Vec<Angle> = brute[0].iter().map(|&(n, d)| a(n as i64, d as i64)).collect();
        assert_eq!(pts, want);
    }
}

#[test]
fn gap_extremes_for_period_four() {
    assert_eq!(gap_length_extremes(4), (fr(1, 15), fr(8, 15)));
    let g = goldberg_orbit(&a(1, 4)).unwrap();
    let mut lens: Vec<BigRational> = g.gaps.iter().map(|x| x.interval.length()).collect();
    lens.sort();
    assert_eq!(lens.first().unwrap(), &fr(1, 15));
    assert_eq!(lens.last().unwrap(), &fr(8, 15));
}

#[test]
fn deployment_of_a_tripling_orbit() {
    let g = antipode::rotation::RotationSet::new(3, vec![vec![a(1, 8), a(3, 8)]], vec![]);
    let d = deployment_sequence(&g).unwrap();
    assert_eq!(d.counts.iter().sum::<u64>(), 2);
}

/// Base-3 value of the digit rule, evaluated with floats for 34 digits.
fn float_phi(tc: f64, t: f64) -> f64 {
    let (lo, hi) = if tc < 0.5 { (tc, 0.5) } else { (0.5, tc) };
    let mut y = t;
    let mut w = 1.0 / 3.0;
    let mut acc = 0.0;
    for _ in 0..34 {
        let d = if y < lo - 1e-12 {
            0.0
        } else if y < hi - 1e-12 {
            1.0
        } else {
            2.0
        };
        acc += d * w;
        w /= 3.0;
        y = (2.0 * y).fract();
    }
    acc
}

#[test]
fn digit_rule_matches_float_evaluation() {
    assert_eq!(phi(&a(2, 7), &a(1, 3)).unwrap().0, a(5, 8));
    for (tc, t) in [((2, 7), (1, 3)), ((1, 5), (1, 7)), ((3, 7), (1, 9)), ((1, 3), (1, 5))] {
        let tc = a(tc.0, tc.1);
        let t = a(t.0, t.1);
        let exact = phi(&tc, &t).unwrap().0.to_f64();
        assert!((exact - float_phi(tc.to_f64(), t.to_f64())).abs() < 1e-9, "phi({tc}, {t})");
    }
}

#[test]
fn gap_of_one_fifth() {
    let g = critical_gap(&a(1, 5));
    assert_eq!(g.length, a(27, 80));
    // Endpoints sit on Λ, so tripling them stays off the gap.
    assert_eq!(psi(&a(1, 5), &g.a).unwrap(), a(1, 5));
}

#[test]
fn psi_inverts_known_value() {
    assert_eq!(psi(&a(2, 7), &a(5, 8)).unwrap(), a(1, 3));
}

/// Rotation number of the first tripling cycle (period <= 8) that never
/// enters the open critical gap or its antipodal copy, found by enumeration.
fn enumerated_rotation(tc: &Angle) -> Option<(u64, u64)> {
    let g = critical_gap(tc);
    let (an, ad) = g.a.to_u64_pair()?;
    let (bn, bd) = g.b.to_u64_pair()?;
    let less = |x: (u64, u64), y: (u64, u64)| (x.0 as u128) * (y.1 as u128) < (y.0 as u128) * (x.1 as u128);
    let in_gap = |x: (u64, u64)| {
        if less((an, ad), (bn, bd)) {
            less((an, ad), x) && less(x, (bn, bd))
        } else {
            less((an, ad), x) || less(x, (bn, bd))
        }
    };
    for p in 1..=8u32 {
        let den = 3u64.pow(p) - 1;
        for n in 0..den {
            let mut o = vec![n];
            let mut y = (3 * n) % den;
            while y != n {
                o.push(y);
                y = (3 * y) % den;
            }
            // den is even, so v + den/2 is the antipode.
            let hidden = |v: u64| in_gap((v, den)) || in_gap(((v + den / 2) % den, den));
            if o.len() != p as usize || o.iter().any(|&v| hidden(v)) {
                continue;
            }
            let mut sorted = o.clone();
            sorted.sort();
            let idx = |v: u64| sorted.iter().position(|&s| s == v).unwrap() as u64;
            let k = p as u64;
            let shift = (idx((3 * n) % den) + k - idx(n)) % k;
            let g = num_integer::gcd(shift, k);
            return Some((shift / g, k / g));
        }
    }
    None
}

#[test]
fn rotation_number_matches_enumeration() {
    for (n, d) in [(1i64, 5i64), (2, 7), (1, 3), (3, 7), (1, 9), (5, 11), (0, 1)] {
        let t = a(n, d);
        let (rn, rd) = enumerated_rotation(&t).expect("some cycle avoids the gap");
        assert_eq!(dynamic_rotation_number(&t).unwrap(), a(rn as i64, rd as i64), "Θ = {t}");
    }
    assert_eq!(dynamic_rotation_number(&a(1, 5)).unwrap(), a(1, 4));
}

#[test]
fn balanced_pair_by_symmetry() {
    let (x, y) = balanced_pair(&a(1, 4)).unwrap();
    let (u, v) = balanced_pair(&a(3, 4)).unwrap();
    assert_eq!((u, v), (y.neg(), x.neg()));
    assert_eq!(balanced_pair(&a(3, 4)).unwrap(), (a(11, 15), a(13, 15)));
}

#[test]
fn fixed_points_on_the_imaginary_unit_line() {
    let q = C64::new(0.3, 1.0);
    let (p, m, _) = fixed_points(q);
    for z in [p, m] {
        assert!((f(q, z) - z).norm() < 1e-12 * (1.0 + z.norm()));
    }
    assert!(f(C64::new(1.0, 1.0), C64::new(1.0, 1.0)).norm() < 1e-15);
}

#[test]
fn small_parameter_is_central() {
    assert_eq!(classify_parameter(C64::new(0.1, 0.0), 500, 1e-3).unwrap().0, ParamClass::Central);
}

#[test]
fn large_parameters_rotate_nearly_rigidly() {
    let q4 = C64::from_polar(1e2, 0.7);
    let q6 = C64::from_polar(1e3, 2.1);
    assert!(large_q_rotation_check(q4, 0.1, 20, 64) < 0.1);
    assert!(large_q_rotation_check(q6, 0.1, 20, 64) < 0.01);
}

#[test]
fn parameter_rays_stay_in_the_disk() {
    let ray = parameter_ray(&a(0, 1), &ParamRayOptions::new((1..=10).map(|k| 0.09 * k as f64).collect())).unwrap();
    assert_eq!(ray.status, RayStatus::Complete);
    for p in &ray.points {
        assert!(p.phi.norm() < 1.0);
        assert!(p.q2.im.abs() < 1e-8 * (1.0 + p.q2.norm()), "q^2 = {}", p.q2);
    }
    let ray = parameter_ray(&a(4, 7), &ParamRayOptions::new((1..=10).map(|k| 0.09 * k as f64).collect())).unwrap();
    assert!(ray.points.iter().all(|p| p.q2.norm() < 1e3));
}

#[test]
fn measured_rotation_matches_combinatorics() {
    for (n, d) in [(0i64, 1i64), (2, 7), (1, 5), (1, 3)] {
        let t = a(n, d);
        let m = measure_doubly_visible(&t, 0.5, 4, 24).unwrap();
        assert_eq!(m.rotation_number, Some(dynamic_rotation_number(&t).unwrap()), "Θ = {t}");
    }
}

fn point_on_ray(n: i64, d: i64, r: f64) -> C64 {
    let sched: Vec<f64> = (1..=20).map(|k| r * k as f64 / 20.0).collect();
    let ray = parameter_ray(&a(n, d), &ParamRayOptions::new(sched)).unwrap();
    assert_eq!(ray.status, RayStatus::Complete);
    ray.last().unwrap().q
}

#[test]
fn meridians_for_rotation_one_quarter() {
    let q = point_on_ray(1, 5, 0.5);
    for (i, e) in [((4, 15), (1, 15)), ((8, 15), (2, 15)), ((1, 15), (4, 15)), ((2, 15), (8, 15))] {
        let m = doubly_visible_check(q, &a(i.0, i.1), &a(e.0, e.1), 24).unwrap();
        assert!(m.is_some(), "internal {}/{} and external {}/{}", i.0, i.1, e.0, e.1);
    }
    assert!(doubly_visible_check(q, &a(1, 15), &a(1, 15), 24).unwrap().is_none());
}

#[test]
fn ray_samples_are_generalized_preimages() {
    let q = point_on_ray(2, 7, 0.5);
    for t in [a(1, 3), a(1, 7), a(3, 5)] {
        let ray = internal_ray(q, &t, 20).unwrap();
        let p = orbit(&t, 2).cycle.len();
        let pts = &ray.points;
        for k in 0..pts.len().saturating_sub(p) {
            let (w, _) = iterate_with_derivative(q, pts[k + p], p);
            assert!((w - pts[k]).norm() < 1e-9 * (1.0 + pts[k].norm()), "θ = {t}, k = {k}");
        }
        if let Some(z) = ray.landing_point {
            let (w, _) = iterate_with_derivative(q, z, p);
            assert!((w - z).norm() < 1e-7, "landing point of {t} is not periodic");
        }
        let ext = ray.antipodal();
        for (u, v) in ext.points.iter().zip(&ray.points) {
            assert!(chordal_distance(*u, anti(*v)) < 1e-12);
        }
    }
}

#[test]
fn julia_sets_are_antipodally_symmetric() {
    for q in [C64::new(1.0, -6.0), C64::new(0.4, 0.2), C64::new(-2.0, 1.5)] {
        let mut spec = ImageSpec::square(96, C64::new(0.0, 0.0), 3.0);
        spec.projection = antipode::render::Projection::CircledDisk;
        let img = render_julia(q, &spec).unwrap();
        assert!(antipodal_agreement(&img) > 0.95, "q = {q}");
    }
}

#[test]
fn semiconjugacy_agrees_with_psi() {
    // Collapsing only I_1 leaves a degree-two map equal to tripling off I_1.
    let [i1, _] = collapse_arcs(&a(2, 7));
    let g = collapse_extension(&[i1], 3).unwrap();
    assert_eq!(g.degree(), 2);
    assert_eq!(g.eval(&a(0, 1)), a(0, 1));
    for x in [a(6, 26), a(15, 26), a(18, 26), a(2, 26), a(5, 8), a(7, 8)] {
        let (h, err) = semiconjugacy_to_md(&g, &a(0, 1), &x, 15).unwrap();
        assert!(err <= 1.0 / 32768.0 + 1e-15);
        let want = psi(&a(2, 7), &x).unwrap().to_f64();
        let d = (h - want).rem_euclid(1.0);
        assert!(d.min(1.0 - d) <= err, "x = {x}: h = {h}, psi = {want}");
    }
}
