//! Acceptance checks, one runner per criterion. Each returns a
//! [`CheckResult`] whose [`CheckResult::line`] is a single PASS/FAIL line.
//! Shared by the `acceptance` test target and the `selftest` subcommand.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::calculus::{
    balanced_angle, balanced_pair, critical_gap, dynamic_rotation_number, phi_pm, rho_discontinuity,
    rho_inverse_minus, rho_inverse_plus,
};
use crate::circle::{orbit_shape_u64, Angle};
use crate::dynamics::{antipode, chordal_distance, critical_points, df, f, fixed_points};
use crate::rays::{boettcher, measure_doubly_visible, parameter_ray, default_schedule, ParamRayOptions};
use crate::render::{render_julia, render_param, rotation_mismatches, undecided_band_separates, Coloring, ImageSpec, Palette, ParamPlane};
use crate::rotation::{deployment_of_points, is_rotation_orbit, plateau_length, points_rotation_number};

type C64 = Complex64;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl CheckResult {
    /// Both the property and the time limit hold.
    pub fn passed(&self) -> bool {
        self.ok && self.elapsed <= self.limit
    }

    pub fn line(&self) -> String {
        let timing = if self.elapsed <= self.limit { "" } else { " (over time limit)" };
        format!(
            "{} [{}] {}: {} [{:.2}s, limit {}s]{}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs(),
            timing
        )
    }
}

fn timed(id: u32, name: &'static str, limit_s: u64, body: impl FnOnce() -> (bool, String)) -> CheckResult {
    let t = Instant::now();
    let (ok, detail) = body();
    CheckResult { id, name, ok, detail, elapsed: t.elapsed(), limit: Duration::from_secs(limit_s) }
}

fn a(n: i64, d: i64) -> Angle {
    Angle::frac(n, d)
}

/// Collects failures; the detail lists the first few.
#[derive(Default)]
struct Tally {
    checked: usize,
    failures: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self, summary: &str) -> (bool, String) {
        if self.failures.is_empty() {
            (true, format!("{summary}: {} checks", self.checked))
        } else {
            let n = self.failures.len();
            let shown: Vec<_> = self.failures.into_iter().take(4).collect();
            (false, format!("{summary}: {n} of {} failed, e.g. {}", self.checked, shown.join("; ")))
        }
    }
}

/// Exact values of gaps, landing maps, balanced angles and jumps.
pub fn criterion_1() -> CheckResult {
    timed(1, "exact angle values", 1, || {
        let mut t = Tally::default();
        let g = critical_gap(&a(2, 7));
        t.check(g.a == a(6, 26) && g.b == a(15, 26) && g.length == a(9, 26), || {
            format!("critical_gap(2/7) = ({}, {}), {}", g.a, g.b, g.length)
        });
        for (th, lo, hi) in [(a(4, 7), a(18, 26), a(19, 26)), (a(1, 7), a(2, 26), a(5, 26))] {
            let got = phi_pm(&a(2, 7), &th);
            t.check(got.as_ref().ok() == Some(&(lo.clone(), hi.clone())), || format!("phi_pm(2/7, {th}) = {got:?}"));
        }
        let bp = balanced_pair(&a(1, 4));
        t.check(bp.as_ref().ok() == Some(&(a(2, 15), a(4, 15))), || format!("balanced_pair(1/4) = {bp:?}"));
        let bp = balanced_pair(&a(1, 2));
        t.check(bp.as_ref().ok() == Some(&(a(1, 3), a(2, 3))), || format!("balanced_pair(1/2) = {bp:?}"));
        let ba = balanced_angle(&a(1, 3));
        t.check(ba.as_ref().ok() == Some(&a(2, 7)), || format!("balanced_angle(1/3) = {ba:?}"));
        let rp = rho_inverse_plus(&a(1, 3));
        t.check(rp.as_ref().ok() == Some(&a(2, 7)), || format!("rho_inverse_plus(1/3) = {rp:?}"));
        t.check(rho_discontinuity(&a(1, 2)) == a(1, 3), || "rho_discontinuity(1/2)".into());
        t.check(rho_discontinuity(&a(1, 4)) == a(2, 15), || "rho_discontinuity(1/4)".into());
        t.finish("all exact")
    })
}

/// Multiplicative order of 2 modulo an odd `d`.
fn order_of_two(d: u64) -> usize {
    if d == 1 {
        return 1;
    }
    let (mut x, mut p) = (2 % d, 1);
    while x != 1 {
        x = x * 2 % d;
        p += 1;
    }
    p
}

fn third_power_ratio(p: usize) -> Angle {
    let t = num_traits::pow(BigInt::from(3), p - 1);
    let m = num_traits::pow(BigInt::from(3), p) - 1;
    Angle::new(t, m).unwrap()
}

/// Gap length `3^(p-1)/(3^p - 1)` for periodic Θ, `1/3` otherwise.
pub fn criterion_2() -> CheckResult {
    timed(2, "gap-length law", 10, || {
        let dens: Vec<u64> = (1..=1023u64).step_by(2).collect();
        let fails: Vec<(usize, Vec<String>)> = dens
            .par_iter()
            .map(|&d| {
                let want = third_power_ratio(order_of_two(d));
                let mut bad = Vec::new();
                let mut n = 0;
                for k in 0..d {
                    if k.gcd(&d) != 1 {
                        continue;
                    }
                    n += 1;
                    let th = Angle::frac(k as i64, d as i64);
                    let g = critical_gap(&th);
                    if g.length != want {
                        bad.push(format!("{th}: {} != {want}", g.length));
                    }
                }
                (n, bad)
            })
            .collect();
        let mut t = Tally::default();
        for (n, bad) in fails {
            t.checked += n;
            t.failures.extend(bad);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut drawn = 0;
        while drawn < 100 {
            let odd = 2 * rng.random_range(0..500u64) + 1;
            let d = odd << rng.random_range(1..=20u32);
            let k = rng.random_range(1..d);
            if k.gcd(&d) != 1 {
                continue;
            }
            drawn += 1;
            let th = Angle::new(k, d).unwrap();
            let g = critical_gap(&th);
            t.check(g.length == a(1, 3), || format!("{th}: {}", g.length));
        }
        t.finish("periodic Θ with odd denominator <= 1023 and 100 non-periodic Θ")
    })
}

/// Round trip `ρ(ρ^{-1}(t)) = t`, monotonicity on a grid and the plateaus.
pub fn criterion_3() -> CheckResult {
    timed(3, "rho round trip, monotonicity, plateaus", 60, || {
        let mut t = Tally::default();
        for n in (1..=31i64).step_by(2) {
            for p in 0..n {
                if p.gcd(&n) != 1 {
                    continue;
                }
                let tt = a(p, n);
                for inv in [rho_inverse_plus(&tt), rho_inverse_minus(&tt)] {
                    let back = inv.as_ref().ok().and_then(|th| dynamic_rotation_number(th).ok());
                    t.check(back.as_ref() == Some(&tt), || format!("rho(rho^-1({tt})) = {back:?}"));
                }
            }
        }
        let n = 10_000usize;
        let graph: Vec<Option<Angle>> = (0..n)
            .into_par_iter()
            .map(|j| dynamic_rotation_number(&Angle::frac(j as i64, n as i64)).ok())
            .collect();
        let defined = graph.iter().all(|g| g.is_some());
        t.check(defined, || "rho undefined on the grid".into());
        if defined {
            let vals: Vec<Angle> = graph.into_iter().flatten().collect();
            t.check(vals[0].is_zero(), || format!("rho(0) = {}", vals[0]));
            let drops = vals.windows(2).filter(|w| w[1] < w[0]).count();
            t.check(drops == 0, || format!("{drops} decreases"));
            // With rho(0) = 0 and no decrease, the only descent of the cyclic
            // sequence is the wrap from near 1 back to 0: degree one.
            t.check(vals[n - 1].to_f64() > 0.5, || format!("rho(1 - 1/n) = {}", vals[n - 1]));
        }
        let eps = Angle::new(1, 1u64 << 20).unwrap();
        for k in 1..=4i64 {
            for j in 0..2 * k {
                if j.gcd(&(2 * k)) != 1 {
                    continue;
                }
                let tt = a(j, 2 * k);
                let (Ok(lo), Ok(hi)) = (rho_inverse_minus(&tt), rho_inverse_plus(&tt)) else {
                    t.check(false, || format!("rho^-1({tt}) failed"));
                    continue;
                };
                let want = Angle::new(1i64 << (k - 1), (1i64 << (2 * k)) - 1).unwrap();
                t.check(hi.sub(&lo) == want, || format!("plateau at {tt}: {} != {want}", hi.sub(&lo)));
                t.check(rho_discontinuity(&tt) == want, || format!("rho_discontinuity({tt})"));
                for (th, inside) in [(lo.clone(), true), (hi.clone(), true), (lo.sub(&eps), false), (hi.add(&eps), false)] {
                    let r = dynamic_rotation_number(&th).ok();
                    t.check((r.as_ref() == Some(&tt)) == inside, || format!("rho({th}) = {r:?} at plateau {tt}"));
                }
            }
        }
        t.finish("odd denominators <= 31, 10^4 grid, plateaus 2k <= 8")
    })
}

/// All periodic orbits of `m_d` of period `<= max_period` that are
/// rotation orbits.
pub fn rotation_orbits(d: u64, max_period: usize) -> Vec<Vec<Angle>> {
    let mut out = Vec::new();
    for p in 1..=max_period {
        let m = d.pow(p as u32) - 1;
        for k in 0..m {
            // Canonical representative: smallest point, exact period p.
            if orbit_shape_u64(k, m, d) != (0, p) {
                continue;
            }
            let mut pts = Vec::with_capacity(p);
            let mut x = k;
            let mut least = true;
            for _ in 0..p {
                if x < k {
                    least = false;
                    break;
                }
                pts.push(x);
                x = (x * d) % m;
            }
            if !least {
                continue;
            }
            let orbit: Vec<Angle> = pts.iter().map(|&x| Angle::new(x, m).unwrap()).collect();
            if is_rotation_orbit(&orbit, d) {
                out.push(orbit);
            }
        }
    }
    out
}

/// One orbit per (rotation number, deployment); `n + 1` deployments per
/// rotation number of period `n` for tripling.
pub fn criterion_4() -> CheckResult {
    timed(4, "brute-force rotation orbits", 120, || {
        let mut t = Tally::default();
        for (d, maxp) in [(2u64, 12usize), (3, 8)] {
            let orbits = rotation_orbits(d, maxp);
            let mut groups: HashMap<(Angle, Vec<u64>), usize> = HashMap::new();
            for o in &orbits {
                let r = points_rotation_number(o, d).unwrap();
                *groups.entry((r, deployment_of_points(o, d).counts)).or_default() += 1;
            }
            for ((r, dep), n) in &groups {
                t.check(*n == 1, || format!("d={d}: {n} orbits with rotation {r}, deployment {dep:?}"));
            }
            let mut per_rot: HashMap<Angle, usize> = HashMap::new();
            for (r, _) in groups.keys() {
                *per_rot.entry(r.clone()).or_default() += 1;
            }
            // Every rotation number p/n with n <= max period occurs.
            for n in 1..=maxp as i64 {
                for p in 0..n {
                    if p.gcd(&n) != 1 {
                        continue;
                    }
                    let r = a(p, n);
                    let want = if d == 2 { 1 } else { n as usize + 1 };
                    let got = per_rot.get(&r).copied().unwrap_or(0);
                    t.check(got == want, || format!("d={d}: rotation {r} has {got} deployments, want {want}"));
                }
            }
        }
        t.finish("doubling period <= 12, tripling period <= 8")
    })
}

/// Sum of plateau lengths over reduced rationals of denominator `<= 14`.
pub fn plateau_sum(max_den: i64) -> BigRational {
    let mut s = BigRational::zero();
    for n in 1..=max_den {
        for p in 0..n {
            if p.gcd(&n) == 1 {
                s += plateau_length(&a(p, n));
            }
        }
    }
    s
}

pub fn criterion_5() -> CheckResult {
    timed(5, "plateau sum", 5, || {
        let s = plateau_sum(14);
        let bound = BigRational::one() - BigRational::new(BigInt::one(), BigInt::from(4096));
        let deficit = BigRational::one() - &s;
        let approx = deficit.numer().to_string().parse::<f64>().unwrap_or(f64::NAN)
            / deficit.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
        (s >= bound, format!("sum = 1 - {approx:.4e}, required >= 1 - 2^-12 = 1 - {:.4e}", 1.0 / 4096.0))
    })
}

/// Equivariance, collinearity, fixed points and critical points over
/// random parameters.
pub fn criterion_6() -> CheckResult {
    timed(6, "dynamics numerics", 5, || {
        let mut t = Tally::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let q = loop {
                let q = C64::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
                if q.norm() <= 10.0 && q.norm() > 1e-6 {
                    break q;
                }
            };
            for _ in 0..5 {
                let z = C64::from_polar(10f64.powf(rng.random_range(-2.0..2.0)), rng.random_range(0.0..std::f64::consts::TAU));
                let e = chordal_distance(f(q, antipode(z)), antipode(f(q, z)));
                t.check(e < 1e-12, || format!("equivariance q={q} z={z}: {e:.2e}"));
            }
            let (c0, ci) = critical_points(q).unwrap();
            for w in [c0, ci, antipode(q)] {
                let cross = (q.conj() * w).im / (q.norm() * w.norm());
                t.check(cross.abs() < 1e-10, || format!("collinearity q={q}: {cross:.2e}"));
            }
            for cp in [c0, ci] {
                let scale = (df(q, cp * 1.001).norm() + df(q, cp * 0.999).norm()).max(1e-300);
                let r = df(q, cp).norm() / scale;
                t.check(r < 1e-9, || format!("f'(critical) q={q}: {r:.2e}"));
            }
            let (fp, fm, (mp, mm)) = fixed_points(q);
            for (z, m) in [(fp, mp), (fm, mm)] {
                let e = chordal_distance(f(q, z), z);
                t.check(e < 1e-10, || format!("fixed point q={q}: {e:.2e}"));
                t.check(m.norm() > 1.0, || format!("multiplier q={q}: {}", m.norm()));
            }
        }
        let (c0, ci) = critical_points(C64::new(3f64.sqrt(), 0.0)).unwrap();
        t.check((c0 - 1.0).norm() < 1e-12 && (ci + 1.0).norm() < 1e-12, || format!("critical_points(sqrt 3) = {c0}, {ci}"));
        t.finish("1000 random q with |q| <= 10")
    })
}

/// Böttcher functional equation and the doubly visible set measured on a
/// Julia set.
pub fn criterion_7() -> CheckResult {
    timed(7, "Böttcher coordinate and doubly visible landing points", 60, || {
        let mut t = Tally::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let q = C64::from_polar(rng.random_range(0.5..5.0), rng.random_range(0.0..std::f64::consts::TAU));
            let z = C64::from_polar(rng.random_range(0.0..0.01) / q.norm(), rng.random_range(0.0..std::f64::consts::TAU));
            match (boettcher(q, z), boettcher(q, f(q, z))) {
                (Ok(b), Ok(b2)) => {
                    let r = (b2 - b * b).norm() / b.norm_sqr().max(1e-300);
                    worst = worst.max(r);
                }
                _ => t.check(false, || format!("boettcher refused q={q} z={z}")),
            }
        }
        t.check(worst < 1e-10, || format!("functional equation residual {worst:.2e}"));
        let want: Vec<Angle> = [2, 5, 6, 15, 18, 19].iter().map(|&n| a(n, 26)).collect();
        match measure_doubly_visible(&a(2, 7), 0.5, 4, 24) {
            Ok(m) => {
                let ok = m.coordinates.len() == want.len()
                    && m.coordinates.iter().zip(&want).all(|(x, y)| (x.to_f64() - y.to_f64()).abs() < 1e-4);
                let shown: Vec<String> = m.coordinates.iter().map(|x| x.to_string()).collect();
                t.check(ok, || format!("measured coordinates {shown:?}"));
                t.check(m.rotation_number == Some(a(1, 3)), || {
                    format!("measured rotation number {:?}", m.rotation_number.map(|x| x.to_string()))
                });
            }
            Err(e) => t.check(false, || format!("measurement failed: {e}")),
        }
        t.finish(&format!("residual {worst:.1e}, coordinates and rotation 1/3 at Θ = 2/7"))
    })
}

/// The parameter ray of 2/7 reaching `|q^2| > 10^3` near direction 1/3.
pub fn criterion_8() -> CheckResult {
    timed(8, "fjord escape of the 2/7 parameter ray", 120, || {
        let mut opts = ParamRayOptions::new(default_schedule(0.999, 40));
        opts.extend_to = Some(1.01e3);
        opts.max_entry = 200;
        match parameter_ray(&a(2, 7), &opts) {
            Ok(ray) => {
                let Some(far) = ray.points.iter().max_by(|x, y| x.q2.norm().total_cmp(&y.q2.norm())) else {
                    return (false, "empty ray".into());
                };
                let dir = (far.q2.arg() / std::f64::consts::TAU).rem_euclid(1.0);
                let ok = far.q2.norm() > 1e3 && (dir - 1.0 / 3.0).abs() < 0.02;
                (
                    ok,
                    format!(
                        "reached |q^2| = {:.2} at direction {dir:.4} (status {:?}: {})",
                        far.q2.norm(),
                        ray.status,
                        ray.message
                    ),
                )
            }
            Err(e) => (false, format!("ray failed: {e}")),
        }
    })
}

/// Parameter-plane symmetry and time, Herman band, determinism.
pub fn criterion_9() -> CheckResult {
    timed(9, "renders", 60, || {
        let mut t = Tally::default();
        let mut spec = ImageSpec::square(512, C64::new(0.0, 0.0), 4.0);
        spec.threads = Some(8);
        let t0 = Instant::now();
        let img = match render_param(ParamPlane::Q, Coloring::ComponentType, &spec) {
            Ok(i) => i,
            Err(e) => return (false, format!("render failed: {e}")),
        };
        let secs = t0.elapsed().as_secs_f64();
        t.check(secs < 60.0, || format!("q-plane render took {secs:.1}s"));
        let mism = rotation_mismatches(&img);
        t.check(mism == 0, || format!("{mism} pixels break the 180 degree symmetry"));
        let again = render_param(ParamPlane::Q, Coloring::ComponentType, &spec).unwrap();
        let pal = Palette::default();
        t.check(img.ppm_bytes(&pal) == again.ppm_bytes(&pal), || "q-plane bytes differ between runs".into());
        let mut js = ImageSpec::square(256, C64::new(0.0, 0.0), 3.0);
        js.threads = Some(8);
        let j1 = render_julia(C64::new(1.0, -6.0), &js).unwrap();
        let j2 = render_julia(C64::new(1.0, -6.0), &js).unwrap();
        t.check(undecided_band_separates(&j1), || "no separating undecided band at q = 1-6i".into());
        t.check(j1.ppm_bytes(&pal) == j2.ppm_bytes(&pal), || "Julia bytes differ between runs".into());
        t.finish(&format!("512x512 q-plane in {secs:.1}s"))
    })
}

pub fn all() -> Vec<CheckResult> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_of_two_small() {
        assert_eq!(order_of_two(7), 3);
        assert_eq!(order_of_two(1), 1);
        assert_eq!(order_of_two(1023), 10);
    }

    #[test]
    fn rotation_orbits_of_doubling() {
        // One orbit per rotation number p/n.
        let n: usize = rotation_orbits(2, 5).len();
        assert_eq!(n, 1 + 1 + 2 + 2 + 4);
    }
}
