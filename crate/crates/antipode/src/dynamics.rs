//! Double-precision numerics for `f_q(z) = z^2 (q - z) / (1 + conj(q) z)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::circle::Angle;
use crate::error::{Error, Result};

pub type C64 = Complex64;

/// A point of the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Ext {
    Finite(C64),
    Infinity,
}

impl Ext {
    pub fn finite(self) -> Option<C64> {
        match self {
            Ext::Finite(z) => Some(z),
            Ext::Infinity => None,
        }
    }
}

/// The antipodal map `z -> -1/conj(z)`.
pub fn antipode(z: C64) -> C64 {
    -C64::new(1.0, 0.0) / z.conj()
}

pub fn antipode_ext(z: Ext) -> Ext {
    match z {
        Ext::Infinity => Ext::Finite(C64::new(0.0, 0.0)),
        Ext::Finite(w) if w == C64::new(0.0, 0.0) => Ext::Infinity,
        Ext::Finite(w) => Ext::Finite(antipode(w)),
    }
}

/// Chordal distance on the sphere of diameter 2.
pub fn chordal_distance(a: C64, b: C64) -> f64 {
    if !a.is_finite() || !b.is_finite() {
        return match (a.is_finite(), b.is_finite()) {
            (false, false) => 0.0,
            (true, false) => 2.0 / (1.0 + a.norm_sqr()).sqrt(),
            _ => 2.0 / (1.0 + b.norm_sqr()).sqrt(),
        };
    }
    2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
}

/// `f_q(z)` in the finite chart.
#[inline]
pub fn f(q: C64, z: C64) -> C64 {
    z * z * (q - z) / (1.0 + q.conj() * z)
}

/// `f_q` in the chart `w = 1/z` at infinity: `w^2 (w + conj q) / (q w - 1)`.
#[inline]
pub fn f_at_infinity(q: C64, w: C64) -> C64 {
    w * w * (w + q.conj()) / (q * w - 1.0)
}

/// `f_q'(z) = z (2q + (a - 3) z - 2 conj(q) z^2) / (1 + conj(q) z)^2`.
#[inline]
pub fn df(q: C64, z: C64) -> C64 {
    let a = q.norm_sqr();
    let d = 1.0 + q.conj() * z;
    z * (2.0 * q + (a - 3.0) * z - 2.0 * q.conj() * z * z) / (d * d)
}

/// `f_q` on the sphere, switching to the chart at infinity for large `|z|`
/// and near the pole `-1/conj(q)`.
pub fn f_eval(q: C64, z: Ext) -> Ext {
    let big = 2.0 * q.norm().max(1.0);
    let w = match z {
        Ext::Infinity => return Ext::Infinity,
        Ext::Finite(z) if z.norm() > big => f_at_infinity(q, 1.0 / z),
        Ext::Finite(z) => {
            let den = 1.0 + q.conj() * z;
            let num = z * z * (q - z);
            if den.norm() > 1e-8 * num.norm().max(1e-300) {
                return Ext::Finite(num / den);
            }
            den / num
        }
    };
    if w == C64::new(0.0, 0.0) {
        Ext::Infinity
    } else {
        Ext::Finite(1.0 / w)
    }
}

/// Derived data of a parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MapParam {
    pub q: C64,
    pub a: f64,
    pub c0: C64,
    pub cinf: C64,
    pub fix_plus: C64,
    pub fix_minus: C64,
}

impl MapParam {
    pub fn new(q: C64) -> Result<MapParam> {
        let (c0, cinf) = critical_points(q)?;
        let (fix_plus, fix_minus, _) = fixed_points(q);
        Ok(MapParam { q, a: q.norm_sqr(), c0, cinf, fix_plus, fix_minus })
    }
}

/// The free critical points `(c0, cinf)`.
pub fn critical_points(q: C64) -> Result<(C64, C64)> {
    let a = q.norm_sqr();
    if a == 0.0 {
        return Err(Error::Precondition("q = 0 has no free critical points".into()));
    }
    let sp = (9.0 + 10.0 * a + a * a).sqrt();
    // (a - 3 + sqrt P) / (4a), rewritten to avoid cancellation for small a.
    let l0 = (1.0 + (10.0 + a) / (sp + 3.0)) / 4.0;
    let linf = (a - 3.0 - sp) / (4.0 * a);
    Ok((l0 * q, linf * q))
}

/// The free fixed points `i (y ± sqrt(y^2 + 1))`, `y = Im q`, and their
/// multipliers.
pub fn fixed_points(q: C64) -> (C64, C64, (C64, C64)) {
    let y = q.im;
    let s = y.hypot(1.0);
    // y - s = -1/(y + s) avoids cancellation.
    let (up, down) = if y >= 0.0 { (y + s, -1.0 / (y + s)) } else { (1.0 / (s - y), y - s) };
    let fp = C64::new(0.0, up);
    let fm = C64::new(0.0, down);
    (fp, fm, (df(q, fp), df(q, fm)))
}

/// Outcome of following one orbit.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum OrbitKind {
    ToZero,
    ToInfinity,
    AttractingCycle { period: usize, self_antipodal: bool, multiplier: f64, points: Vec<C64> },
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitClass {
    #[serde(flatten)]
    pub kind: OrbitKind,
    pub iterations_used: usize,
}

/// Radius below which `f_q` contracts by at least 3 toward 0.
pub fn trap_radius(q: C64, eps: f64) -> f64 {
    eps.min(1.0 / (4.0 * (1.0 + q.norm())))
}

/// Longest cycle the detector looks for.
pub const MAX_PERIOD: usize = 512;

/// Follows `z0` for at most `budget` steps.
pub fn classify_orbit(q: C64, z0: C64, budget: usize, eps: f64) -> OrbitClass {
    let r0 = trap_radius(q, eps);
    let (r0sq, rinfsq) = (r0 * r0, 1.0 / (r0 * r0));
    let mut z = z0;
    let settle = budget.saturating_sub(MAX_PERIOD + 1).max(budget / 2);
    for n in 0..budget {
        let m = z.norm_sqr();
        if m < r0sq {
            return OrbitClass { kind: OrbitKind::ToZero, iterations_used: n };
        }
        if m > rinfsq || !m.is_finite() {
            return OrbitClass { kind: OrbitKind::ToInfinity, iterations_used: n };
        }
        if n == settle {
            if let Some(kind) = detect_cycle(q, z, budget - n) {
                return OrbitClass { kind, iterations_used: budget };
            }
        }
        z = f(q, z);
    }
    OrbitClass { kind: OrbitKind::Undecided, iterations_used: budget }
}

/// Looks for an attracting cycle through the orbit of `z`.
fn detect_cycle(q: C64, z: C64, steps: usize) -> Option<OrbitKind> {
    let mut w = z;
    let limit = steps.min(MAX_PERIOD);
    for p in 1..=limit {
        w = f(q, w);
        if chordal_distance(w, z) < 1e-7 {
            return refine_cycle(q, z, p);
        }
    }
    None
}

/// Newton on `f^p(z) - z`, then the multiplier test.
pub fn refine_cycle(q: C64, z: C64, p: usize) -> Option<OrbitKind> {
    let mut z = z;
    for _ in 0..20 {
        let (w, dw) = iterate_with_derivative(q, z, p);
        let step = (w - z) / (dw - 1.0);
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() < 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    let (w, mult) = iterate_with_derivative(q, z, p);
    if chordal_distance(w, z) > 1e-9 || mult.norm() >= 1.0 {
        return None;
    }
    // Minimal period.
    let mut pts = vec![z];
    let mut y = f(q, z);
    while pts.len() < p && chordal_distance(y, z) > 1e-9 {
        pts.push(y);
        y = f(q, y);
    }
    let period = pts.len();
    let self_antipodal = pts.iter().all(|&u| {
        let a = antipode(u);
        pts.iter().any(|&v| chordal_distance(a, v) < 1e-6)
    });
    let mult = if period < p { iterate_with_derivative(q, z, period).1 } else { mult };
    Some(OrbitKind::AttractingCycle { period, self_antipodal, multiplier: mult.norm(), points: pts })
}

/// `(f^n(z), (f^n)'(z))`.
pub fn iterate_with_derivative(q: C64, z: C64, n: usize) -> (C64, C64) {
    let mut z = z;
    let mut d = C64::new(1.0, 0.0);
    for _ in 0..n {
        d *= df(q, z);
        z = f(q, z);
    }
    (z, d)
}

/// Parameter types of the hyperbolic-component taxonomy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ParamClass {
    Central,
    MandelbrotType,
    TricornType,
    CaptureZero,
    CaptureInfinity,
    HermanCandidate,
}

impl ParamClass {
    pub fn label(self) -> &'static str {
        match self {
            ParamClass::Central => "central",
            ParamClass::MandelbrotType => "mandelbrot",
            ParamClass::TricornType => "tricorn",
            ParamClass::CaptureZero => "capture_zero",
            ParamClass::CaptureInfinity => "capture_infinity",
            ParamClass::HermanCandidate => "herman_candidate",
        }
    }
}

/// Points sampled on the segment `[0, c0]` for the immediate-basin test.
const SEGMENT_SAMPLES: usize = 12;

/// Classifies `q` from the orbit of `c0`; the orbit of `cinf` is its
/// antipodal image.
pub fn classify_parameter(q: C64, budget: usize, eps: f64) -> Result<(ParamClass, OrbitClass)> {
    let (c0, _) = critical_points(q)?;
    let oc = classify_orbit(q, c0, budget, eps);
    let class = match &oc.kind {
        OrbitKind::ToZero => {
            // The segment from 0 to c0 must lie in the basin of 0.
            let immediate = (1..SEGMENT_SAMPLES).all(|k| {
                let z = c0 * (k as f64 / SEGMENT_SAMPLES as f64);
                classify_orbit(q, z, budget, eps).kind == OrbitKind::ToZero
            });
            if immediate {
                ParamClass::Central
            } else {
                ParamClass::CaptureZero
            }
        }
        OrbitKind::ToInfinity => ParamClass::CaptureInfinity,
        OrbitKind::AttractingCycle { self_antipodal: true, .. } => ParamClass::TricornType,
        OrbitKind::AttractingCycle { .. } => ParamClass::MandelbrotType,
        OrbitKind::Undecided => ParamClass::HermanCandidate,
    };
    Ok((class, oc))
}

/// Combinatorial rotation number of a cycle around 0: points sorted by
/// argument advance by `k` places per step, giving `k / period`.
pub fn cycle_rotation_number(q: C64, cycle: &[C64]) -> Result<Angle> {
    let n = cycle.len();
    if n == 0 {
        return Err(Error::Precondition("empty cycle".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let arg = |z: C64| z.arg().rem_euclid(TAU);
    order.sort_by(|&i, &j| arg(cycle[i]).total_cmp(&arg(cycle[j])));
    let mut rank = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut shift = None;
    for i in 0..n {
        let img = f(q, cycle[i]);
        let j = (0..n)
            .min_by(|&a, &b| chordal_distance(cycle[a], img).total_cmp(&chordal_distance(cycle[b], img)))
            .unwrap();
        if chordal_distance(cycle[j], img) > 1e-6 {
            return Err(Error::Precondition("points do not form a cycle".into()));
        }
        let s = (rank[j] + n - rank[i]) % n;
        match shift {
            None => shift = Some(s),
            Some(s0) if s0 != s => {
                return Err(Error::Precondition("cycle does not rotate rigidly around 0".into()));
            }
            _ => {}
        }
    }
    Ok(Angle::frac(shift.unwrap() as i64, n as i64))
}

/// Average argument advance around 0 along a bounded orbit, in `[0, 1)`.
pub fn mean_rotation(q: C64, z0: C64, steps: usize) -> Option<f64> {
    let mut z = z0;
    let mut total = 0.0;
    for _ in 0..steps {
        let w = f(q, z);
        if !w.is_finite() || w.norm() < 1e-12 {
            return None;
        }
        total += (w / z).arg();
        z = w;
    }
    Some((total / (TAU * steps as f64)).rem_euclid(1.0))
}

/// Sup of the chordal distance between `f_q(z)` and `e^{2πit} z`,
/// `t = arg(q^2)/2π`, over a polar grid of the annulus `eps <= |z| <= 1/eps`.
pub fn large_q_rotation_check(q: C64, eps: f64, radial: usize, angular: usize) -> f64 {
    let t = (q * q).arg() / TAU;
    let rot = C64::from_polar(1.0, TAU * t);
    let mut sup: f64 = 0.0;
    for i in 0..radial {
        let s = i as f64 / (radial - 1).max(1) as f64;
        let r = eps.powf(1.0 - 2.0 * s);
        for j in 0..angular {
            let z = C64::from_polar(r, TAU * j as f64 / angular as f64);
            sup = sup.max(chordal_distance(f(q, z), rot * z));
        }
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn evaluation_examples() {
        let q = c(0.7, -1.3);
        assert_eq!(f_eval(q, Ext::Finite(c(0.0, 0.0))), Ext::Finite(c(0.0, 0.0)));
        assert_eq!(f_eval(q, Ext::Finite(q)), Ext::Finite(c(0.0, 0.0)));
        assert_eq!(f_eval(c(1.0, 0.0), Ext::Finite(c(1.0, 0.0))), Ext::Finite(c(0.0, 0.0)));
        assert_eq!(f_eval(q, Ext::Infinity), Ext::Infinity);
        assert_eq!(f_eval(q, Ext::Finite(antipode(q))), Ext::Infinity);
        let z = c(1e9, 3e8);
        let w = f_eval(q, Ext::Finite(z)).finite().unwrap();
        assert!(chordal_distance(w, f(q, z)) < 1e-12);
    }

    #[test]
    fn critical_points_of_sqrt3() {
        let (c0, ci) = critical_points(c(3f64.sqrt(), 0.0)).unwrap();
        assert!((c0 - c(1.0, 0.0)).norm() < 1e-12);
        assert!((ci - c(-1.0, 0.0)).norm() < 1e-12);
        assert!(critical_points(c(0.0, 0.0)).is_err());
        let (c0, ci) = critical_points(c(1e-6, 0.0)).unwrap();
        assert!(c0.norm() < 1e-5 && ci.norm() > 1e5);
    }

    #[test]
    fn fixed_point_examples() {
        let (p, m, _) = fixed_points(c(2.0, 0.0));
        assert!((p - c(0.0, 1.0)).norm() < 1e-15 && (m - c(0.0, -1.0)).norm() < 1e-15);
        let (p, m, (mp, mm)) = fixed_points(c(0.5, 1.0));
        assert!((p.im - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((m.im - (1.0 - 2f64.sqrt())).abs() < 1e-12);
        assert!(mp.norm() > 1.0 && mm.norm() > 1.0);
    }

    #[test]
    fn small_q_is_central() {
        let q = c(0.1, 0.0);
        let (c0, _) = critical_points(q).unwrap();
        assert_eq!(classify_orbit(q, c0, 500, 1e-3).kind, OrbitKind::ToZero);
        assert_eq!(classify_parameter(q, 500, 1e-3).unwrap().0, ParamClass::Central);
    }

    #[test]
    fn rotation_of_fixed_point_cycle() {
        let q = c(0.3, 0.2);
        let (p, _, _) = fixed_points(q);
        assert_eq!(cycle_rotation_number(q, &[p]).unwrap(), Angle::zero());
    }

    #[test]
    fn large_q_approaches_rotation() {
        let d4 = large_q_rotation_check(c(100.0, 0.0), 0.1, 41, 256);
        let d6 = large_q_rotation_check(c(1000.0, 0.0), 0.1, 41, 256);
        assert!(d4 < 0.1 && d6 < 0.01 && d6 < d4, "{d4} {d6}");
    }
}
