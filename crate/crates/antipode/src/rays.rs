//! Böttcher coordinates in the basin of zero, internal and external rays
//! with their landing points, the parameter map `Φ(q^2) = β_q(c0)` of the
//! central component and its parameter rays.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::circle::{from_digits, orbit, Angle};
use crate::dynamics::{antipode, chordal_distance, critical_points, f, iterate_with_derivative, C64};
use crate::error::{Error, Result};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `|z||q| <= 1/4` and `|z| <= |q|/4`: here `f_q(z) = q z^2 F(z)` with
/// `F` close to 1, and the principal branch of `F^(1/2^n)` is the right one.
pub fn in_local_regime(q: C64, z: C64) -> bool {
    let (aq, az) = (q.norm(), z.norm());
    az * aq <= 0.25 && az <= 0.25 * aq
}

#[inline]
fn factor(q: C64, z: C64) -> C64 {
    (1.0 - z / q) / (1.0 + q.conj() * z)
}

/// `log(β(z) / (q z)) = Σ Log F(z_n) / 2^(n+1)` in the local regime.
fn local_log(q: C64, z: C64) -> C64 {
    let mut s = c(0.0, 0.0);
    let mut w = 0.5;
    let mut z = z;
    for _ in 0..80 {
        if z.norm() == 0.0 {
            break;
        }
        let t = factor(q, z).ln() * w;
        s += t;
        if t.norm() < 1e-20 {
            break;
        }
        z = f(q, z);
        w *= 0.5;
    }
    s
}

/// Böttcher coordinate `β_q(z)`, normalised by `β(z)/(q z) -> 1`.
pub fn boettcher(q: C64, z: C64) -> Result<C64> {
    if q.norm() == 0.0 {
        return Err(Error::Precondition("q = 0".into()));
    }
    if !in_local_regime(q, z) {
        return Err(Error::OutsideRegime(format!("z = {z} is outside the local disk; pull back first")));
    }
    Ok(q * z * local_log(q, z).exp())
}

/// Solves `β_q(z) = w` inside the local disk by Newton's method.
pub fn boettcher_inverse(q: C64, w: C64, guess: Option<C64>) -> Result<C64> {
    let mut z = guess.unwrap_or(w / q);
    for _ in 0..60 {
        let b = q * z * local_log(q, z).exp();
        let r = (b / w).ln();
        if r.norm() < 1e-15 {
            break;
        }
        let h = 1e-7 * z.norm();
        let dl = (local_log(q, z + h) - local_log(q, z)) / h;
        let step = r / (1.0 / z + dl);
        if !step.is_finite() {
            return Err(Error::Numerical("inverse Böttcher step is not finite".into()));
        }
        z -= step;
    }
    if !in_local_regime(q, z) {
        return Err(Error::OutsideRegime(format!("|w| = {} is too large for the local disk", w.norm())));
    }
    Ok(z)
}

/// Critical-orbit index after which the branch bookkeeping runs out of
/// double precision.
pub const HORIZON: usize = 50;

/// `log Φ` together with the continuously tracked arguments of its factors.
#[derive(Clone, Debug)]
pub struct PhiEval {
    pub log_phi: C64,
    /// `arg(q c0)` followed by `arg F(z_n)` for `n` below the entry index.
    pub args: Vec<f64>,
    /// First `n` with the critical orbit in the local disk.
    pub entry: usize,
}

impl PhiEval {
    pub fn phi(&self) -> C64 {
        self.log_phi.exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PhiFailure {
    Degenerate,
    Escapes,
    Horizon(usize),
}

fn phi_eval(q: C64, reference: Option<&[f64]>, max_entry: usize) -> std::result::Result<PhiEval, PhiFailure> {
    let (c0, _) = critical_points(q).map_err(|_| PhiFailure::Degenerate)?;
    let unwrap = |i: usize, a: f64| match reference.and_then(|r| r.get(i)) {
        Some(&r) => a + TAU * ((r - a) / TAU).round(),
        None => a,
    };
    let big = 4.0 * (1.0 + q.norm());
    let qc = q * c0;
    let mut args = vec![unwrap(0, qc.arg())];
    let mut re = qc.norm().ln();
    let mut im = args[0];
    let mut z = c0;
    let mut w = 0.5;
    let mut n = 0;
    let local = loop {
        if in_local_regime(q, z) {
            break local_log(q, z) * (2.0 * w);
        }
        if n >= max_entry {
            return Err(PhiFailure::Horizon(n));
        }
        if !z.is_finite() || z.norm() > big {
            return Err(PhiFailure::Escapes);
        }
        let fz = factor(q, z);
        let a = unwrap(n + 1, fz.arg());
        args.push(a);
        re += fz.norm().ln() * w;
        im += a * w;
        z = f(q, z);
        w *= 0.5;
        n += 1;
    };
    Ok(PhiEval { log_phi: c(re, im) + local, args, entry: n })
}

struct PhiTracker {
    args: Vec<f64>,
    max_entry: usize,
}

impl PhiTracker {
    fn eval(&self, q: C64) -> std::result::Result<PhiEval, PhiFailure> {
        phi_eval(q, Some(&self.args), self.max_entry)
    }

    /// Every tracked factor moved by less than half a radian.
    fn consistent(&self, e: &PhiEval) -> bool {
        e.args.iter().zip(&self.args).all(|(a, r)| (a - r).abs() < 0.5)
    }

    fn commit(&mut self, e: &PhiEval) {
        self.args = e.args.clone();
    }
}

/// `Φ(q^2) = β_q(c0(q))`, with branches continued along the radial path
/// from 0 to `q`. Refuses when that path leaves the central component.
pub fn param_map(q: C64) -> Result<C64> {
    Ok(param_map_eval(q)?.phi())
}

pub fn param_map_eval(q: C64) -> Result<PhiEval> {
    if q.norm() == 0.0 {
        return Ok(PhiEval { log_phi: c(f64::NEG_INFINITY, 0.0), args: vec![], entry: 0 });
    }
    let fail = |e: PhiFailure, t: f64| match e {
        PhiFailure::Escapes => Error::OutsideRegime(format!("critical orbit escapes at {}", q * t)),
        PhiFailure::Horizon(n) => Error::Numerical(format!("critical orbit needs {n} steps to reach the local disk")),
        PhiFailure::Degenerate => Error::Precondition("q = 0".into()),
    };
    let mut t = (0.05 / q.norm()).min(1.0);
    let first = phi_eval(q * t, None, HORIZON).map_err(|e| fail(e, t))?;
    let mut tr = PhiTracker { args: first.args.clone(), max_entry: HORIZON };
    let mut last = first;
    let mut dt = 0.05;
    while t < 1.0 {
        let t1 = (t + dt).min(1.0);
        match tr.eval(q * t1) {
            Ok(e) if tr.consistent(&e) => {
                tr.commit(&e);
                last = e;
                t = t1;
                dt = (dt * 1.5).min(0.25);
            }
            Ok(_) => {
                dt *= 0.5;
                if dt < 1e-9 {
                    return Err(Error::Numerical("branch tracking stalled".into()));
                }
            }
            Err(e) => return Err(fail(e, t1)),
        }
    }
    Ok(last)
}

/// One traced point of a parameter ray.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ParamRayPoint {
    pub q: C64,
    pub q2: C64,
    pub phi: C64,
    pub entry: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RayStatus {
    /// Every radius of the schedule was solved.
    Complete,
    /// The extension reached the requested `|q^2|`.
    ReachedTarget,
    /// The critical orbit needs more than [`HORIZON`] steps to reach the
    /// local disk, so the argument of `Φ` is no longer resolved.
    Horizon,
    /// The corrector failed with the smallest allowed step.
    Stuck,
    StepCap,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamRay {
    pub theta: Angle,
    pub points: Vec<ParamRayPoint>,
    pub status: RayStatus,
    pub message: String,
}

impl ParamRay {
    pub fn last(&self) -> Option<&ParamRayPoint> {
        self.points.last()
    }
}

#[derive(Clone, Debug)]
pub struct ParamRayOptions {
    pub r_schedule: Vec<f64>,
    /// Continue along `arg Φ = 2πΘ` until `|q^2|` exceeds this.
    pub extend_to: Option<f64>,
    pub max_steps: usize,
    pub max_entry: usize,
}

impl ParamRayOptions {
    pub fn new(r_schedule: Vec<f64>) -> ParamRayOptions {
        ParamRayOptions { r_schedule, extend_to: None, max_steps: 200_000, max_entry: HORIZON }
    }
}

/// Radii from 0.05 to `rmax`, evenly spaced in `log(1 - r)`.
pub fn default_schedule(rmax: f64, n: usize) -> Vec<f64> {
    let (a, b) = ((0.95f64).ln(), (1.0 - rmax).ln());
    (0..n).map(|k| 1.0 - (a + (b - a) * k as f64 / (n - 1).max(1) as f64).exp()).collect()
}

fn solve_2x2(jx: C64, jy: C64, r: C64) -> Option<C64> {
    let det = jx.re * jy.im - jy.re * jx.im;
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let dx = (-r.re * jy.im + jy.re * r.im) / det;
    let dy = (-jx.re * r.im + jx.im * r.re) / det;
    Some(c(dx, dy))
}

/// Newton for `log Φ(q) = target`, starting at `q0`.
fn solve_level(tr: &PhiTracker, q0: C64, target: C64) -> Option<(C64, PhiEval)> {
    let g = |q: C64| -> Option<(C64, PhiEval)> {
        let e = tr.eval(q).ok()?;
        tr.consistent(&e).then(|| (e.log_phi - target, e))
    };
    let mut q = q0;
    let (mut r, mut e) = g(q)?;
    for _ in 0..50 {
        if r.norm() < 1e-11 {
            return Some((q, e));
        }
        let h = 1e-7 * q.norm().max(1e-3);
        let (rx, _) = g(q + h)?;
        let (ry, _) = g(q + c(0.0, h))?;
        let step = solve_2x2((rx - r) / h, (ry - r) / h, r)?;
        let mut lam = 1.0;
        loop {
            match g(q + step * lam) {
                Some((rn, en)) if rn.norm() < r.norm() => {
                    q += step * lam;
                    r = rn;
                    e = en;
                    break;
                }
                _ => {
                    lam *= 0.5;
                    if lam < 1e-6 {
                        return (r.norm() < 1e-9).then_some((q, e));
                    }
                }
            }
        }
    }
    (r.norm() < 1e-9).then_some((q, e))
}

/// Traces `{Φ = r e^{2πiΘ}}` over the radii of the schedule, then
/// optionally continues along the level set `arg Φ = 2πΘ`.
pub fn parameter_ray(theta_c: &Angle, opts: &ParamRayOptions) -> Result<ParamRay> {
    let mut sched = opts.r_schedule.clone();
    sched.retain(|r| *r > 0.0 && *r < 1.0);
    sched.sort_by(f64::total_cmp);
    if sched.is_empty() {
        return Err(Error::Precondition("empty radius schedule".into()));
    }
    let th = theta_c.to_f64();
    let r0 = sched[0];
    let guess = (C64::from_polar(r0 * 1.5 * 3f64.sqrt(), TAU * th)).sqrt();
    let first = phi_eval(guess, None, opts.max_entry)
        .map_err(|_| Error::Numerical("start of the ray is not in the central component".into()))?;
    let k = ((first.log_phi.im - TAU * th) / TAU).round();
    let arg_target = TAU * (th + k);
    let mut tr = PhiTracker { args: first.args.clone(), max_entry: opts.max_entry };
    let mut points: Vec<ParamRayPoint> = Vec::new();
    let mut solved: Vec<(f64, C64)> = Vec::new();
    let push = |points: &mut Vec<ParamRayPoint>, q: C64, e: &PhiEval| {
        points.push(ParamRayPoint { q, q2: q * q, phi: e.phi(), entry: e.entry });
    };
    let mut pending: Vec<f64> = sched.iter().rev().cloned().collect();
    let mut guess_q = guess;
    while let Some(r) = pending.pop() {
        let pred = match solved.len() {
            0 => guess_q,
            1 => solved[0].1,
            n => {
                let (ra, qa) = solved[n - 2];
                let (rb, qb) = solved[n - 1];
                qb + (qb - qa) * ((r - rb) / (rb - ra))
            }
        };
        let target = c(r.ln(), arg_target);
        let sol = solve_level(&tr, pred, target).or_else(|| {
            solved.last().and_then(|&(_, qb)| solve_level(&tr, qb, target))
        });
        match sol {
            Some((q, e)) => {
                tr.commit(&e);
                push(&mut points, q, &e);
                solved.push((r, q));
                guess_q = q;
            }
            None => {
                let prev = solved.last().map(|s| s.0).unwrap_or(0.0);
                if r - prev < 1e-9 {
                    return Ok(ParamRay {
                        theta: theta_c.clone(),
                        points,
                        status: RayStatus::Stuck,
                        message: format!("corrector failed near r = {r}"),
                    });
                }
                pending.push(r);
                pending.push(0.5 * (r + prev.max(0.0)));
            }
        }
    }
    let mut ray = ParamRay { theta: theta_c.clone(), points, status: RayStatus::Complete, message: String::new() };
    if let Some(target_mod) = opts.extend_to {
        extend_ray(&mut ray, &mut tr, arg_target, target_mod, opts.max_steps);
    }
    Ok(ray)
}

/// Level-set continuation of `Im log Φ = arg_target`, oriented outward.
fn extend_ray(ray: &mut ParamRay, tr: &mut PhiTracker, arg_target: f64, target_mod: f64, max_steps: usize) {
    let n = ray.points.len();
    let mut q = ray.points[n - 1].q;
    let mut dir = if n >= 2 { q - ray.points[n - 2].q } else { q };
    dir /= dir.norm();
    let mut h = 1e-3 * q.norm().max(0.1);
    let mut grad_norm = 1.0;
    let hval = |tr: &PhiTracker, p: C64| -> std::result::Result<(f64, PhiEval), PhiFailure> {
        let e = tr.eval(p)?;
        Ok((e.log_phi.im - arg_target, e))
    };
    for step in 0..max_steps {
        if (q * q).norm() >= target_mod {
            ray.status = RayStatus::ReachedTarget;
            return;
        }
        let pred = q + dir * h;
        let mut p = pred;
        let mut outcome: Option<PhiEval> = None;
        let mut horizon = None;
        for _ in 0..30 {
            let (v, e) = match hval(tr, p) {
                Ok(x) => x,
                Err(PhiFailure::Horizon(m)) => {
                    horizon = Some(m);
                    break;
                }
                Err(_) => break,
            };
            if !tr.consistent(&e) {
                break;
            }
            if v.abs() < 1e-12 {
                outcome = Some(e);
                break;
            }
            let eps = 1e-7 * p.norm().max(1.0);
            let gx = match hval(tr, p + eps) {
                Ok((vx, _)) => (vx - v) / eps,
                Err(_) => break,
            };
            let gy = match hval(tr, p + c(0.0, eps)) {
                Ok((vy, _)) => (vy - v) / eps,
                Err(_) => break,
            };
            let g = c(gx, gy);
            if g.norm() == 0.0 || !g.norm().is_finite() {
                break;
            }
            grad_norm = g.norm();
            p -= g * (v / g.norm_sqr());
        }
        if let Some(m) = horizon {
            if h < 1e-9 * q.norm().max(1.0) || m > tr.max_entry {
                ray.status = RayStatus::Horizon;
                ray.message = format!(
                    "critical orbit needs {m} steps to reach the local disk at |q^2| = {:.3} after {step} steps",
                    (q * q).norm()
                );
                return;
            }
        }
        match outcome {
            Some(e) if (p - pred).norm() <= 0.5 * h => {
                let d = p - q;
                dir = d / d.norm();
                q = p;
                tr.commit(&e);
                ray.points.push(ParamRayPoint { q, q2: q * q, phi: e.phi(), entry: e.entry });
                h = (h * 1.3).min(0.05 * q.norm().max(1.0)).min(0.5 / grad_norm.max(1e-12));
            }
            _ => {
                h *= 0.5;
                if h < 1e-14 * q.norm().max(1.0) {
                    ray.status = RayStatus::Stuck;
                    ray.message = format!("continuation stalled at |q^2| = {:.3}", (q * q).norm());
                    return;
                }
            }
        }
    }
    ray.status = RayStatus::StepCap;
    ray.message = format!("step cap reached at |q^2| = {:.3}", (q * q).norm());
}

/// Which limit of the ray is traced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RaySide {
    Exact,
    Minus,
    Plus,
}

/// A traced ray: sample `k` has potential `|β| = ρ0^(2^-k)`.
#[derive(Clone, Debug, Serialize)]
pub struct RayTrace {
    pub theta: Angle,
    pub side: RaySide,
    pub points: Vec<C64>,
    pub potentials: Vec<f64>,
    pub landed: bool,
    pub landing_point: Option<C64>,
    pub bifurcated: bool,
}

impl RayTrace {
    /// Image under the antipodal map: the ray from infinity of the same angle.
    pub fn antipodal(&self) -> RayTrace {
        RayTrace {
            points: self.points.iter().map(|&z| antipode(z)).collect(),
            landing_point: self.landing_point.map(antipode),
            ..self.clone()
        }
    }
}

/// Angular offset of the one-sided limit rays.
pub const SIDE_OFFSET: f64 = 1.0 / 4294967296.0;

/// Closest relative approach to `c0` that flags a bifurcating ray.
const BIFURCATION_TOL: f64 = 1e-4;

fn base_potential(q: C64) -> f64 {
    0.125f64.min(q.norm_sqr() / 8.0)
}

fn pullback_newton(q: C64, z: C64, u: C64, k: usize) -> Option<C64> {
    let mut z = z;
    let mut res = f64::INFINITY;
    for _ in 0..30 {
        let (w, dw) = iterate_with_derivative(q, z, k);
        let r = (w / u).ln();
        if !r.is_finite() {
            return None;
        }
        res = r.norm();
        if res < 1e-13 {
            break;
        }
        let step = r * w / dw;
        if !step.is_finite() {
            return None;
        }
        z -= step;
        if step.norm() < 1e-16 * z.norm() {
            break;
        }
    }
    (res < 1e-8).then_some(z)
}

/// Smallest `|f^j(z) - c0| / |c0|` over `j < k`.
fn critical_approach(q: C64, z: C64, k: usize, c0: C64) -> f64 {
    let mut z = z;
    let mut best = f64::INFINITY;
    for _ in 0..k {
        best = best.min((z - c0).norm() / c0.norm());
        z = f(q, z);
    }
    best
}

/// No iterate moves more than half its distance to `c0`.
fn step_ok(q: C64, a: C64, b: C64, k: usize, c0: C64) -> bool {
    let (mut a, mut b) = (a, b);
    for _ in 0..k {
        if (b - a).norm() > 0.5 * (a - c0).norm() {
            return false;
        }
        a = f(q, a);
        b = f(q, b);
    }
    true
}

struct RawTrace {
    points: Vec<C64>,
    potentials: Vec<f64>,
    approach: f64,
}

fn trace(q: C64, theta: &Angle, delta: f64, depth: usize, stop_at_critical: bool) -> Result<RawTrace> {
    let (c0, _) = critical_points(q)?;
    let rho0 = base_potential(q);
    let mut a = theta.clone();
    let mut z = boettcher_inverse(q, C64::from_polar(rho0, TAU * (a.to_f64() + delta)), None)?;
    let mut out = RawTrace { points: vec![z], potentials: vec![rho0], approach: f64::INFINITY };
    for k in 1..=depth {
        let off = delta * 2f64.powi(k as i32);
        if off.abs() > 1.0 / 4096.0 {
            break;
        }
        a = a.mul_by(2);
        let alpha = TAU * (a.to_f64() + off);
        let mut u = iterate_with_derivative(q, z, k).0;
        let (mut tau, mut dt) = (0.0f64, 0.25f64);
        while tau < 1.0 {
            let t1 = (tau + dt).min(1.0);
            let u1 = boettcher_inverse(q, C64::from_polar(rho0.powf(2.0 - t1), alpha), Some(u))?;
            match pullback_newton(q, z, u1, k) {
                Some(z1) if step_ok(q, z, z1, k, c0) => {
                    z = z1;
                    u = u1;
                    tau = t1;
                    dt = (dt * 2.0).min(0.5);
                }
                _ => {
                    dt *= 0.5;
                    if dt < 1e-12 {
                        out.approach = out.approach.min(critical_approach(q, z, k, c0));
                        return Ok(out);
                    }
                }
            }
        }
        let ap = critical_approach(q, z, k, c0);
        out.approach = out.approach.min(ap);
        if stop_at_critical && ap < BIFURCATION_TOL {
            return Ok(out);
        }
        out.points.push(z);
        out.potentials.push(rho0.powf(2f64.powi(-(k as i32))));
    }
    Ok(out)
}

/// Newton on `f^p(z) = z`; returns a repelling solution.
pub fn land_periodic(q: C64, z: C64, p: usize) -> Option<C64> {
    let mut z = z;
    for _ in 0..80 {
        let (w, dw) = iterate_with_derivative(q, z, p);
        let step = (w - z) / (dw - 1.0);
        if !step.is_finite() {
            return None;
        }
        z -= step;
        if step.norm() < 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    let (w, dw) = iterate_with_derivative(q, z, p);
    ((w - z).norm() < 1e-9 * z.norm().max(1.0) && dw.norm() > 1.0).then_some(z)
}

/// Solves `f^k(z) = target` by Newton from `z`.
fn pull_back_to(q: C64, z: C64, target: C64, k: usize) -> Option<C64> {
    let mut z = z;
    for _ in 0..80 {
        let (w, dw) = iterate_with_derivative(q, z, k);
        let step = (w - target) / dw;
        if !step.is_finite() {
            return None;
        }
        z -= step;
        if step.norm() < 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    let w = iterate_with_derivative(q, z, k).0;
    ((w - target).norm() < 1e-9 * target.norm().max(1.0)).then_some(z)
}

fn land(q: C64, theta: &Angle, pts: &[C64]) -> Option<C64> {
    let o = orbit(theta, 2);
    let (r, p) = (o.preperiod.len(), o.cycle.len());
    let last = *pts.last()?;
    let from = iterate_with_derivative(q, last, r).0;
    let l = land_periodic(q, from, p)?;
    let l = if r == 0 { l } else { pull_back_to(q, last, l, r)? };
    // The landing point must sit near the end of the trace.
    let near = pts.len() < 2 || chordal_distance(l, last) < 0.05;
    near.then_some(l)
}

fn finish(q: C64, theta: &Angle, side: RaySide, raw: RawTrace, bifurcated: bool) -> RayTrace {
    let landing_point = if side == RaySide::Exact && bifurcated { None } else { land(q, theta, &raw.points) };
    RayTrace {
        theta: theta.clone(),
        side,
        points: raw.points,
        potentials: raw.potentials,
        landed: landing_point.is_some(),
        landing_point,
        bifurcated,
    }
}

/// Internal ray of angle `θ` in the basin of zero. If the ray runs into
/// the critical point (or a precritical point) the trace stops there,
/// `bifurcated` is set and no landing point is reported.
pub fn internal_ray(q: C64, theta: &Angle, depth: usize) -> Result<RayTrace> {
    let raw = trace(q, theta, 0.0, depth, true)?;
    let bif = raw.approach < BIFURCATION_TOL;
    Ok(finish(q, theta, RaySide::Exact, raw, bif))
}

/// One-sided limit `θ^±` of internal rays, traced at angle `θ ± δ` while
/// the doubled offset stays small.
pub fn internal_ray_side(q: C64, theta: &Angle, side: RaySide, depth: usize) -> Result<RayTrace> {
    let delta = match side {
        RaySide::Exact => return internal_ray(q, theta, depth),
        RaySide::Minus => -SIDE_OFFSET,
        RaySide::Plus => SIDE_OFFSET,
    };
    let raw = trace(q, theta, delta, depth, false)?;
    let bif = raw.approach < 1e-3;
    Ok(finish(q, theta, side, raw, bif))
}

/// External ray of angle `θ`: the antipodal image of the internal ray.
pub fn external_ray(q: C64, theta: &Angle, depth: usize) -> Result<RayTrace> {
    Ok(internal_ray(q, theta, depth)?.antipodal())
}

/// Landing points of the internal ray `θ`: one point, or one per side
/// when the ray bifurcates.
pub fn landing_points(q: C64, theta: &Angle, depth: usize) -> Result<Vec<(RaySide, C64)>> {
    let exact = internal_ray(q, theta, depth)?;
    if !exact.bifurcated {
        return Ok(exact.landing_point.map(|l| vec![(RaySide::Exact, l)]).unwrap_or_default());
    }
    let mut out = Vec::new();
    for side in [RaySide::Minus, RaySide::Plus] {
        if let Some(l) = internal_ray_side(q, theta, side, depth)?.landing_point {
            out.push((side, l));
        }
    }
    Ok(out)
}

/// Internal ray, external ray and their common landing point.
#[derive(Clone, Debug, Serialize)]
pub struct Meridian {
    pub internal_angle: Angle,
    pub external_angle: Angle,
    pub point: C64,
}

/// Whether the internal ray `θ_i` and the external ray `θ_e` land at a
/// common point (within `1e-6`).
pub fn doubly_visible_check(q: C64, internal: &Angle, external: &Angle, depth: usize) -> Result<Option<Meridian>> {
    let li = landing_points(q, internal, depth)?;
    let le: Vec<C64> = landing_points(q, external, depth)?.into_iter().map(|(_, z)| antipode(z)).collect();
    for (_, a) in &li {
        for b in &le {
            if (a - b).norm() < 1e-6 {
                return Ok(Some(Meridian {
                    internal_angle: internal.clone(),
                    external_angle: external.clone(),
                    point: (a + b) / 2.0,
                }));
            }
        }
    }
    Ok(None)
}

/// Number of samples of the conjugacy `η_q : R/Z -> J(f_q)`.
pub const ETA_GRID: usize = 2187;

/// Samples `η_q(j / 3^7)` of the conjugacy between tripling and `f_q` on
/// the Julia curve, continued from `q = 0` where `η(x) = e^{2πi(x - 1/4)}`.
#[derive(Clone, Debug)]
pub struct JuliaCurve {
    pub q: C64,
    pub samples: Vec<C64>,
}

/// Roots of `z^3 - q z^2 + w conj(q) z + w`, that is of `f_q(z) = w`,
/// nearest to `guess`.
fn preimage_near(q: C64, w: C64, guess: C64) -> C64 {
    let b = -q;
    let cc = w * q.conj();
    let d = w;
    let p = |z: C64| ((z + b) * z + cc) * z + d;
    let dp = |z: C64| (3.0 * z + 2.0 * b) * z + cc;
    let mut z = guess;
    for _ in 0..40 {
        let step = p(z) / dp(z);
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() < 1e-16 * z.norm().max(1.0) {
            break;
        }
    }
    // Deflate and compare with the other two roots.
    let bb = z + b;
    let c2 = cc + z * bb;
    let disc = (bb * bb - 4.0 * c2).sqrt();
    let cands = [z, (-bb + disc) / 2.0, (-bb - disc) / 2.0];
    cands.into_iter().min_by(|x, y| (x - guess).norm().total_cmp(&(y - guess).norm())).unwrap()
}

impl JuliaCurve {
    pub fn unperturbed() -> JuliaCurve {
        let m = ETA_GRID;
        let samples = (0..m).map(|j| C64::from_polar(1.0, TAU * (j as f64 / m as f64 - 0.25))).collect();
        JuliaCurve { q: c(0.0, 0.0), samples }
    }

    /// Re-solves `f_q(η(x)) = η(3x)` at a nearby parameter by pullback.
    fn relax(&self, q: C64) -> Option<JuliaCurve> {
        let m = ETA_GRID;
        let mut cur = self.samples.clone();
        for _ in 0..400 {
            let next: Vec<C64> = (0..m).map(|j| preimage_near(q, cur[(3 * j) % m], cur[j])).collect();
            let delta = next.iter().zip(&cur).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            cur = next;
            if delta < 1e-13 {
                let moved = cur.iter().zip(&self.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                return (moved < 0.05).then_some(JuliaCurve { q, samples: cur });
            }
        }
        None
    }

    /// Continues the samples along a path of parameters.
    pub fn along(&self, path: &[C64]) -> Result<JuliaCurve> {
        let mut cur = self.clone();
        for &target in path {
            let mut t = 0.0f64;
            let start = cur.q;
            let mut dt = 1.0f64;
            while t < 1.0 {
                let t1 = (t + dt).min(1.0);
                match cur.relax(start + (target - start) * t1) {
                    Some(next) => {
                        cur = next;
                        t = t1;
                        dt = (dt * 2.0).min(1.0);
                    }
                    None => {
                        dt *= 0.5;
                        if dt < 1e-6 {
                            return Err(Error::Numerical(format!("Julia curve continuation failed near q = {}", cur.q)));
                        }
                    }
                }
            }
        }
        Ok(cur)
    }

    pub fn nearest_index(&self, z: C64) -> usize {
        (0..self.samples.len())
            .min_by(|&a, &b| (self.samples[a] - z).norm().total_cmp(&(self.samples[b] - z).norm()))
            .unwrap()
    }

    /// Exact coordinate of a periodic point of `J`, read off from the third
    /// of the curve containing each point of its cycle.
    pub fn coordinate(&self, z: C64) -> Option<Angle> {
        let p = numeric_period(self.q, z, 64)?;
        let m = self.samples.len();
        let mut digits = Vec::with_capacity(p);
        let mut w = z;
        for _ in 0..p {
            digits.push((3 * self.nearest_index(w) / m) as u8);
            w = f(self.q, w);
        }
        Some(from_digits(3, &[], &digits))
    }
}

/// Least `p <= max` with `f^p(z)` back at `z`.
pub fn numeric_period(q: C64, z: C64, max: usize) -> Option<usize> {
    let mut w = z;
    for p in 1..=max {
        w = f(q, w);
        if chordal_distance(w, z) < 1e-7 {
            return Some(p);
        }
    }
    None
}

/// Doubly visible points measured on the dynamical plane.
#[derive(Clone, Debug, Serialize)]
pub struct DoublyVisibleMeasurement {
    pub theta: Angle,
    pub q: C64,
    pub points: Vec<C64>,
    pub coordinates: Vec<Angle>,
    pub rotation_number: Option<Angle>,
}

/// Traces the parameter ray of `Θ` to `Φ = r e^{2πiΘ}`, lands every
/// internal ray of doubling period at most `max_period` (both sides where
/// they bifurcate), keeps the landing points whose antipodes also occur,
/// and reads off their coordinates through the conjugacy `η_q`.
pub fn measure_doubly_visible(theta_c: &Angle, r: f64, max_period: usize, depth: usize) -> Result<DoublyVisibleMeasurement> {
    let sched: Vec<f64> = (1..=20).map(|k| r * k as f64 / 20.0).collect();
    let ray = parameter_ray(theta_c, &ParamRayOptions::new(sched))?;
    if ray.status != RayStatus::Complete {
        return Err(Error::Numerical(format!("parameter ray incomplete: {}", ray.message)));
    }
    let q = ray.last().unwrap().q;
    let mut angles: Vec<Angle> = Vec::new();
    for p in 1..=max_period as u32 {
        let den = (1i64 << p) - 1;
        for k in 0..den.max(1) {
            angles.push(Angle::frac(k, den.max(1)));
        }
    }
    angles.sort();
    angles.dedup();
    let mut landings: Vec<(Angle, RaySide, C64)> = Vec::new();
    for a in &angles {
        for (side, z) in landing_points(q, a, 24)? {
            landings.push((a.clone(), side, z));
        }
    }
    let mut uniq: Vec<C64> = Vec::new();
    for (_, _, z) in &landings {
        if !uniq.iter().any(|u| chordal_distance(*u, *z) < 1e-7) {
            uniq.push(*z);
        }
    }
    let doubly: Vec<C64> = uniq
        .iter()
        .cloned()
        .filter(|z| uniq.iter().any(|u| chordal_distance(antipode(*z), *u) < 1e-6))
        .collect();
    // Parameter path from 0 out to q, for the continuation of η.
    let mut path: Vec<C64> = (1..10).map(|k| ray.points[0].q * (k as f64 / 10.0)).collect();
    path.extend(ray.points.iter().map(|p| p.q));
    let curve = JuliaCurve::unperturbed().along(&path)?;
    // Normalise: x = 0 at the landing point of the internal 0-ray (its
    // minus side when it bifurcates).
    let zero_land = landings
        .iter()
        .find(|(a, s, _)| a.is_zero() && *s != RaySide::Plus)
        .map(|x| x.2)
        .ok_or_else(|| Error::Numerical("internal 0-ray did not land".into()))?;
    let raw0 = curve.coordinate(zero_land).ok_or_else(|| Error::Numerical("0-ray landing not periodic".into()))?;
    let shift = raw0.neg();
    let _ = depth;
    let mut measured: Vec<(Angle, C64)> = Vec::new();
    for z in &doubly {
        let x = curve.coordinate(*z).ok_or_else(|| Error::Numerical(format!("landing point {z} is not periodic")))?;
        measured.push((x.add(&shift), *z));
    }
    measured.sort_by(|a, b| a.0.cmp(&b.0));
    let rotation_number = rotation_of_points(q, &measured.iter().map(|m| m.1).collect::<Vec<_>>());
    Ok(DoublyVisibleMeasurement {
        theta: theta_c.clone(),
        q,
        points: measured.iter().map(|m| m.1).collect(),
        coordinates: measured.iter().map(|m| m.0.clone()).collect(),
        rotation_number,
    })
}

/// Index shift of `f_q` on points listed in circular order.
fn rotation_of_points(q: C64, pts: &[C64]) -> Option<Angle> {
    let n = pts.len();
    if n == 0 {
        return None;
    }
    let mut shift = None;
    for (i, z) in pts.iter().enumerate() {
        let w = f(q, *z);
        let j = (0..n).min_by(|&a, &b| chordal_distance(pts[a], w).total_cmp(&chordal_distance(pts[b], w)))?;
        if chordal_distance(pts[j], w) > 1e-6 {
            return None;
        }
        let s = (j + n - i) % n;
        match shift {
            None => shift = Some(s),
            Some(s0) if s0 != s => return None,
            _ => {}
        }
    }
    Some(Angle::frac(shift? as i64, n as i64))
}
