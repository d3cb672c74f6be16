//! The landing algorithm `phi_Θ` from doubling to tripling angles, its
//! monotone inverse `psi_Θ`, critical gaps, doubly visible sets and the
//! dynamic rotation number `rho` with its explicit inverse.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::circle::{digits_fraction, from_digits, orbit, orbit_shape_u64, Angle, CircleInterval};
use crate::error::{Error, Result};
use crate::rotation::{monotone_extension, rotation_number, x_d_of, PLCircleMap, RotationNumber, RotationSet};

/// Which half-open convention the digit rule uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Intervals `[0, θmin), [θmin, θmax), [θmax, 1)`.
    Plus,
    /// Intervals `(0, θmin], (θmin, θmax], (θmax, 1]`, reading 0 as 1.
    Minus,
}

/// Base-3 expansion `0.x_1 x_2 ...` as a preperiodic part and a cycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DigitStream {
    pub preperiod: Vec<u8>,
    pub cycle: Vec<u8>,
}

impl DigitStream {
    pub fn value(&self) -> Angle {
        from_digits(3, &self.preperiod, &self.cycle)
    }
}

/// Whether no forward doubling image of `theta` equals `theta_c`.
pub fn in_lambda(theta_c: &Angle, theta: &Angle) -> bool {
    let o = orbit(theta, 2);
    !o.preperiod.iter().chain(o.cycle.iter()).any(|y| y == theta_c)
}

fn digit_of(y: &Angle, lo: &Angle, hi: &Angle, side: Side) -> u8 {
    match side {
        Side::Plus => {
            if y < lo {
                0
            } else if y < hi {
                1
            } else {
                2
            }
        }
        Side::Minus => {
            if y.is_zero() || y > hi {
                2
            } else if y > lo {
                1
            } else {
                0
            }
        }
    }
}

/// Digit stream of `phi^±_Θ(θ)`, without checking membership in Λ.
pub fn phi_digits(theta_c: &Angle, theta: &Angle, side: Side) -> DigitStream {
    if let (Some(tc), Some(t)) = (theta_c.to_u64_pair(), theta.to_u64_pair()) {
        if t.1 < (1 << 62) && tc.1 < (1 << 62) {
            return phi_digits_u64(tc, t, side);
        }
    }
    let half = Angle::half();
    let (lo, hi) = if theta_c < &half { (theta_c.clone(), half) } else { (half, theta_c.clone()) };
    let o = orbit(theta, 2);
    DigitStream {
        preperiod: o.preperiod.iter().map(|y| digit_of(y, &lo, &hi, side)).collect(),
        cycle: o.cycle.iter().map(|y| digit_of(y, &lo, &hi, side)).collect(),
    }
}

fn phi_digits_u64(tc: (u64, u64), t: (u64, u64), side: Side) -> DigitStream {
    // a/b < c/d by cross multiplication.
    let lt = |a: u64, b: u64, c: u64, d: u64| (a as u128) * (d as u128) < (c as u128) * (b as u128);
    let (lo, hi) = if lt(tc.0, tc.1, 1, 2) { (tc, (1, 2)) } else { ((1, 2), tc) };
    let (num, den) = t;
    let (r, k) = orbit_shape_u64(num, den, 2);
    let digit = |y: u64| -> u8 {
        match side {
            Side::Plus => {
                if lt(y, den, lo.0, lo.1) {
                    0
                } else if lt(y, den, hi.0, hi.1) {
                    1
                } else {
                    2
                }
            }
            Side::Minus => {
                if y == 0 || lt(hi.0, hi.1, y, den) {
                    2
                } else if lt(lo.0, lo.1, y, den) {
                    1
                } else {
                    0
                }
            }
        }
    };
    let mut y = num % den;
    let mut pre = Vec::with_capacity(r);
    for _ in 0..r {
        pre.push(digit(y));
        y = ((y as u128 * 2) % den as u128) as u64;
    }
    let mut cyc = Vec::with_capacity(k);
    for _ in 0..k {
        cyc.push(digit(y));
        y = ((y as u128 * 2) % den as u128) as u64;
    }
    DigitStream { preperiod: pre, cycle: cyc }
}

/// `phi_Θ(θ)` for θ in Λ, with its digit stream.
pub fn phi(theta_c: &Angle, theta: &Angle) -> Result<(Angle, DigitStream)> {
    if !in_lambda(theta_c, theta) {
        return Err(Error::Precondition(format!(
            "{theta} has a doubling image equal to {theta_c}; use phi_pm"
        )));
    }
    let ds = phi_digits(theta_c, theta, Side::Plus);
    Ok((ds.value(), ds))
}

/// The pair `(phi^-_Θ(θ), phi^+_Θ(θ))` for θ outside Λ.
pub fn phi_pm(theta_c: &Angle, theta: &Angle) -> Result<(Angle, Angle)> {
    if in_lambda(theta_c, theta) {
        return Err(Error::Precondition(format!("no doubling image of {theta} equals {theta_c}")));
    }
    Ok((
        phi_digits(theta_c, theta, Side::Minus).value(),
        phi_digits(theta_c, theta, Side::Plus).value(),
    ))
}

/// The critical gap `(a, b)` of Θ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticalGap {
    pub theta: Angle,
    pub a: Angle,
    pub b: Angle,
    pub length: Angle,
}

impl CriticalGap {
    pub fn interval(&self) -> CircleInterval {
        CircleInterval::open(self.a.clone(), self.b.clone())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "theta": self.theta.to_string(),
            "a": self.a.to_string(),
            "b": self.b.to_string(),
            "length": self.length.to_string(),
        })
    }
}

pub fn critical_gap(theta_c: &Angle) -> CriticalGap {
    let lo = phi_digits(theta_c, theta_c, Side::Minus);
    let hi = phi_digits(theta_c, theta_c, Side::Plus);
    let (na, da) = digits_fraction(3, &lo.preperiod, &lo.cycle);
    let (nb, db) = digits_fraction(3, &hi.preperiod, &hi.cycle);
    if da == db {
        // Same denominator: subtract before reducing.
        let len = if nb >= na { &nb - &na } else { &nb + &db - &na };
        return CriticalGap {
            theta: theta_c.clone(),
            a: Angle::reduce(na, da.clone()),
            b: Angle::reduce(nb, db),
            length: Angle::reduce(len, da),
        };
    }
    let a = Angle::reduce(na, da);
    let b = Angle::reduce(nb, db);
    let length = a.arc_to(&b);
    CriticalGap { theta: theta_c.clone(), a, b, length }
}

/// Period of Θ under doubling, or `None` when Θ is not periodic.
pub fn doubling_period(theta: &Angle) -> Option<usize> {
    if theta.den().is_even() && !theta.den().is_one() {
        return None;
    }
    match theta.to_u64_pair() {
        Some((n, d)) => Some(orbit_shape_u64(n, d, 2).1),
        None => Some(orbit(theta, 2).cycle.len()),
    }
}

/// Length `3^(p-1) / (3^p - 1)` for period `p`, or `1/3` when Θ is not
/// periodic.
pub fn gap_length_law(theta: &Angle) -> Angle {
    match doubling_period(theta) {
        Some(p) => {
            let t = BigUint::from(3u32).pow(p as u32 - 1);
            let den: BigUint = BigUint::from(3u32).pow(p as u32) - 1u32;
            Angle::new(BigInt::from(t), BigInt::from(den)).unwrap()
        }
        None => Angle::frac(1, 3),
    }
}

/// Whether the tripling orbit of `x` avoids the open critical gap.
pub fn visible(theta_c: &Angle, x: &Angle) -> bool {
    visible_in(&critical_gap(theta_c).interval(), x)
}

fn visible_in(gap: &CircleInterval, x: &Angle) -> bool {
    first_gap_entry(gap, x).is_none()
}

/// First `m` with `3^m x` in the open gap.
fn first_gap_entry(gap: &CircleInterval, x: &Angle) -> Option<usize> {
    let o = orbit(x, 3);
    o.preperiod.iter().chain(o.cycle.iter()).position(|y| gap.contains_open(y))
}

/// `psi_Θ(x)`: the monotone degree-one map with `psi ∘ m_3 = m_2 ∘ psi`,
/// constant on gap closures and inverse to `phi_Θ` on Λ.
pub fn psi(theta_c: &Angle, x: &Angle) -> Result<Angle> {
    let gap = critical_gap(theta_c);
    let closed = CircleInterval::closed(gap.a.clone(), gap.b.clone());
    if closed.contains(x) {
        return Ok(theta_c.clone());
    }
    let b = gap.b.to_rational();
    let xl = x.lift_above(&b);
    let tc = theta_c.to_rational();
    // psi(x) = sup { θ in [Θ, Θ+1) : phi^+(θ) <= x }, lifted above b.
    let f = |t: &BigRational| -> BigRational {
        phi_digits(theta_c, &Angle::from_rational(t), Side::Plus).value().lift_above(&b)
    };
    let bisect = |steps: usize| -> (BigRational, BigRational) {
        let mut lo = tc.clone();
        let mut hi = &tc + BigRational::one();
        let two = BigRational::from_integer(2.into());
        for _ in 0..steps {
            let mid = (&lo + &hi) / &two;
            if f(&mid) <= xl {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, hi)
    };
    let snap = |lo: &BigRational, hi: &BigRational, den: &BigInt, offset: &BigRational| -> Result<Angle> {
        // Unique value (offset + j) / den in [lo, hi].
        let d = BigRational::from_integer(den.clone());
        let j0 = (lo * &d - offset).ceil().to_integer();
        let j1 = (hi * &d - offset).floor().to_integer();
        if j0 != j1 {
            return Err(Error::Numerical(format!("psi bracket for {x} holds {j0}..{j1}")));
        }
        Ok(Angle::from_rational(&((offset + BigRational::from_integer(j0)) / d)))
    };
    match first_gap_entry(&gap.interval(), x) {
        None => {
            let o = orbit(x, 3);
            let r = o.preperiod.len();
            let k = o.cycle.len();
            let den: BigInt = (BigInt::one() << r) * ((BigInt::one() << k) - 1u32);
            let den = if den.is_zero() { BigInt::one() << r } else { den };
            let (lo, hi) = bisect(r + k + 2);
            snap(&lo, &hi, &den, &BigRational::zero())
        }
        Some(m) => {
            let (lo, hi) = bisect(m + 2);
            snap(&lo, &hi, &(BigInt::one() << m), &tc)
        }
    }
}

/// The two collapsed arcs `I_1 ⊂ 𝒢` (length 1/3) and `I_2 = I_1 + 1/2`.
pub fn collapse_arcs(theta_c: &Angle) -> [CircleInterval; 2] {
    let gap = critical_gap(theta_c);
    let third = Angle::frac(1, 3);
    let lo = if gap.length == third {
        gap.a.clone()
    } else {
        // Centered inside the gap.
        let slack = gap.length.sub(&third).to_rational() / BigRational::from_integer(2.into());
        gap.a.add(&Angle::from_rational(&slack))
    };
    let i1 = CircleInterval::open_with_length(&lo, &third);
    let i2 = i1.shifted(&Angle::half());
    [i1, i2]
}

/// Degree-one monotone map collapsing `I_1` and `I_2`.
pub fn doubly_visible_map(theta_c: &Angle) -> PLCircleMap {
    monotone_extension(&collapse_arcs(theta_c), 3).expect("collapse arcs are admissible")
}

/// Periodic skeleton of `X_3(I_1 ∪ I_2)`, the points visible from both
/// zero and infinity.
pub fn doubly_visible_set(theta_c: &Angle) -> Result<RotationSet> {
    Ok(x_d_of(&collapse_arcs(theta_c), 3)?.skeleton)
}

/// `rho(Θ)`, the rotation number of the doubly visible set.
pub fn dynamic_rotation_number(theta_c: &Angle) -> Result<Angle> {
    match rotation_number(&doubly_visible_map(theta_c))? {
        RotationNumber::Exact(t) => Ok(t),
        RotationNumber::Enclosure { lo, hi } => {
            Err(Error::Numerical(format!("rotation number of {theta_c} only enclosed in [{lo}, {hi}]")))
        }
    }
}

fn small_fraction(t: &Angle) -> Result<(u64, u64)> {
    t.to_u64_pair()
        .filter(|&(_, n)| n < (1 << 31))
        .ok_or_else(|| Error::Precondition(format!("denominator of {t} too large")))
}

/// Binary digits `b_0 .. b_{n-1}` of `rho^{-1}(p/n)` on the given side.
fn rho_inverse_bits(t: &Angle, side: Side) -> Result<Vec<u8>> {
    let (p, n) = small_fraction(t)?;
    // frac(1/2 + l p/n) = v / (2n), compared against 1 - t = 2(n - p) / (2n).
    let cut = 2 * (n - p);
    Ok((0..n)
        .map(|l| {
            let v = (n + 2 * l * p) % (2 * n);
            let bit = match side {
                Side::Plus => v >= cut,
                Side::Minus => (if v == 0 { 2 * n } else { v }) > cut,
            };
            bit as u8
        })
        .collect())
}

/// `θ_t^+`, the right end of `rho^{-1}(t)`.
pub fn rho_inverse_plus(t: &Angle) -> Result<Angle> {
    Ok(from_digits(2, &[], &rho_inverse_bits(t, Side::Plus)?))
}

/// `θ_t^-`, the left end of `rho^{-1}(t)`.
pub fn rho_inverse_minus(t: &Angle) -> Result<Angle> {
    Ok(from_digits(2, &[], &rho_inverse_bits(t, Side::Minus)?))
}

/// `θ_t^+` for a real `t`, truncated after `bits` binary digits; the
/// truncation error is below `2^-bits`.
pub fn rho_inverse_plus_real(t: f64, bits: u32) -> (f64, f64) {
    let t = t.rem_euclid(1.0);
    let mut acc = 0.0;
    let mut w = 0.5;
    for l in 0..bits {
        let v = (0.5 + l as f64 * t).rem_euclid(1.0);
        if v >= 1.0 - t {
            acc += w;
        }
        w *= 0.5;
    }
    (acc, 2f64.powi(-(bits as i32)))
}

/// Jump `θ_t^+ - θ_t^-` of `rho^{-1}` at `t`: `2^(k-1)/(2^(2k)-1)` when the
/// denominator is `2k`, else 0.
pub fn rho_discontinuity(t: &Angle) -> Angle {
    let n = t.den().clone();
    if n.is_odd() {
        return Angle::zero();
    }
    let k = (n / 2u32).to_u32().expect("denominator fits in u32");
    let num = BigInt::one() << (k - 1);
    let den: BigInt = (BigInt::one() << (2 * k)) - 1;
    Angle::new(num, den).unwrap()
}

/// The balanced angle of `t` with odd denominator.
pub fn balanced_angle(t: &Angle) -> Result<Angle> {
    if t.den().is_even() {
        return Err(Error::Precondition(format!("{t} has even denominator; use balanced_pair")));
    }
    let pts = crate::rotation::goldberg_orbit(t)?.points();
    Ok(pts[pts.len() / 2].clone())
}

/// The balanced pair of `t` with even denominator.
pub fn balanced_pair(t: &Angle) -> Result<(Angle, Angle)> {
    if t.den().is_odd() {
        return Err(Error::Precondition(format!("{t} has odd denominator; use balanced_angle")));
    }
    let pts = crate::rotation::goldberg_orbit(t)?.points();
    let n = pts.len();
    Ok((pts[n / 2 - 1].clone(), pts[n / 2].clone()))
}

/// Samples `(θ, rho(θ))` at `θ = j / samples`.
pub fn rho_graph(samples: usize) -> Result<Vec<(Angle, Angle)>> {
    use rayon::prelude::*;
    (0..samples)
        .into_par_iter()
        .map(|j| {
            let th = Angle::frac(j as i64, samples as i64);
            let r = dynamic_rotation_number(&th)?;
            Ok((th, r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: i64, d: i64) -> Angle {
        Angle::frac(n, d)
    }

    #[test]
    fn phi_examples() {
        let (x, ds) = phi(&a(2, 7), &a(1, 3)).unwrap();
        assert_eq!(x, a(5, 8));
        assert_eq!(ds.cycle, vec![1, 2]);
        assert_eq!(phi(&a(2, 7), &a(2, 3)).unwrap().0, a(7, 8));
        assert_eq!(phi(&a(2, 7), &a(0, 1)).unwrap().0, a(0, 1));
        let (x, ds) = phi(&a(1, 2), &a(1, 3)).unwrap();
        assert_eq!(x, a(1, 4));
        assert!(ds.cycle.iter().all(|&d| d != 1));
        assert!(phi(&a(2, 7), &a(4, 7)).is_err());
    }

    #[test]
    fn phi_pm_examples() {
        let t = a(2, 7);
        assert_eq!(phi_pm(&t, &a(2, 7)).unwrap(), (a(6, 26), a(15, 26)));
        assert_eq!(phi_pm(&t, &a(4, 7)).unwrap(), (a(18, 26), a(19, 26)));
        assert_eq!(phi_pm(&t, &a(1, 7)).unwrap(), (a(2, 26), a(5, 26)));
        assert!(phi_pm(&t, &a(1, 3)).is_err());
    }

    #[test]
    fn big_and_small_paths_agree() {
        let tc = a(3, 11);
        for d in [5i64, 12, 40, 63] {
            for n in 0..d {
                let th = a(n, d);
                for side in [Side::Plus, Side::Minus] {
                    let fast = phi_digits(&tc, &th, side);
                    let half = Angle::half();
                    let o = orbit(&th, 2);
                    let slow: Vec<u8> =
                        o.preperiod.iter().chain(&o.cycle).map(|y| digit_of(y, &tc, &half, side)).collect();
                    let got: Vec<u8> = fast.preperiod.iter().chain(&fast.cycle).cloned().collect();
                    assert_eq!(got, slow, "{th} {side:?}");
                }
            }
        }
    }

    #[test]
    fn critical_gap_examples() {
        let g = critical_gap(&a(2, 7));
        assert_eq!((g.a, g.b, g.length), (a(6, 26), a(15, 26), a(9, 26)));
        let g = critical_gap(&a(0, 1));
        assert_eq!((g.a, g.b, g.length), (a(0, 1), a(1, 2), a(1, 2)));
        let g = critical_gap(&a(1, 5));
        assert_eq!(g.length, a(27, 80));
        assert_eq!(gap_length_law(&a(1, 5)), a(27, 80));
        assert_eq!(critical_gap(&a(3, 8)).length, a(1, 3));
    }

    #[test]
    fn psi_examples() {
        let t = a(2, 7);
        assert_eq!(psi(&t, &a(5, 8)).unwrap(), a(1, 3));
        assert_eq!(psi(&t, &a(7, 26)).unwrap(), t);
        assert_eq!(psi(&t, &a(0, 1)).unwrap(), a(0, 1));
        assert_eq!(psi(&t, &a(18, 26)).unwrap(), a(4, 7));
        assert_eq!(psi(&t, &a(19, 26)).unwrap(), a(4, 7));
        assert_eq!(psi(&t, &a(7, 8)).unwrap(), a(2, 3));
    }

    #[test]
    fn visibility_examples() {
        let t = a(2, 7);
        assert!(visible(&t, &a(6, 26)));
        assert!(!visible(&t, &a(7, 26)));
        assert!(!visible(&t, &a(1, 2)));
    }

    #[test]
    fn doubly_visible_examples() {
        let x = doubly_visible_set(&a(2, 7)).unwrap();
        assert_eq!(
            x.periodic_points(),
            [2, 5, 6, 15, 18, 19].iter().map(|&n| a(n, 26)).collect::<Vec<_>>()
        );
        assert_eq!(x.orbits.len(), 2);
        assert_eq!(x.rotation_number(), Some(a(1, 3)));
        let x = doubly_visible_set(&a(1, 5)).unwrap();
        assert_eq!(x.orbits.len(), 1);
        assert_eq!(x.orbits[0].len(), 4);
        assert_eq!(x.rotation_number(), Some(a(1, 4)));
        let x = doubly_visible_set(&a(0, 1)).unwrap();
        assert_eq!(x.periodic_points(), vec![a(0, 1), a(1, 2)]);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(dynamic_rotation_number(&a(2, 7)).unwrap(), a(1, 3));
        assert_eq!(dynamic_rotation_number(&a(0, 1)).unwrap(), a(0, 1));
        assert_eq!(dynamic_rotation_number(&a(1, 5)).unwrap(), a(1, 4));
    }

    #[test]
    fn balanced_examples() {
        assert_eq!(balanced_angle(&a(1, 3)).unwrap(), a(2, 7));
        assert_eq!(balanced_angle(&a(0, 1)).unwrap(), a(0, 1));
        assert_eq!(balanced_pair(&a(1, 4)).unwrap(), (a(2, 15), a(4, 15)));
        assert_eq!(balanced_pair(&a(1, 2)).unwrap(), (a(1, 3), a(2, 3)));
        assert_eq!(balanced_pair(&a(3, 4)).unwrap(), (a(11, 15), a(13, 15)));
        assert!(balanced_angle(&a(1, 2)).is_err());
        assert!(balanced_pair(&a(1, 3)).is_err());
    }

    #[test]
    fn rho_inverse_examples() {
        assert_eq!(rho_inverse_plus(&a(1, 3)).unwrap(), a(2, 7));
        assert_eq!(rho_inverse_plus(&a(0, 1)).unwrap(), a(0, 1));
        assert_eq!(rho_inverse_plus(&a(1, 2)).unwrap(), a(2, 3));
        assert_eq!(rho_inverse_minus(&a(1, 2)).unwrap(), a(1, 3));
        assert_eq!(rho_inverse_plus(&a(1, 4)).unwrap(), a(4, 15));
        assert_eq!(rho_inverse_minus(&a(1, 4)).unwrap(), a(2, 15));
        let (v, err) = rho_inverse_plus_real(1.0 / 3.0, 40);
        assert!((v - 2.0 / 7.0).abs() < 1e-9 + err);
    }

    #[test]
    fn discontinuity_examples() {
        assert_eq!(rho_discontinuity(&a(1, 2)), a(1, 3));
        assert_eq!(rho_discontinuity(&a(1, 4)), a(2, 15));
        assert_eq!(rho_discontinuity(&a(1, 3)), a(0, 1));
    }
}
