//! Exact arithmetic on the circle R/Z.
//!
//! Angles are reduced rationals in `[0, 1)` backed by arbitrary precision
//! integers, since digit sums in base 3 quickly outgrow machine words.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A point of R/Z, stored as the canonical residue `num/den` with
/// `gcd(num, den) = 1` and `0 <= num < den`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Angle {
    num: BigUint,
    den: BigUint,
}

impl Angle {
    pub fn zero() -> Angle {
        Angle { num: BigUint::zero(), den: BigUint::one() }
    }

    pub fn half() -> Angle {
        Angle { num: BigUint::one(), den: BigUint::from(2u32) }
    }

    /// Canonical residue of `num/den` modulo 1.
    pub fn new<N: Into<BigInt>, D: Into<BigInt>>(num: N, den: D) -> Result<Angle> {
        let num = num.into();
        let den = den.into();
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let (num, den) = if den.is_negative() { (-num, -den) } else { (num, den) };
        let den = den.magnitude().clone();
        let r = num.mod_floor(&BigInt::from_biguint(Sign::Plus, den.clone()));
        Ok(Angle::reduce(r.magnitude().clone(), den))
    }

    /// Like [`Angle::new`] for small literals; panics on a zero denominator.
    pub fn frac(num: i64, den: i64) -> Angle {
        Angle::new(num, den).expect("nonzero denominator")
    }

    /// Builds an angle from an unreduced residue `num < den`.
    pub(crate) fn reduce(num: BigUint, den: BigUint) -> Angle {
        debug_assert!(num < den);
        if num.is_zero() {
            return Angle::zero();
        }
        let g = big_gcd(&num, &den);
        if g.is_one() {
            Angle { num, den }
        } else {
            Angle { num: num / &g, den: den / g }
        }
    }

    pub fn from_rational(r: &BigRational) -> Angle {
        Angle::new(r.numer().clone(), r.denom().clone()).expect("rational has nonzero denominator")
    }

    pub fn num(&self) -> &BigUint {
        &self.num
    }

    pub fn den(&self) -> &BigUint {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The representative in `[0, 1)` as a rational number.
    pub fn to_rational(&self) -> BigRational {
        BigRational::new_raw(
            BigInt::from_biguint(Sign::Plus, self.num.clone()),
            BigInt::from_biguint(Sign::Plus, self.den.clone()),
        )
    }

    pub fn to_f64(&self) -> f64 {
        match (self.num.to_f64(), self.den.to_f64()) {
            (Some(n), Some(d)) if d.is_finite() && n.is_finite() => n / d,
            _ => {
                // Scale both down so the quotient keeps full precision.
                let shift = self.den.bits().saturating_sub(60);
                let n = (&self.num >> shift).to_f64().unwrap_or(0.0);
                let d = (&self.den >> shift).to_f64().unwrap_or(1.0);
                n / d
            }
        }
    }

    /// Small-denominator view, used by the hot loops in the angle calculus.
    pub fn to_u64_pair(&self) -> Option<(u64, u64)> {
        Some((self.num.to_u64()?, self.den.to_u64()?))
    }

    /// `d * self` modulo 1.
    pub fn mul_by(&self, d: u64) -> Angle {
        if self.num.is_zero() {
            return Angle::zero();
        }
        let prod = (&self.num * d) % &self.den;
        // gcd(num, den) = 1, so gcd(d * num, den) = gcd(d, den).
        let g = (&self.den % d).gcd(&BigUint::from(d));
        let g = if g.is_zero() { BigUint::from(d) } else { g };
        if g.is_one() {
            Angle { num: prod, den: self.den.clone() }
        } else if prod.is_zero() {
            Angle::zero()
        } else {
            Angle { num: prod / &g, den: &self.den / g }
        }
    }

    pub fn add(&self, other: &Angle) -> Angle {
        let num = &self.num * &other.den + &other.num * &self.den;
        let den = &self.den * &other.den;
        Angle::reduce(num % &den, den)
    }

    pub fn sub(&self, other: &Angle) -> Angle {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Angle {
        if self.num.is_zero() {
            Angle::zero()
        } else {
            Angle { num: &self.den - &self.num, den: self.den.clone() }
        }
    }

    /// The antipodal angle `x + 1/2`.
    pub fn antipode(&self) -> Angle {
        self.add(&Angle::half())
    }

    /// Counterclockwise distance from `self` to `other`, in `[0, 1)`.
    pub fn arc_to(&self, other: &Angle) -> Angle {
        other.sub(self)
    }

    /// `self` lifted to the interval `[base, base + 1)` as a rational.
    pub fn lift_above(&self, base: &BigRational) -> BigRational {
        let x = self.to_rational();
        let k = (base - &x).ceil();
        x + k
    }
}

impl Ord for Angle {
    fn cmp(&self, other: &Angle) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl PartialOrd for Angle {
    fn partial_cmp(&self, other: &Angle) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Angle {
    type Err = Error;

    /// Accepts `"p/q"` or a plain integer; the value is reduced mod 1.
    fn from_str(s: &str) -> Result<Angle> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a rational angle: {s:?}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
                let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
                Angle::new(n, d)
            }
            None => {
                let n = BigInt::from_str(s).map_err(|_| bad())?;
                Angle::new(n, 1)
            }
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Angle, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Fractional part of a rational, in `[0, 1)`.
pub fn frac(r: &BigRational) -> BigRational {
    r - r.floor()
}

/// Formats a rational as `"p/q"` (always with a denominator).
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// `angle(num, den)`: canonical residue of `num/den` mod 1.
pub fn angle(num: i64, den: i64) -> Result<Angle> {
    Angle::new(num, den)
}

/// `m_d(x) = d x mod 1`.
pub fn mul_by(x: &Angle, d: u64) -> Angle {
    x.mul_by(d)
}

/// Eventually periodic orbit of an angle under `m_d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Orbit {
    pub preperiod: Vec<Angle>,
    pub cycle: Vec<Angle>,
}

impl Orbit {
    pub fn period(&self) -> usize {
        self.cycle.len()
    }

    pub fn is_periodic(&self) -> bool {
        self.preperiod.is_empty()
    }
}

/// Exact preperiod and cycle of `x` under `m_d`.
pub fn orbit(x: &Angle, d: u64) -> Orbit {
    let mut seen: HashMap<Angle, usize> = HashMap::new();
    let mut pts = Vec::new();
    let mut y = x.clone();
    loop {
        if let Some(&start) = seen.get(&y) {
            let cycle = pts.split_off(start);
            return Orbit { preperiod: pts, cycle };
        }
        seen.insert(y.clone(), pts.len());
        let next = y.mul_by(d);
        pts.push(y);
        y = next;
    }
}

/// `(preperiod, period)` of `num/den` under `m_d`, for machine-size data.
pub fn orbit_shape_u64(num: u64, den: u64, d: u64) -> (usize, usize) {
    let x = num % den;
    let mut dd = den / x.gcd(&den);
    // Each step divides the reduced denominator by its gcd with d.
    let mut pre = 0usize;
    loop {
        let g = dd.gcd(&d);
        if g == 1 {
            break;
        }
        dd /= g;
        pre += 1;
    }
    if dd == 1 {
        return (pre, 1);
    }
    let mut k = 1usize;
    let mut p = d % dd;
    while p != 1 {
        p = ((p as u128 * d as u128) % dd as u128) as u64;
        k += 1;
    }
    (pre, k)
}

/// Sign of the cyclic order of three angles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CyclicOrder {
    Positive,
    Degenerate,
    Negative,
}

/// Whether `a, b, c` are met in that order going counterclockwise.
pub fn cyclic_order(a: &Angle, b: &Angle, c: &Angle) -> CyclicOrder {
    if a == b || b == c || a == c {
        return CyclicOrder::Degenerate;
    }
    if a.arc_to(b) < a.arc_to(c) {
        CyclicOrder::Positive
    } else {
        CyclicOrder::Negative
    }
}

/// An arc of R/Z from `lo` counterclockwise to `hi` with closure flags.
///
/// `lo == hi` denotes a single point when both ends are closed, and the
/// complement of that point (length 1) when both ends are open.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CircleInterval {
    pub lo: Angle,
    pub hi: Angle,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl CircleInterval {
    pub fn new(lo: Angle, hi: Angle, lo_closed: bool, hi_closed: bool) -> Result<CircleInterval> {
        if lo == hi && lo_closed != hi_closed {
            return Err(Error::InvalidInterval(format!(
                "degenerate arc at {lo} must be a closed point or an open complement"
            )));
        }
        Ok(CircleInterval { lo, hi, lo_closed, hi_closed })
    }

    pub fn open(lo: Angle, hi: Angle) -> CircleInterval {
        CircleInterval { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn closed(lo: Angle, hi: Angle) -> CircleInterval {
        CircleInterval { lo, hi, lo_closed: true, hi_closed: true }
    }

    /// Open arc starting at `lo` with the given rational length in (0, 1).
    pub fn open_with_length(lo: &Angle, len: &Angle) -> CircleInterval {
        CircleInterval::open(lo.clone(), lo.add(len))
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi && self.lo_closed && self.hi_closed
    }

    /// Length as a rational in `[0, 1]`.
    pub fn length(&self) -> BigRational {
        if self.lo == self.hi {
            if self.is_point() {
                BigRational::zero()
            } else {
                BigRational::one()
            }
        } else {
            self.lo.arc_to(&self.hi).to_rational()
        }
    }

    pub fn contains(&self, x: &Angle) -> bool {
        if x == &self.lo {
            return self.lo_closed;
        }
        if self.lo == self.hi {
            return !self.is_point();
        }
        if x == &self.hi {
            return self.hi_closed;
        }
        self.lo.arc_to(x) < self.lo.arc_to(&self.hi)
    }

    /// Interior membership, ignoring the closure flags.
    pub fn contains_open(&self, x: &Angle) -> bool {
        CircleInterval::open(self.lo.clone(), self.hi.clone()).contains(x)
    }

    pub fn shifted(&self, by: &Angle) -> CircleInterval {
        CircleInterval {
            lo: self.lo.add(by),
            hi: self.hi.add(by),
            lo_closed: self.lo_closed,
            hi_closed: self.hi_closed,
        }
    }

    /// The arc as a lifted real interval `[lo, lo + length]`.
    pub fn lifted(&self) -> (BigRational, BigRational) {
        let lo = self.lo.to_rational();
        let hi = &lo + self.length();
        (lo, hi)
    }

    /// Whether two arcs share an interior point.
    pub fn overlaps(&self, other: &CircleInterval) -> bool {
        let a = CircleInterval::open(self.lo.clone(), self.hi.clone());
        let b = CircleInterval::open(other.lo.clone(), other.hi.clone());
        if a.lo == b.lo {
            return true;
        }
        a.contains(&b.lo) || b.contains(&a.lo)
    }
}

impl fmt::Display for CircleInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

/// `numerator / (base^k - 1)`-style helper: the rational with the given
/// base-`b` digits, preperiodic part followed by a repeating cycle.
pub fn from_digits(base: u32, preperiod: &[u8], cycle: &[u8]) -> Angle {
    let (num, den) = digits_fraction(base, preperiod, cycle);
    Angle::reduce(num, den)
}

/// Big-endian digits as an integer, `base^chunk` at a time.
pub(crate) fn digits_value(base: u32, digits: &[u8]) -> BigUint {
    let b = base as u64;
    let mut chunk = 1;
    while (b.pow(chunk + 1) as u128) < (1u128 << 63) {
        chunk += 1;
    }
    let mut acc = BigUint::zero();
    for part in digits.chunks(chunk as usize) {
        let v = part.iter().fold(0u64, |v, &d| v * b + d as u64);
        acc = acc * b.pow(part.len() as u32) + v;
    }
    acc
}

/// Unreduced `(num, den)` with `num < den` for the given digits.
pub(crate) fn digits_fraction(base: u32, preperiod: &[u8], cycle: &[u8]) -> (BigUint, BigUint) {
    let b = BigUint::from(base);
    let pre_val = digits_value(base, preperiod);
    let r = preperiod.len() as u32;
    if cycle.iter().all(|&c| c == 0) {
        let den = b.pow(r);
        return (pre_val % &den, den);
    }
    let k = cycle.len() as u32;
    let cyc_val = digits_value(base, cycle);
    let bk1 = b.pow(k) - 1u32;
    // x = (pre + cyc/(b^k - 1)) / b^r
    let num = pre_val * &bk1 + cyc_val;
    let den = b.pow(r) * bk1;
    // num == den only when every digit is maximal: the value is exactly 1.
    (num % &den, den)
}


/// Lehmer's gcd: single-word Euclid steps on the leading 64 bits, applied
/// to the full numbers as a cofactor matrix.
pub(crate) fn big_gcd(a: &BigUint, b: &BigUint) -> BigUint {
    let (mut a, mut b) = if a >= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
    while b.bits() > 64 {
        let shift = a.bits() - 62;
        let mut x = (&a >> shift).to_u64().unwrap() as i64;
        let mut y = (&b >> shift).to_u64().unwrap() as i64;
        let (mut ca, mut cb, mut cc, mut cd) = (1i64, 0i64, 0i64, 1i64);
        loop {
            if y + cc == 0 || y + cd == 0 {
                break;
            }
            let q = (x + ca) / (y + cc);
            if q != (x + cb) / (y + cd) {
                break;
            }
            (ca, cc) = (cc, ca - q * cc);
            (cb, cd) = (cd, cb - q * cd);
            (x, y) = (y, x - q * y);
        }
        if cb == 0 {
            let r = &a % &b;
            a = b;
            b = r;
        } else {
            let comb = |p: i64, r: i64| -> BigUint {
                let (pu, ru) = (BigUint::from(p.unsigned_abs()), BigUint::from(r.unsigned_abs()));
                match (p >= 0, r >= 0) {
                    (true, true) => &a * pu + &b * ru,
                    (true, false) => &a * pu - &b * ru,
                    (false, true) => &b * ru - &a * pu,
                    (false, false) => unreachable!("cofactor row with two negative entries"),
                }
            };
            let na = comb(ca, cb);
            let nb = comb(cc, cd);
            a = na;
            b = nb;
        }
    }
    let (mut x, mut y) = (a, b);
    while !y.is_zero() {
        let r = &x % &y;
        x = y;
        y = r;
    }
    x
}

#[cfg(test)]
pub(crate) fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
