//! Rotation sets for `m_d`, monotone degree-one extensions and their exact
//! rotation numbers, Goldberg orbits under doubling, and semiconjugacies.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::circle::{frac, rational_string, Angle, CircleInterval};
use crate::error::{Error, Result};

/// Lift of a monotone piecewise-linear circle map: vertices `(x, y)` of
/// the graph over one period `[x_0, x_0 + 1)`, with `g(x + 1) = g(x) + degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct PLCircleMap {
    vertices: Vec<(BigRational, BigRational)>,
    degree: i64,
}

impl PLCircleMap {
    pub fn new(vertices: Vec<(BigRational, BigRational)>, degree: i64) -> Result<PLCircleMap> {
        if vertices.is_empty() {
            return Err(Error::InvalidMap("no vertices".into()));
        }
        if degree < 0 {
            return Err(Error::InvalidMap("negative degree".into()));
        }
        let x0 = vertices[0].0.clone();
        let y0 = vertices[0].1.clone();
        let end = (&x0 + BigRational::one(), &y0 + BigRational::from_integer(degree.into()));
        for w in vertices.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 < w[0].1 {
                return Err(Error::InvalidMap("vertices must be increasing in x, nondecreasing in y".into()));
            }
        }
        let last = vertices.last().unwrap();
        if last.0 >= end.0 || last.1 > end.1 {
            return Err(Error::InvalidMap("vertices must fit in one period".into()));
        }
        Ok(PLCircleMap { vertices, degree })
    }

    /// Rigid rotation `x -> x + t`.
    pub fn rotation(t: &Angle) -> PLCircleMap {
        PLCircleMap { vertices: vec![(BigRational::zero(), t.to_rational())], degree: 1 }
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn vertices(&self) -> &[(BigRational, BigRational)] {
        &self.vertices
    }

    fn period_end(&self) -> (BigRational, BigRational) {
        let (x0, y0) = &self.vertices[0];
        (x0 + BigRational::one(), y0 + BigRational::from_integer(self.degree.into()))
    }

    /// Segment endpoints `(x_i, y_i), (x_{i+1}, y_{i+1})` for `i` in one period.
    fn segment(&self, i: usize) -> ((BigRational, BigRational), (BigRational, BigRational)) {
        let a = self.vertices[i].clone();
        let b = if i + 1 < self.vertices.len() { self.vertices[i + 1].clone() } else { self.period_end() };
        (a, b)
    }

    /// Evaluates the lift at any real rational.
    pub fn eval_lift(&self, y: &BigRational) -> BigRational {
        let x0 = &self.vertices[0].0;
        let k = (y - x0).floor();
        let yr = y - &k;
        // Last vertex with x <= yr.
        let i = match self.vertices.binary_search_by(|v| v.0.cmp(&yr)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let ((xa, ya), (xb, yb)) = self.segment(i);
        let val = if ya == yb { ya } else { &ya + (&yb - &ya) * (&yr - &xa) / (&xb - &xa) };
        val + k * BigRational::from_integer(self.degree.into())
    }

    pub fn eval(&self, x: &Angle) -> Angle {
        Angle::from_rational(&self.eval_lift(&x.to_rational()))
    }

    /// Flat pieces of the graph, as (x-interval, value).
    pub fn plateaus(&self) -> Vec<(BigRational, BigRational, BigRational)> {
        (0..self.vertices.len())
            .filter_map(|i| {
                let ((xa, ya), (xb, yb)) = self.segment(i);
                (ya == yb).then_some((xa, xb, ya))
            })
            .collect()
    }

    /// The composition `self ∘ inner`.
    pub fn compose(&self, inner: &PLCircleMap) -> PLCircleMap {
        let one = BigRational::one();
        let (x0, _) = inner.vertices[0].clone();
        let mut xs: Vec<BigRational> = inner.vertices.iter().map(|v| v.0.clone()).collect();
        for i in 0..inner.vertices.len() {
            let ((xa, ya), (xb, yb)) = inner.segment(i);
            if ya == yb {
                continue;
            }
            for (u, _) in &self.vertices {
                // All lifts u + k of the outer vertex strictly inside (ya, yb).
                let mut k = (&ya - u).floor() + &one;
                loop {
                    let uk = u + &k;
                    if uk >= yb {
                        break;
                    }
                    if uk > ya {
                        xs.push(&xa + (&uk - &ya) * (&xb - &xa) / (&yb - &ya));
                    }
                    k += &one;
                }
            }
        }
        xs.sort();
        xs.dedup();
        let mut verts: Vec<(BigRational, BigRational)> = Vec::with_capacity(xs.len());
        for x in xs {
            debug_assert!(x >= x0 && x < &x0 + &one);
            let y = self.eval_lift(&inner.eval_lift(&x));
            verts.push((x, y));
        }
        let degree = self.degree * inner.degree;
        simplify(verts, degree)
    }

    /// `self` composed with itself `n` times (`n >= 1`).
    pub fn iterate(&self, n: usize) -> PLCircleMap {
        let mut g = self.clone();
        for _ in 1..n {
            g = self.compose(&g);
        }
        g
    }
}

/// Drops vertices interior to a straight piece.
fn simplify(verts: Vec<(BigRational, BigRational)>, degree: i64) -> PLCircleMap {
    let n = verts.len();
    if n <= 1 {
        return PLCircleMap { vertices: verts, degree };
    }
    let end = (&verts[0].0 + BigRational::one(), &verts[0].1 + BigRational::from_integer(degree.into()));
    let mut keep = vec![true; n];
    for i in 1..n {
        let (xa, ya) = &verts[i - 1];
        let (xb, yb) = &verts[i];
        let (xc, yc) = if i + 1 < n { (&verts[i + 1].0, &verts[i + 1].1) } else { (&end.0, &end.1) };
        if (yb - ya) * (xc - xb) == (yc - yb) * (xb - xa) {
            keep[i] = false;
        }
    }
    // Keep-flags were computed against original neighbors, which is fine:
    // removing a collinear vertex never breaks collinearity of another.
    let vertices = verts.into_iter().zip(keep).filter_map(|(v, k)| k.then_some(v)).collect();
    PLCircleMap { vertices, degree }
}

/// Monotone map of degree `d - δ` equal to `m_d` off the `δ` given arcs
/// (each of length exactly `1/d`) and constant on each of them.
pub fn collapse_extension(intervals: &[CircleInterval], d: u64) -> Result<PLCircleMap> {
    if d < 2 {
        return Err(Error::Precondition("degree must be at least 2".into()));
    }
    if intervals.is_empty() || intervals.len() as u64 > d - 1 {
        return Err(Error::Precondition(format!("need between 1 and {} arcs", d - 1)));
    }
    let step = BigRational::new(BigInt::one(), BigInt::from(d));
    for i in intervals {
        if i.length() != step {
            return Err(Error::InvalidInterval(format!("{i} does not have length 1/{d}")));
        }
    }
    for (a, i) in intervals.iter().enumerate() {
        for j in &intervals[a + 1..] {
            if i.overlaps(j) {
                return Err(Error::InvalidInterval(format!("{i} overlaps {j}")));
            }
        }
    }
    let mut sorted: Vec<&CircleInterval> = intervals.iter().collect();
    sorted.sort_by(|a, b| a.lo.cmp(&b.lo));
    let x0 = sorted[0].lo.to_rational();
    let dr = BigRational::from_integer(BigInt::from(d));
    let mut verts: Vec<(BigRational, BigRational)> = Vec::new();
    let mut y = &dr * &x0;
    let mut prev_hi: Option<BigRational> = None;
    for iv in &sorted {
        let lo = iv.lo.lift_above(&x0);
        if let Some(ph) = &prev_hi {
            y = &y + &dr * (&lo - ph);
        }
        let hi = &lo + &step;
        if verts.last().map(|v| v.0 != lo).unwrap_or(true) {
            verts.push((lo.clone(), y.clone()));
        }
        verts.push((hi.clone(), y.clone()));
        prev_hi = Some(hi);
    }
    let end = &x0 + BigRational::one();
    if verts.last().unwrap().0 == end {
        verts.pop();
    }
    let degree = d as i64 - intervals.len() as i64;
    PLCircleMap::new(verts, degree).map(|g| simplify(g.vertices, degree))
}

/// Degree-one monotone extension of `m_d` collapsing `d - 1` arcs.
pub fn monotone_extension(intervals: &[CircleInterval], d: u64) -> Result<PLCircleMap> {
    if intervals.len() as u64 != d - 1 {
        return Err(Error::Precondition(format!("need exactly {} arcs, got {}", d - 1, intervals.len())));
    }
    collapse_extension(intervals, d)
}

/// Rotation number of a degree-one map: exact when a cycle of the
/// iterated point is found, otherwise an enclosure.
#[derive(Clone, Debug, PartialEq)]
pub enum RotationNumber {
    Exact(Angle),
    Enclosure { lo: f64, hi: f64 },
}

impl RotationNumber {
    pub fn exact(&self) -> Option<&Angle> {
        match self {
            RotationNumber::Exact(a) => Some(a),
            RotationNumber::Enclosure { .. } => None,
        }
    }
}

/// Iteration cap for exact rotation numbers before falling back to bounds.
pub const ROTATION_STEP_CAP: usize = 2_000_000;

/// Rotation number of a degree-one piecewise-linear circle map.
pub fn rotation_number(g: &PLCircleMap) -> Result<RotationNumber> {
    if g.degree != 1 {
        return Err(Error::Precondition(format!("rotation number needs degree 1, got {}", g.degree)));
    }
    let start = g.plateaus().first().map(|p| p.2.clone()).unwrap_or_else(|| g.vertices[0].0.clone());
    if let Some(int_map) = IntegerMap::from_pl(g) {
        return Ok(int_map.rotation_number(&start, ROTATION_STEP_CAP));
    }
    let mut seen: HashMap<BigRational, (usize, BigRational)> = HashMap::new();
    let mut y = start.clone();
    for n in 0..ROTATION_STEP_CAP {
        let r = frac(&y);
        if let Some((m, ym)) = seen.get(&r) {
            let tau = (&y - ym) / BigRational::from_integer(BigInt::from(n - m));
            return Ok(RotationNumber::Exact(Angle::from_rational(&tau)));
        }
        seen.insert(r, (n, y.clone()));
        y = g.eval_lift(&y);
    }
    Ok(enclosure(&start, &y, ROTATION_STEP_CAP))
}

fn enclosure(y0: &BigRational, yn: &BigRational, n: usize) -> RotationNumber {
    let disp = (yn - y0).to_f64().unwrap_or(f64::NAN);
    let n = n as f64;
    RotationNumber::Enclosure { lo: (disp - 1.0) / n, hi: (disp + 1.0) / n }
}

/// A lift with integer slopes written over a common denominator, so that
/// orbits can be iterated with integer arithmetic only.
struct IntegerMap {
    den: BigInt,
    xs: Vec<BigInt>,
    ys: Vec<BigInt>,
    slopes: Vec<BigInt>,
    degree: BigInt,
}

impl IntegerMap {
    fn from_pl(g: &PLCircleMap) -> Option<IntegerMap> {
        let mut den = BigInt::one();
        for (x, y) in &g.vertices {
            den = den.lcm(x.denom()).lcm(y.denom());
        }
        for p in g.plateaus() {
            den = den.lcm(p.2.denom());
        }
        let scale = |r: &BigRational| -> BigInt { (r * BigRational::from_integer(den.clone())).to_integer() };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut slopes = Vec::new();
        for i in 0..g.vertices.len() {
            let ((xa, ya), (xb, yb)) = g.segment(i);
            let s = (&yb - &ya) / (&xb - &xa);
            if !s.is_integer() {
                return None;
            }
            xs.push(scale(&xa));
            ys.push(scale(&ya));
            slopes.push(s.to_integer());
        }
        Some(IntegerMap { degree: BigInt::from(g.degree) * &den, den, xs, ys, slopes })
    }

    fn eval(&self, y: &BigInt) -> BigInt {
        let (k, _) = (y - &self.xs[0]).div_mod_floor(&self.den);
        let yr = y - &k * &self.den;
        let i = match self.xs.binary_search(&yr) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        &self.ys[i] + &self.slopes[i] * (&yr - &self.xs[i]) + k * &self.degree
    }

    fn rotation_number(&self, start: &BigRational, cap: usize) -> RotationNumber {
        let y0 = (start * BigRational::from_integer(self.den.clone())).to_integer();
        let mut seen: HashMap<BigInt, (usize, BigInt)> = HashMap::new();
        let mut y = y0.clone();
        for n in 0..cap {
            let r = y.mod_floor(&self.den);
            if let Some((m, ym)) = seen.get(&r) {
                let tau = BigRational::new(&y - ym, &self.den * BigInt::from(n - m));
                return RotationNumber::Exact(Angle::from_rational(&tau));
            }
            seen.insert(r, (n, y.clone()));
            y = self.eval(&y);
        }
        let d = BigRational::from_integer(self.den.clone());
        enclosure(&(BigRational::from_integer(y0) / &d), &(BigRational::from_integer(y) / &d), cap)
    }
}

/// A gap of a rotation set together with its multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Gap {
    pub interval: CircleInterval,
    pub length: BigRational,
    pub multiplicity: u64,
}

/// Finite rotation set: periodic orbits plus optional listed wandering
/// points, with the gaps of the stored point set.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationSet {
    pub d: u64,
    pub orbits: Vec<Vec<Angle>>,
    pub wandering: Vec<Angle>,
    pub gaps: Vec<Gap>,
}

impl RotationSet {
    pub fn new(d: u64, orbits: Vec<Vec<Angle>>, wandering: Vec<Angle>) -> RotationSet {
        let mut pts: Vec<Angle> = orbits.iter().flatten().chain(wandering.iter()).cloned().collect();
        pts.sort();
        pts.dedup();
        let gaps = gaps_of(&pts, d);
        RotationSet { d, orbits, wandering, gaps }
    }

    /// All stored points, sorted in `[0, 1)`.
    pub fn points(&self) -> Vec<Angle> {
        let mut pts: Vec<Angle> = self.orbits.iter().flatten().chain(self.wandering.iter()).cloned().collect();
        pts.sort();
        pts.dedup();
        pts
    }

    pub fn periodic_points(&self) -> Vec<Angle> {
        let mut pts: Vec<Angle> = self.orbits.iter().flatten().cloned().collect();
        pts.sort();
        pts.dedup();
        pts
    }

    pub fn contains(&self, x: &Angle) -> bool {
        self.orbits.iter().flatten().chain(self.wandering.iter()).any(|p| p == x)
    }

    /// Rotation number of the periodic part, when `m_d` acts on it as a
    /// cyclic shift.
    pub fn rotation_number(&self) -> Option<Angle> {
        points_rotation_number(&self.periodic_points(), self.d)
    }

    pub fn multiplicity_sum(&self) -> u64 {
        self.gaps.iter().map(|g| g.multiplicity).sum()
    }

    /// Closed under `m_d` (for the stored points).
    pub fn is_invariant(&self) -> bool {
        let pts: HashSet<Angle> = self.points().into_iter().collect();
        pts.iter().all(|p| pts.contains(&p.mul_by(self.d)))
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct GapJson {
            lo: String,
            hi: String,
            length: String,
            multiplicity: u64,
        }
        let gaps: Vec<GapJson> = self
            .gaps
            .iter()
            .map(|g| GapJson {
                lo: g.interval.lo.to_string(),
                hi: g.interval.hi.to_string(),
                length: rational_string(&g.length),
                multiplicity: g.multiplicity,
            })
            .collect();
        serde_json::json!({
            "d": self.d,
            "rotation_number": self.rotation_number().map(|t| t.to_string()),
            "orbits": self.orbits,
            "gaps": gaps,
        })
    }
}

/// Gaps between cyclically consecutive points of a sorted set.
pub fn gaps_of(sorted: &[Angle], d: u64) -> Vec<Gap> {
    let n = sorted.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        let p = sorted[0].clone();
        return vec![Gap {
            interval: CircleInterval::open(p.clone(), p),
            length: BigRational::one(),
            multiplicity: d - 1,
        }];
    }
    let dr = BigRational::from_integer(BigInt::from(d));
    (0..n)
        .map(|i| {
            let lo = sorted[i].clone();
            let hi = sorted[(i + 1) % n].clone();
            let length = lo.arc_to(&hi).to_rational();
            let multiplicity = (&dr * &length).floor().to_integer().to_u64().unwrap_or(0);
            Gap { interval: CircleInterval::open(lo, hi), length, multiplicity }
        })
        .collect()
}

/// Rotation number of a finite `m_d`-invariant set on which `m_d` is a
/// cyclic shift of the sorted points; `None` when the order is broken.
pub fn points_rotation_number(points: &[Angle], d: u64) -> Option<Angle> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    let n = pts.len();
    if n == 0 {
        return None;
    }
    let index: HashMap<&Angle, usize> = pts.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut shift = None;
    for (i, p) in pts.iter().enumerate() {
        let j = *index.get(&p.mul_by(d))?;
        let s = (j + n - i) % n;
        match shift {
            None => shift = Some(s),
            Some(s0) if s0 != s => return None,
            _ => {}
        }
    }
    Some(Angle::frac(shift? as i64, n as i64))
}

/// `m_d` preserves the cyclic order of the orbit.
pub fn is_rotation_orbit(orbit: &[Angle], d: u64) -> bool {
    points_rotation_number(orbit, d).is_some()
}

/// The complement of the finite set has room for `d - 1` disjoint open
/// arcs of length `1/d`.
pub fn has_room_for_collapse(points: &[Angle], d: u64) -> bool {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    let total: u64 = gaps_of(&pts, d).iter().map(|g| g.multiplicity).sum();
    total >= d - 1
}

/// `X_d(I)`: points whose forward orbit avoids the open arcs `I`,
/// materialised as its periodic skeleton plus a membership test.
#[derive(Clone, Debug)]
pub struct XdSet {
    pub d: u64,
    pub intervals: Vec<CircleInterval>,
    pub map: PLCircleMap,
    pub rotation_number: Angle,
    pub skeleton: RotationSet,
}

impl XdSet {
    /// Exact test: the `m_d`-orbit of `x` never enters an open arc of `I`.
    pub fn contains(&self, x: &Angle) -> bool {
        avoids(x, self.d, &self.intervals)
    }
}

fn avoids(x: &Angle, d: u64, intervals: &[CircleInterval]) -> bool {
    let mut seen = HashSet::new();
    let mut y = x.clone();
    while seen.insert(y.clone()) {
        if intervals.iter().any(|i| i.contains_open(&y)) {
            return false;
        }
        y = y.mul_by(d);
    }
    true
}

/// Computes `X_d(I)` for `d - 1` disjoint open arcs of length `1/d`.
pub fn x_d_of(intervals: &[CircleInterval], d: u64) -> Result<XdSet> {
    let g = monotone_extension(intervals, d)?;
    let tau = match rotation_number(&g)? {
        RotationNumber::Exact(t) => t,
        RotationNumber::Enclosure { .. } => {
            return Err(Error::Numerical("rotation number did not close up".into()));
        }
    };
    let q = tau.den().to_usize().ok_or_else(|| Error::Numerical("period too large".into()))?;
    let gq = g.iterate(q);
    // The lift translation P of g^q satisfies |g^q(y) - y - P| < 1, so
    // trying the integers around one displacement covers it.
    let y0 = gq.vertices[0].0.clone();
    let disp = (gq.eval_lift(&y0) - &y0).floor();
    let one = BigRational::one();
    let mut cands: Vec<Angle> = Vec::new();
    for p in [&disp - &one, disp.clone(), &disp + &one] {
        for i in 0..gq.vertices.len() {
            let ((xa, ya), (xb, yb)) = gq.segment(i);
            let ha = &ya - &xa - &p;
            let hb = &yb - &xb - &p;
            if ha.is_zero() {
                cands.push(Angle::from_rational(&xa));
            }
            if hb.is_zero() {
                cands.push(Angle::from_rational(&xb));
            }
            if ha.signum() * hb.signum() == -one.clone() {
                let s = (&yb - &ya) / (&xb - &xa);
                let y = &xa - &ha / (s - &one);
                cands.push(Angle::from_rational(&y));
            }
        }
    }
    cands.sort();
    cands.dedup();
    let mut orbits: Vec<Vec<Angle>> = Vec::new();
    let mut used: HashSet<Angle> = HashSet::new();
    for c in cands {
        if used.contains(&c) {
            continue;
        }
        let mut orb = vec![c.clone()];
        let mut y = c.mul_by(d);
        while y != c && orb.len() <= q {
            orb.push(y.clone());
            y = y.mul_by(d);
        }
        if y != c || orb.len() != q {
            continue;
        }
        if orb.iter().any(|z| intervals.iter().any(|i| i.contains_open(z))) {
            continue;
        }
        used.extend(orb.iter().cloned());
        orbits.push(orb);
    }
    if orbits.is_empty() {
        return Err(Error::Numerical("no periodic orbit found in X_d(I)".into()));
    }
    orbits.sort_by(|a, b| a.iter().min().cmp(&b.iter().min()));
    let skeleton = RotationSet::new(d, orbits, Vec::new());
    Ok(XdSet { d, intervals: intervals.to_vec(), map: g, rotation_number: tau, skeleton })
}

/// The non-wandering part: the periodic orbits only.
pub fn reduce(x: &RotationSet) -> RotationSet {
    RotationSet::new(x.d, x.orbits.clone(), Vec::new())
}

/// The unique doubling orbit with rotation number `t`, built from its gap
/// lengths `2^(k-1) / (2^n - 1)`.
pub fn goldberg_orbit(t: &Angle) -> Result<RotationSet> {
    let n = t.den().to_usize().ok_or_else(|| Error::Precondition("denominator too large".into()))?;
    let p = t.num().to_usize().unwrap();
    if n == 1 {
        return Ok(RotationSet::new(2, vec![vec![Angle::zero()]], Vec::new()));
    }
    let m: BigInt = (BigInt::one() << n) - 1;
    let mut len_num = vec![BigInt::zero(); n];
    for k in 1..=n {
        len_num[(n - 1 + k * p) % n] = BigInt::one() << (k - 1);
    }
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let s: BigInt = (i..i + p).map(|j| &len_num[j % n]).sum();
        pts.push(Angle::new(s, m.clone())?);
    }
    // Order along the orbit, starting from the smallest point.
    let mut orbit = vec![pts[0].clone()];
    let mut y = pts[0].mul_by(2);
    while y != pts[0] {
        orbit.push(y.clone());
        y = y.mul_by(2);
    }
    let set = RotationSet::new(2, vec![orbit], Vec::new());
    if set.rotation_number().as_ref() != Some(t) || set.points().len() != n {
        return Err(Error::Numerical(format!("gap construction failed for t = {t}")));
    }
    Ok(set)
}

/// Shortest and longest gap of the doubling orbit with rotation number of
/// denominator `n`.
pub fn gap_length_extremes(n: u32) -> (BigRational, BigRational) {
    let m: BigInt = (BigInt::one() << n) - 1;
    (BigRational::new(BigInt::one(), m.clone()), BigRational::new(BigInt::one() << (n - 1), m))
}

/// Width `1/(2(2^n - 1))` of the rotation-number plateau at `t` for the
/// family of half-circle collapses under doubling.
pub fn plateau_length(t: &Angle) -> BigRational {
    let n = t.den().to_u32().expect("denominator fits in u32");
    let m: BigInt = (BigInt::one() << n) - 1;
    BigRational::new(BigInt::one(), m * 2)
}

/// Counts of points per arc `[j/(d-1), (j+1)/(d-1))`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DeploymentSequence {
    pub counts: Vec<u64>,
}

pub fn deployment_sequence(x: &RotationSet) -> Result<DeploymentSequence> {
    if x.d < 2 {
        return Err(Error::Precondition("deployment needs d >= 2".into()));
    }
    Ok(deployment_of_points(&x.periodic_points(), x.d))
}

pub fn deployment_of_points(points: &[Angle], d: u64) -> DeploymentSequence {
    let mut counts = vec![0u64; (d - 1) as usize];
    for p in points {
        let j = (p.to_rational() * BigRational::from_integer(BigInt::from(d - 1))).floor();
        counts[j.to_integer().to_usize().unwrap()] += 1;
    }
    DeploymentSequence { counts }
}

/// Two rotation orbits with the same rotation number are compatible when
/// each gap of either contains exactly one point of the other. Identical
/// orbits are compatible by convention.
pub fn compatible(o1: &[Angle], o2: &[Angle], d: u64) -> Result<bool> {
    let t1 = points_rotation_number(o1, d)
        .ok_or_else(|| Error::Precondition("first orbit is not a rotation orbit".into()))?;
    let t2 = points_rotation_number(o2, d)
        .ok_or_else(|| Error::Precondition("second orbit is not a rotation orbit".into()))?;
    if t1 != t2 {
        return Err(Error::Precondition(format!("rotation numbers differ: {t1} vs {t2}")));
    }
    let mut a = o1.to_vec();
    let mut b = o2.to_vec();
    a.sort();
    a.dedup();
    b.sort();
    b.dedup();
    if a == b {
        return Ok(true);
    }
    let interleaves = |x: &[Angle], y: &[Angle]| {
        gaps_of(x, d).iter().all(|g| y.iter().filter(|p| g.interval.contains(p)).count() == 1)
    };
    Ok(interleaves(&a, &b) && interleaves(&b, &a))
}

/// `h_n(x) = (g^n(x) - x0) / D^n` for a lift of `g` fixing `x0`, where `D`
/// is the degree of `g`. Returns the value in `[0, 1)` and the error bound
/// `C / D^n`.
pub fn semiconjugacy_to_md(g: &PLCircleMap, x0: &Angle, x: &Angle, n: u32) -> Result<(f64, f64)> {
    let deg = g.degree();
    if deg < 2 {
        return Err(Error::Precondition("semiconjugacy needs degree > 1".into()));
    }
    if &g.eval(x0) != x0 {
        return Err(Error::Precondition(format!("{x0} is not fixed by g")));
    }
    let x0r = x0.to_rational();
    let shift = g.eval_lift(&x0r) - &x0r;
    let lift = |y: &BigRational| g.eval_lift(y) - &shift;
    let mut y = x.lift_above(&x0r);
    for _ in 0..n {
        y = lift(&y);
    }
    let dn = BigRational::from_integer(BigInt::from(deg).pow(n));
    let h = frac(&((y - &x0r) / &dn));
    let dr = BigRational::from_integer(BigInt::from(deg));
    let c = g
        .vertices()
        .iter()
        .map(|(vx, _)| (lift(vx) - &x0r - &dr * (vx - &x0r)).abs())
        .max()
        .unwrap_or_else(BigRational::zero);
    let bound = (c / dn).to_f64().unwrap_or(f64::INFINITY);
    Ok((h.to_f64().unwrap_or(f64::NAN), bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::ratio;

    fn a(n: i64, d: i64) -> Angle {
        Angle::frac(n, d)
    }

    fn open(lo: Angle, hi: Angle) -> CircleInterval {
        CircleInterval::open(lo, hi)
    }

    #[test]
    fn half_collapse_doubling() {
        let g = monotone_extension(&[open(a(1, 2), a(0, 1))], 2).unwrap();
        assert_eq!(g.eval(&a(1, 4)), a(1, 2));
        assert_eq!(g.eval(&a(1, 8)), a(1, 4));
        assert_eq!(g.eval(&a(3, 4)), a(0, 1));
        assert_eq!(g.eval(&a(1, 2)), a(0, 1));
        let g = monotone_extension(&[open(a(1, 4), a(3, 4))], 2).unwrap();
        assert_eq!(g.eval(&a(1, 3)), a(1, 2));
        assert_eq!(g.eval(&a(5, 8)), a(1, 2));
    }

    #[test]
    fn extension_rejects_bad_input() {
        assert!(monotone_extension(&[open(a(1, 2), a(7, 8))], 2).is_err());
        let i1 = open(a(0, 1), a(1, 3));
        let i2 = open(a(1, 6), a(1, 2));
        assert!(monotone_extension(&[i1, i2], 3).is_err());
    }

    #[test]
    fn rotation_number_examples() {
        let g = monotone_extension(&[open(a(1, 2), a(0, 1))], 2).unwrap();
        assert_eq!(rotation_number(&g).unwrap(), RotationNumber::Exact(a(0, 1)));
        let g = monotone_extension(&[open(a(3, 4), a(1, 4))], 2).unwrap();
        assert_eq!(rotation_number(&g).unwrap(), RotationNumber::Exact(a(1, 2)));
        let g = PLCircleMap::rotation(&a(1, 3));
        assert_eq!(rotation_number(&g).unwrap(), RotationNumber::Exact(a(1, 3)));
        let g3 = collapse_extension(&[open(a(0, 1), a(1, 3))], 3).unwrap();
        assert!(rotation_number(&g3).is_err());
    }

    #[test]
    fn compose_matches_pointwise() {
        let g = monotone_extension(&[open(a(5, 12), a(11, 12))], 2).unwrap();
        let g3 = g.iterate(3);
        for k in 0..50 {
            let x = a(k, 50);
            assert_eq!(g3.eval(&x), g.eval(&g.eval(&g.eval(&x))), "x = {x}");
        }
    }

    #[test]
    fn x_d_examples() {
        let x = x_d_of(&[open(a(1, 2), a(0, 1))], 2).unwrap();
        assert_eq!(x.skeleton.orbits, vec![vec![a(0, 1)]]);
        for k in 1..8 {
            assert!(x.contains(&Angle::new(1, 1i64 << k).unwrap()));
        }
        assert!(!x.contains(&a(3, 4)));
        let x = x_d_of(&[open(a(3, 4), a(1, 4))], 2).unwrap();
        assert_eq!(x.skeleton.periodic_points(), vec![a(1, 3), a(2, 3)]);
        assert_eq!(x.rotation_number, a(1, 2));
    }

    #[test]
    fn reduce_strips_wandering_points() {
        let wandering: Vec<Angle> = (1..6).map(|k| Angle::new(1, 1i64 << k).unwrap()).collect();
        let x = RotationSet::new(2, vec![vec![a(0, 1)]], wandering);
        assert_eq!(reduce(&x).points(), vec![a(0, 1)]);
        let orb = RotationSet::new(2, vec![vec![a(1, 7), a(2, 7), a(4, 7)]], vec![a(1, 14), a(9, 14)]);
        assert_eq!(reduce(&orb).points(), vec![a(1, 7), a(2, 7), a(4, 7)]);
        assert_eq!(reduce(&reduce(&orb)), reduce(&orb));
    }

    #[test]
    fn goldberg_examples() {
        assert_eq!(goldberg_orbit(&a(1, 3)).unwrap().points(), vec![a(1, 7), a(2, 7), a(4, 7)]);
        assert_eq!(goldberg_orbit(&a(2, 3)).unwrap().points(), vec![a(3, 7), a(5, 7), a(6, 7)]);
        assert_eq!(goldberg_orbit(&a(0, 1)).unwrap().points(), vec![a(0, 1)]);
        assert_eq!(goldberg_orbit(&a(1, 2)).unwrap().points(), vec![a(1, 3), a(2, 3)]);
        assert_eq!(
            goldberg_orbit(&a(1, 4)).unwrap().points(),
            vec![a(1, 15), a(2, 15), a(4, 15), a(8, 15)]
        );
    }

    #[test]
    fn gap_extremes_and_plateaus() {
        assert_eq!(gap_length_extremes(3), (ratio(1, 7), ratio(4, 7)));
        assert_eq!(gap_length_extremes(1), (ratio(1, 1), ratio(1, 1)));
        assert_eq!(gap_length_extremes(4), (ratio(1, 15), ratio(8, 15)));
        let g = goldberg_orbit(&a(1, 4)).unwrap();
        let lens: Vec<_> = g.gaps.iter().map(|x| x.length.clone()).collect();
        assert_eq!(lens.iter().min().unwrap(), &ratio(1, 15));
        assert_eq!(lens.iter().max().unwrap(), &ratio(8, 15));
        assert_eq!(plateau_length(&a(1, 2)), ratio(1, 6));
        assert_eq!(plateau_length(&a(0, 1)), ratio(1, 2));
    }

    #[test]
    fn deployment_examples() {
        let d = |pts: &[Angle]| deployment_of_points(pts, 3).counts;
        assert_eq!(d(&[a(1, 4), a(3, 4)]), vec![1, 1]);
        assert_eq!(d(&[a(1, 8), a(3, 8)]), vec![2, 0]);
        assert_eq!(d(&[a(5, 8), a(7, 8)]), vec![0, 2]);
    }

    #[test]
    fn compatibility_examples() {
        let o1 = [a(1, 4), a(3, 4)];
        let o2 = [a(1, 8), a(3, 8)];
        let o3 = [a(5, 8), a(7, 8)];
        assert!(compatible(&o1, &o2, 3).unwrap());
        assert!(compatible(&o1, &o3, 3).unwrap());
        assert!(!compatible(&o2, &o3, 3).unwrap());
        assert!(compatible(&o2, &o2, 3).unwrap());
        assert!(compatible(&o1, &[a(0, 1)], 3).is_err());
    }

    #[test]
    fn multiplicities_sum_to_d_minus_one() {
        let x = RotationSet::new(3, vec![vec![a(1, 4), a(3, 4)]], Vec::new());
        assert_eq!(x.multiplicity_sum(), 2);
        let x = RotationSet::new(3, vec![vec![a(0, 1)]], Vec::new());
        assert_eq!(x.multiplicity_sum(), 2);
        let x = RotationSet::new(2, vec![vec![a(1, 7), a(2, 7), a(4, 7)]], Vec::new());
        assert_eq!(x.multiplicity_sum(), 1);
    }

    #[test]
    fn semiconjugacy_identity_and_fixed_point() {
        // m_3 itself as a collapse-free map: build the lift directly.
        let m3 = PLCircleMap::new(vec![(BigRational::zero(), BigRational::zero())], 3).unwrap();
        for k in 0..9 {
            let x = a(k, 9);
            let (h, err) = semiconjugacy_to_md(&m3, &a(0, 1), &x, 12).unwrap();
            assert!((h - x.to_f64()).abs() <= err + 1e-15, "{x}: {h}");
        }
        let (h, _) = semiconjugacy_to_md(&m3, &a(1, 2), &a(1, 2), 5).unwrap();
        assert_eq!(h, 0.0);
        assert!(semiconjugacy_to_md(&m3, &a(1, 3), &a(1, 2), 5).is_err());
    }
}
