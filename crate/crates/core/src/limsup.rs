//! Truncated membership oracles for the sets of simultaneously,
//! multiplicatively and dually `psi`-approximable points.
//!
//! "Infinitely many solutions" has no finite test; each oracle instead
//! returns every solution up to a truncation `Q` together with per-dyadic-block
//! counts, and downstream code looks at block trends.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::approxfn::ApproxFn;
use crate::curve::PlanarCurve;
use crate::error::{Error, Result};
use crate::real::{
    certify_lt_slow, parse_rat, rat_from_f64, rat_int, rat_to_f64, Ball, Certified, Enclosure,
    Product, Rat, Surd, LIMSUP_CAP_BITS,
};

/// Cap used when re-verifying finished solutions.
pub const VERIFY_CAP_BITS: u32 = 2 * LIMSUP_CAP_BITS;

const CHUNK: u64 = 4096;
// Relative accuracy demanded of a reported error before falling back to exact arithmetic.
const REL_TOL: f64 = 1e-4;

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

/// A point `y` in `R^n` with exact coordinates (rationals or quadratic surds).
#[derive(Clone, Debug, PartialEq)]
pub struct TargetPoint {
    coords: Vec<Surd>,
    balls: Vec<Ball>,
}

impl TargetPoint {
    pub fn new(coords: Vec<Surd>) -> Result<TargetPoint> {
        if coords.is_empty() {
            return Err(Error::Precondition("a target point needs at least one coordinate".into()));
        }
        let balls = coords.iter().map(Surd::ball).collect();
        Ok(TargetPoint { coords, balls })
    }

    pub fn rational(xs: &[Rat]) -> Result<TargetPoint> {
        TargetPoint::new(xs.iter().cloned().map(Surd::rational).collect())
    }

    /// `(x, f(x))` on a curve.
    pub fn on_curve(curve: &PlanarCurve, x: &Rat) -> Result<TargetPoint> {
        TargetPoint::new(vec![Surd::rational(x.clone()), curve.point_at(x)?])
    }

    /// Point drawn uniformly from `[0,1]^n`; sample `index` of stream `seed`
    /// is the same whatever order samples are drawn in.
    pub fn sample(seed: u64, index: u64, n: usize) -> TargetPoint {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let xs: Vec<Rat> = (0..n).map(|_| rat_from_f64(rng.random::<f64>())).collect();
        TargetPoint::rational(&xs).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Surd] {
        &self.coords
    }

    pub fn is_rational(&self) -> bool {
        self.coords.iter().all(Surd::is_rational)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(Surd::to_f64).collect()
    }

    /// Accepts `sqrt2m1`, `<curve>(x=p/q)`, or comma-separated coordinates,
    /// each a rational or `[a+][b*]sqrt(r)[+c]`.
    pub fn parse(text: &str) -> Result<TargetPoint> {
        let s = text.trim();
        if let Some(body) = s.strip_suffix(')') {
            if let Some(i) = body.rfind("(x=") {
                let curve = PlanarCurve::parse(&body[..i])?;
                let xs = &body[i + 3..];
                let x = parse_rat(xs)
                    .ok_or_else(|| Error::parse(i + 4, format!("bad abscissa '{xs}'")))?;
                return TargetPoint::on_curve(&curve, &x);
            }
        }
        let mut coords = Vec::new();
        let mut col = 1;
        for tok in s.split(',') {
            let t = tok.trim();
            let c = parse_coord(t)
                .ok_or_else(|| Error::parse(col, format!("unrecognised coordinate '{t}'")))?;
            coords.push(c);
            col += tok.len() + 1;
        }
        TargetPoint::new(coords)
    }
}

fn parse_coord(tok: &str) -> Option<Surd> {
    if tok == "sqrt2m1" {
        return Surd::new(rat_int(-1), Rat::one(), rat_int(2)).ok();
    }
    if let Some(r) = parse_rat(tok) {
        return Some(Surd::rational(r));
    }
    let i = tok.find("sqrt(")?;
    let close = i + tok[i..].find(')')?;
    let r = parse_rat(&tok[i + 5..close])?;
    let (mut a, b) = match tok[..i].strip_suffix('*') {
        None if i == 0 => (Rat::zero(), Rat::one()),
        None => return None,
        Some(head) => match head.rsplit_once('+') {
            Some((a, b)) if !a.is_empty() => (parse_rat(a)?, parse_rat(b)?),
            Some(("", b)) => (Rat::zero(), parse_rat(b)?),
            _ => (Rat::zero(), parse_rat(head)?),
        },
    };
    let tail = &tok[close + 1..];
    if !tail.is_empty() {
        a += parse_rat(tail.strip_prefix('+').unwrap_or(tail))?;
    }
    Surd::new(a, b, r).ok()
}

impl fmt::Display for TargetPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl Serialize for TargetPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            coordinates: Vec<String>,
            approx: Vec<f64>,
        }
        let r = Repr {
            coordinates: self.coords.iter().map(|c| c.to_string()).collect(),
            approx: self.to_f64(),
        };
        r.serialize(s)
    }
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simultaneous,
    Multiplicative,
    Dual,
}

impl Kind {
    pub fn parse(s: &str) -> Result<Kind> {
        match s.trim() {
            "sim" | "simultaneous" => Ok(Kind::Simultaneous),
            "mult" | "multiplicative" => Ok(Kind::Multiplicative),
            "dual" => Ok(Kind::Dual),
            other => Err(Error::parse(1, format!("unknown kind '{other}' (sim|mult|dual)"))),
        }
    }
}

/// One solution. For simultaneous and multiplicative records `p[i]` is the
/// integer nearest `q y_i` and `err[i] = ||q y_i||`. For dual records `a` is the
/// integer vector, `q = Pi_+(a)`, `p = [nearest integer to a.y]` and
/// `err = [||a.y||]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Solution {
    pub q: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<i64>,
    pub p: Vec<i64>,
    pub err: Vec<f64>,
}

/// All solutions up to a truncation, re-verified when built.
#[derive(Clone, Debug, Serialize)]
pub struct MembershipRecord {
    kind: Kind,
    point: TargetPoint,
    #[serde(rename = "Q")]
    q_max: u64,
    solutions: Vec<Solution>,
    block_counts: BTreeMap<u32, u64>,
}

/// The `t` with `q` in `(2^(t-1), 2^t]`.
pub fn dyadic_block(q: u64) -> u32 {
    if q <= 1 {
        0
    } else {
        64 - (q - 1).leading_zeros()
    }
}

impl MembershipRecord {
    fn build(
        kind: Kind,
        point: &TargetPoint,
        q_max: u64,
        solutions: Vec<Solution>,
        psis: &[ApproxFn],
    ) -> Result<MembershipRecord> {
        let mut rec = MembershipRecord {
            kind,
            point: point.clone(),
            q_max,
            solutions,
            block_counts: BTreeMap::new(),
        };
        if !rec.reverify(psis)? {
            return Err(Error::Ambiguous("a solution failed re-verification".into()));
        }
        for s in &rec.solutions {
            *rec.block_counts.entry(dyadic_block(s.q)).or_insert(0) += 1;
        }
        Ok(rec)
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn point(&self) -> &TargetPoint {
        &self.point
    }

    pub fn q_max(&self) -> u64 {
        self.q_max
    }

    pub fn solutions(&self) -> &[Solution] {
        &self.solutions
    }

    pub fn block_counts(&self) -> &BTreeMap<u32, u64> {
        &self.block_counts
    }

    pub fn denominators(&self) -> Vec<u64> {
        self.solutions.iter().map(|s| s.q).collect()
    }

    /// Re-checks every solution against its strict inequality with enclosures
    /// only (no float fast path), up to [`VERIFY_CAP_BITS`].
    pub fn reverify(&self, psis: &[ApproxFn]) -> Result<bool> {
        let y = &self.point;
        for s in &self.solutions {
            let ok = match self.kind {
                Kind::Simultaneous => sim_exact(y, psis, s.q, VERIFY_CAP_BITS)?,
                Kind::Multiplicative => mult_exact(y, &psis[0], s.q, VERIFY_CAP_BITS)?,
                Kind::Dual => dual_exact(y, &psis[0], &s.a, s.q, VERIFY_CAP_BITS)?,
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

// ---------------------------------------------------------------------------
// Per-q decisions
// ---------------------------------------------------------------------------

fn scaled(y: &Surd, k: i64) -> Surd {
    y.scale(&rat_int(k))
}

fn ambiguous_at(e: Error, what: &str) -> Error {
    match e {
        Error::Ambiguous(m) => Error::Ambiguous(format!("{what}: {m}")),
        e => e,
    }
}

fn precise_f64(s: &Surd) -> f64 {
    if let Some(r) = s.as_rational() {
        return rat_to_f64(r);
    }
    let e = s.enclose(256);
    rat_to_f64(&((&e.lo + &e.hi) / rat_int(2)))
}

/// Nearest integer to `b`'s centre and the distance to it, if the ball is
/// tight enough to trust both.
fn nearest_from_ball(b: Ball) -> Option<(i64, f64)> {
    let m = b.mid.round();
    let d = (b.mid - m).abs();
    (d + b.rad < 0.5 - 1e-9 && b.rad <= d * REL_TOL && m.abs() < 9e15).then_some((m as i64, d))
}

fn nearest_exact(s: &Surd) -> Result<(i64, f64)> {
    let m = s.nearest_int();
    let d = s.add_rat(&-Rat::from_integer(m.clone()));
    let m = m
        .to_i64()
        .ok_or_else(|| Error::Domain(format!("nearest integer to {s} exceeds 64 bits")))?;
    Ok((m, precise_f64(&d).abs()))
}

/// `(round(q y_i), ||q y_i||)`.
fn coord_nearest(y: &TargetPoint, i: usize, q: u64) -> Result<(i64, f64)> {
    let b = Ball::exact(q as f64) * y.balls[i];
    match nearest_from_ball(b) {
        Some(r) => Ok(r),
        None => nearest_exact(&scaled(&y.coords[i], q as i64)),
    }
}

fn sim_exact(y: &TargetPoint, psis: &[ApproxFn], q: u64, cap: u32) -> Result<bool> {
    for (c, psi) in y.coords.iter().zip(psis) {
        let d = scaled(c, q as i64).dist_to_int();
        if !certify_lt_slow(&d, &psi.threshold(q, 1), cap)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn sim_accepts(y: &TargetPoint, psis: &[ApproxFn], q: u64) -> Result<bool> {
    let qb = Ball::exact(q as f64);
    for (i, psi) in psis.iter().enumerate() {
        let d = (qb * y.balls[i]).dist_to_int();
        let ok = match d.lt(psi.ball(q)) {
            Some(b) => b,
            None => {
                let d = scaled(&y.coords[i], q as i64).dist_to_int();
                certify_lt_slow(&d, &psi.threshold(q, 1), LIMSUP_CAP_BITS)
                    .map_err(|e| ambiguous_at(e, &format!("q={q}")))?
            }
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

fn mult_exact(y: &TargetPoint, psi: &ApproxFn, q: u64, cap: u32) -> Result<bool> {
    let ds: Vec<Surd> = y.coords.iter().map(|c| scaled(c, q as i64).dist_to_int()).collect();
    let prod = Product(ds.iter().map(|d| d as &dyn Certified).collect());
    certify_lt_slow(&prod, &psi.threshold(q, 1), cap)
}

fn mult_accepts(y: &TargetPoint, psi: &ApproxFn, q: u64) -> Result<bool> {
    let qb = Ball::exact(q as f64);
    let prod = y.balls.iter().fold(Ball::exact(1.0), |acc, b| acc * (qb * *b).dist_to_int());
    if let Some(b) = prod.lt(psi.ball(q)) {
        return Ok(b);
    }
    mult_exact(y, psi, q, LIMSUP_CAP_BITS).map_err(|e| ambiguous_at(e, &format!("q={q}")))
}

fn solution_at(y: &TargetPoint, q: u64) -> Result<Solution> {
    let mut p = Vec::with_capacity(y.dim());
    let mut err = Vec::with_capacity(y.dim());
    for i in 0..y.dim() {
        let (m, d) = coord_nearest(y, i, q)?;
        p.push(m);
        err.push(d);
    }
    Ok(Solution { q, a: Vec::new(), p, err })
}

/// `Pi_+(a) = prod max(1, |a_i|)`.
pub fn pi_plus(a: &[i64]) -> u64 {
    a.iter().map(|x| x.unsigned_abs().max(1)).product()
}

/// `a.y` as a single surd when the coordinates share a radicand.
fn linear_surd(y: &TargetPoint, a: &[i64]) -> Option<Surd> {
    let mut acc = Surd::rational(Rat::zero());
    for (k, c) in a.iter().zip(&y.coords) {
        acc = acc.add(&scaled(c, *k))?;
    }
    Some(acc)
}

/// `||a.y||` for coordinates with mixed radicands.
struct LinearDist<'a> {
    a: &'a [i64],
    y: &'a [Surd],
}

impl LinearDist<'_> {
    fn value(&self, prec: u32) -> Enclosure {
        let mut e = Enclosure::point(Rat::zero());
        for (k, c) in self.a.iter().zip(self.y) {
            let extra = 64 - k.unsigned_abs().leading_zeros();
            e = e.add(&c.enclose(prec + extra + 4).scale(&rat_int(*k)));
        }
        e
    }
}

impl Certified for LinearDist<'_> {
    fn ball(&self) -> Ball {
        linear_ball(self.y.iter().map(Surd::ball), self.a).dist_to_int()
    }
    fn enclose(&self, prec: u32) -> Enclosure {
        self.value(prec).dist_to_int()
    }
}

fn linear_ball(balls: impl Iterator<Item = Ball>, a: &[i64]) -> Ball {
    balls.zip(a).fold(Ball::exact(0.0), |acc, (b, k)| acc + Ball::exact(*k as f64) * b)
}

fn dual_exact(y: &TargetPoint, psi: &ApproxFn, a: &[i64], q: u64, cap: u32) -> Result<bool> {
    match linear_surd(y, a) {
        Some(s) => certify_lt_slow(&s.dist_to_int(), &psi.threshold(q, 1), cap),
        None => certify_lt_slow(&LinearDist { a, y: &y.coords }, &psi.threshold(q, 1), cap),
    }
}

fn dual_accepts(y: &TargetPoint, psi: &ApproxFn, a: &[i64], q: u64) -> Result<bool> {
    let d = linear_ball(y.balls.iter().copied(), a).dist_to_int();
    if let Some(b) = d.lt(psi.ball(q)) {
        return Ok(b);
    }
    dual_exact(y, psi, a, q, LIMSUP_CAP_BITS).map_err(|e| ambiguous_at(e, &format!("a={a:?}")))
}

/// `(round(a.y), ||a.y||)`.
fn dual_nearest(y: &TargetPoint, a: &[i64]) -> Result<(i64, f64)> {
    if let Some(r) = nearest_from_ball(linear_ball(y.balls.iter().copied(), a)) {
        return Ok(r);
    }
    if let Some(s) = linear_surd(y, a) {
        return nearest_exact(&s);
    }
    let e = LinearDist { a, y: &y.coords }.value(256);
    let mid = (&e.lo + &e.hi) / rat_int(2);
    let m = crate::real::nearest_int_rat(&mid);
    let d = rat_to_f64(&(mid - Rat::from_integer(m.clone()))).abs();
    let m = m.to_i64().ok_or_else(|| Error::Domain("nearest integer exceeds 64 bits".into()))?;
    Ok((m, d))
}

/// `||a.y||` as an exact surd, when the coordinates share a radicand.
pub fn dual_distance(y: &TargetPoint, a: &[i64]) -> Option<Surd> {
    Some(linear_surd(y, a)?.dist_to_int())
}

/// Nonzero integer vectors with `Pi_+(a) <= a_max`, one per `{a, -a}` pair
/// (first nonzero entry positive), in lexicographic order of enumeration.
pub fn hyperbolic_vectors(n: usize, a_max: u64) -> Vec<Vec<i64>> {
    fn rec(n: usize, budget: u64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == n {
            if cur.iter().find(|x| **x != 0).is_some_and(|x| *x > 0) {
                out.push(cur.clone());
            }
            return;
        }
        let b = budget as i64;
        for v in -b..=b {
            // Vectors whose leading entries are all zero must continue positive.
            if v < 0 && cur.iter().all(|x| *x == 0) {
                continue;
            }
            cur.push(v);
            rec(n, budget / v.unsigned_abs().max(1), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, a_max, &mut Vec::with_capacity(n), &mut out);
    out
}

fn scan<F>(lo: u64, hi: u64, f: F) -> Result<Vec<Solution>>
where
    F: Fn(u64) -> Result<Option<Solution>> + Sync,
{
    if lo > hi {
        return Ok(Vec::new());
    }
    let chunks: Vec<(u64, u64)> =
        (0..=(hi - lo) / CHUNK).map(|k| (lo + k * CHUNK, (lo + (k + 1) * CHUNK - 1).min(hi))).collect();
    let parts: Vec<Result<Vec<Solution>>> = chunks
        .into_par_iter()
        .map(|(a, b)| {
            let mut v = Vec::new();
            for q in a..=b {
                if let Some(s) = f(q)? {
                    v.push(s);
                }
            }
            Ok(v)
        })
        .collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn check_truncation(psis: &[ApproxFn], q_max: u64) -> Result<u64> {
    let h0 = psis.iter().map(ApproxFn::h0).max().unwrap_or(1);
    if q_max < h0 {
        return Err(Error::Precondition(format!("Q={q_max} is below the domain start h0={h0}")));
    }
    Ok(h0)
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// All `q` in `[h0, Q]` with `||q y_i|| < psi_i(q)` for every `i`.
pub fn simultaneous_solutions(
    y: &TargetPoint,
    psis: &[ApproxFn],
    q_max: u64,
) -> Result<MembershipRecord> {
    if psis.len() != y.dim() {
        return Err(Error::Precondition(format!(
            "{} approximating functions for a point in dimension {}",
            psis.len(),
            y.dim()
        )));
    }
    let h0 = check_truncation(psis, q_max)?;
    let sols = scan(h0, q_max, |q| {
        if sim_accepts(y, psis, q)? {
            Ok(Some(solution_at(y, q)?))
        } else {
            Ok(None)
        }
    })?;
    MembershipRecord::build(Kind::Simultaneous, y, q_max, sols, psis)
}

/// All `q` in `[h0, Q]` with `prod ||q y_i|| < psi(q)`.
pub fn multiplicative_solutions(
    y: &TargetPoint,
    psi: &ApproxFn,
    q_max: u64,
) -> Result<MembershipRecord> {
    let psis = std::slice::from_ref(psi);
    let h0 = check_truncation(psis, q_max)?;
    let sols = scan(h0, q_max, |q| {
        if mult_accepts(y, psi, q)? {
            Ok(Some(solution_at(y, q)?))
        } else {
            Ok(None)
        }
    })?;
    MembershipRecord::build(Kind::Multiplicative, y, q_max, sols, psis)
}

/// All `a` (up to sign) with `h0 <= Pi_+(a) <= A` and `||a.y|| < psi(Pi_+(a))`,
/// sorted by `(Pi_+(a), a)`.
pub fn dual_solutions(y: &TargetPoint, psi: &ApproxFn, a_max: u64) -> Result<MembershipRecord> {
    if a_max < 1 {
        return Err(Error::Precondition("A must be at least 1".into()));
    }
    let h0 = psi.h0();
    let vectors = hyperbolic_vectors(y.dim(), a_max);
    let parts: Vec<Result<Option<Solution>>> = vectors
        .into_par_iter()
        .map(|a| {
            let q = pi_plus(&a);
            if q < h0 || !dual_accepts(y, psi, &a, q)? {
                return Ok(None);
            }
            let (m, d) = dual_nearest(y, &a)?;
            Ok(Some(Solution { q, a, p: vec![m], err: vec![d] }))
        })
        .collect();
    let mut sols = Vec::new();
    for p in parts {
        sols.extend(p?);
    }
    sols.sort_by(|x, y| (x.q, &x.a).cmp(&(y.q, &y.a)));
    MembershipRecord::build(Kind::Dual, y, a_max, sols, std::slice::from_ref(psi))
}

// ---------------------------------------------------------------------------
// Inclusions
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindPair {
    /// `S_n(psi_1..psi_n)` inside `S*_n(psi)`.
    SimultaneousInMultiplicative,
}

#[derive(Clone, Debug)]
pub struct InclusionParams {
    pub psis: Vec<ApproxFn>,
    pub psi: ApproxFn,
}

impl InclusionParams {
    /// Power functions `h^-v_i` on the left and `h^-v` on the right.
    pub fn exponents(vs: &[Rat], v: &Rat) -> Result<InclusionParams> {
        let psis = vs.iter().map(|x| ApproxFn::power(x.clone())).collect::<Result<Vec<_>>>()?;
        Ok(InclusionParams { psis, psi: ApproxFn::power(v.clone())? })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InclusionVerdict {
    Pass,
    /// Violations found where `psi < prod psi_i` somewhere in range.
    HypothesisUnmet,
    /// Violations despite the hypothesis holding.
    Bug,
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub sample: u64,
    pub point: Vec<f64>,
    pub q: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InclusionReport {
    pub pair: KindPair,
    pub samples: u64,
    #[serde(rename = "Q")]
    pub q_max: u64,
    pub seed: u64,
    pub left_solutions: u64,
    pub undecided: u64,
    /// Number of `q` in range where `psi(q) < prod psi_i(q)`.
    pub hypothesis_failures: u64,
    pub violations: Vec<Violation>,
    pub verdict: InclusionVerdict,
}

fn power_log_all(fs: &[&ApproxFn]) -> Option<Vec<(f64, Rat, Rat, Rat)>> {
    fs.iter()
        .map(|f| f.as_power_log().map(|p| (rat_to_f64(&p.c), p.c.clone(), p.a.clone(), p.b.clone())))
        .collect()
}

/// Whether `psi(q) >= prod psi_i(q)`; undecidable ties count as holding.
fn dominates_at(params: &InclusionParams, q: u64) -> bool {
    let mut all: Vec<&ApproxFn> = vec![&params.psi];
    all.extend(params.psis.iter());
    if let Some(pl) = power_log_all(&all) {
        let (mut c, mut a, mut b) = (pl[0].1.clone(), pl[0].2.clone(), pl[0].3.clone());
        for (_, ci, ai, bi) in &pl[1..] {
            c /= ci;
            a -= ai;
            b -= bi;
        }
        if a.is_zero() && b.is_zero() {
            return c >= Rat::one();
        }
        let l = (q as f64).ln();
        let mut v = rat_to_f64(&c).ln() - rat_to_f64(&a) * l;
        if !b.is_zero() {
            v -= rat_to_f64(&b) * l.ln();
        }
        return v >= -1e-12;
    }
    let prod = params.psis.iter().fold(Ball::exact(1.0), |acc, f| acc * f.ball(q));
    params.psi.ball(q).lt(prod) != Some(true)
}

/// Draws `sample_count` seeded points of `[0,1]^n`, collects each truncated
/// left-set solution and checks it against the right-set inequality.
pub fn inclusion_check(
    pair: KindPair,
    params: &InclusionParams,
    sample_count: u64,
    q_max: u64,
    seed: u64,
) -> Result<InclusionReport> {
    let KindPair::SimultaneousInMultiplicative = pair;
    let n = params.psis.len();
    if n == 0 {
        return Err(Error::Precondition("no left-hand approximating functions".into()));
    }
    let mut all = params.psis.clone();
    all.push(params.psi.clone());
    let h0 = check_truncation(&all, q_max)?;
    let hypothesis_failures = (h0..=q_max).into_par_iter().filter(|q| !dominates_at(params, *q)).count();

    let per_sample: Vec<Result<(u64, u64, Vec<Violation>)>> = (0..sample_count)
        .into_par_iter()
        .map(|i| {
            let y = TargetPoint::sample(seed, i, n);
            let rec = simultaneous_solutions(&y, &params.psis, q_max)?;
            let mut undecided = 0;
            let mut viol = Vec::new();
            for s in rec.solutions() {
                if s.q < params.psi.h0() {
                    continue;
                }
                match mult_accepts(&y, &params.psi, s.q) {
                    Ok(true) => {}
                    Ok(false) => viol.push(Violation { sample: i, point: y.to_f64(), q: s.q }),
                    Err(Error::Ambiguous(_)) => undecided += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok((rec.solutions().len() as u64, undecided, viol))
        })
        .collect();
    let mut left = 0;
    let mut undecided = 0;
    let mut violations = Vec::new();
    for r in per_sample {
        let (l, u, v) = r?;
        left += l;
        undecided += u;
        violations.extend(v);
    }
    let verdict = if violations.is_empty() {
        InclusionVerdict::Pass
    } else if hypothesis_failures > 0 {
        InclusionVerdict::HypothesisUnmet
    } else {
        InclusionVerdict::Bug
    };
    Ok(InclusionReport {
        pair,
        samples: sample_count,
        q_max,
        seed,
        left_solutions: left,
        undecided,
        hypothesis_failures: hypothesis_failures as u64,
        violations,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Exponents
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentKind {
    SimultaneousDiagonal,
    Multiplicative,
    Dual,
}

impl ExponentKind {
    pub fn parse(s: &str) -> Result<ExponentKind> {
        match s.trim() {
            "sim" | "simultaneous-diagonal" => Ok(ExponentKind::SimultaneousDiagonal),
            "mult" | "multiplicative" => Ok(ExponentKind::Multiplicative),
            "dual" => Ok(ExponentKind::Dual),
            other => Err(Error::parse(1, format!("unknown exponent kind '{other}'"))),
        }
    }
}

/// Smallest `q` used in the exponent fit.
pub const EXPONENT_Q_MIN: u64 = 16;

/// Empirical approximation exponent of a point.
///
/// Only record-setting `q >= 16` are used (each strictly better than every
/// smaller `q`). Records of a generic point follow `err ~ C q^-w` with `w` the
/// Dirichlet exponent of the kind (`1/n`, `1`, `n`), and the raw ratio
/// `-ln err / ln q` is biased upwards by `ln C / ln q`. `value` first removes
/// the median record offset `ln C` (when positive) and then takes the maximum
/// ratio; `max_ratio` is the uncorrected maximum over all `q >= 16`. An exact
/// zero error gives `+inf` for both.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentEstimate {
    pub kind: ExponentKind,
    #[serde(rename = "Q")]
    pub q_max: u64,
    pub value: f64,
    pub max_ratio: f64,
    pub zero_count: u64,
    pub records: Vec<(u64, f64)>,
}

fn errors_by_q(y: &TargetPoint, kind: ExponentKind, q_max: u64) -> Result<Vec<f64>> {
    let mut errs = vec![f64::INFINITY; q_max as usize + 1];
    match kind {
        ExponentKind::SimultaneousDiagonal | ExponentKind::Multiplicative => {
            let mult = kind == ExponentKind::Multiplicative;
            errs[2..].par_chunks_mut(CHUNK as usize).enumerate().try_for_each(|(k, chunk)| {
                for (j, e) in chunk.iter_mut().enumerate() {
                    let q = 2 + k as u64 * CHUNK + j as u64;
                    let mut acc = if mult { 1.0 } else { 0.0 };
                    for i in 0..y.dim() {
                        let d = coord_nearest(y, i, q)?.1;
                        acc = if mult { acc * d } else { acc.max(d) };
                    }
                    *e = acc;
                }
                Ok::<(), Error>(())
            })?;
        }
        ExponentKind::Dual => {
            let vs = hyperbolic_vectors(y.dim(), q_max);
            let ds: Vec<Result<(u64, f64)>> = vs
                .par_iter()
                .map(|a| Ok((pi_plus(a), dual_nearest(y, a)?.1)))
                .collect();
            for r in ds {
                let (q, d) = r?;
                if q >= 2 {
                    errs[q as usize] = errs[q as usize].min(d);
                }
            }
        }
    }
    Ok(errs)
}

pub fn exponent_estimate(y: &TargetPoint, kind: ExponentKind, q_max: u64) -> Result<ExponentEstimate> {
    if q_max < 64 {
        return Err(Error::Precondition(format!("Q={q_max} below 64")));
    }
    let errs = errors_by_q(y, kind, q_max)?;
    let zero_count = errs.iter().filter(|e| **e == 0.0).count() as u64;
    let mut records = Vec::new();
    let mut best = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    for (q, &e) in errs.iter().enumerate().skip(2) {
        if e == 0.0 || !e.is_finite() {
            continue;
        }
        if e < best {
            best = e;
            records.push((q as u64, e));
        }
        if q as u64 >= EXPONENT_Q_MIN {
            max_ratio = max_ratio.max(-e.ln() / (q as f64).ln());
        }
    }
    if zero_count > 0 {
        let inf = f64::INFINITY;
        return Ok(ExponentEstimate { kind, q_max, value: inf, max_ratio: inf, zero_count, records });
    }
    let w = match kind {
        ExponentKind::SimultaneousDiagonal => 1.0 / y.dim() as f64,
        ExponentKind::Multiplicative => 1.0,
        ExponentKind::Dual => y.dim() as f64,
    };
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|(q, _)| *q >= EXPONENT_Q_MIN)
        .map(|(q, e)| ((*q as f64).ln(), -e.ln()))
        .collect();
    let value = if pts.is_empty() {
        max_ratio
    } else {
        let mut offs: Vec<f64> = pts.iter().map(|(x, v)| v - w * x).collect();
        offs.sort_by(f64::total_cmp);
        let m = offs.len();
        let median = if m % 2 == 1 { offs[m / 2] } else { 0.5 * (offs[m / 2 - 1] + offs[m / 2]) };
        let c = median.max(0.0);
        pts.iter().map(|(x, v)| (v - c) / x).fold(f64::NEG_INFINITY, f64::max)
    };
    Ok(ExponentEstimate { kind, q_max, value, max_ratio, zero_count, records })
}

/// `sum_{k=1}^{K} 2^(-k!)`: `||q_k y|| ~ q_k^(-k)` at `q_k = 2^(k!)`.
pub fn liouville_point(k_max: u32) -> TargetPoint {
    let mut y = Rat::zero();
    let mut f = 1u32;
    for k in 1..=k_max {
        f *= k;
        y += Rat::new(BigInt::one(), BigInt::one() << f);
    }
    TargetPoint::rational(&[y]).unwrap()
}
