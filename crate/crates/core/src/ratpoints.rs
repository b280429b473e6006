//! Rational points near curves: the counting function `N_f(Q, psi, I)`,
//! sums of two squares `r(n)`, and circle annulus sums.

use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::approxfn::ApproxFn;
use crate::curve::{Interval, PlanarCurve};
use crate::error::{Error, Result};
use crate::fit::{least_squares, LineFit};
use crate::real::{certify_lt_slow, rat_int, Ball, Rat, CURVE_CAP_BITS};

/// `(p1/q, p2/q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RationalPoint {
    pub p1: i64,
    pub p2: i64,
    pub q: u64,
}

impl RationalPoint {
    pub fn new(p1: i64, p2: i64, q: u64) -> RationalPoint {
        assert!(q >= 1, "denominator must be positive");
        RationalPoint { p1, p2, q }
    }

    /// Reduced so that `gcd(p1, p2, q) = 1`.
    pub fn canonical(p1: i64, p2: i64, q: u64) -> RationalPoint {
        let g = gcd3(p1, p2, q);
        RationalPoint { p1: p1 / g as i64, p2: p2 / g as i64, q: q / g }
    }

    pub fn is_canonical(&self) -> bool {
        gcd3(self.p1, self.p2, self.q) == 1
    }

    pub fn x(&self) -> Rat {
        Rat::new(BigInt::from(self.p1), BigInt::from(self.q))
    }

    pub fn y(&self) -> Rat {
        Rat::new(BigInt::from(self.p2), BigInt::from(self.q))
    }
}

fn gcd3(a: i64, b: i64, q: u64) -> u64 {
    let g = (a.unsigned_abs()).gcd(&b.unsigned_abs());
    g.gcd(&q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    /// Each canonical point once.
    Canonical,
    /// Every triple `(q, p1, p2)`, reduced or not.
    Multiplicity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// `psi(Q)/Q` for every `q <= Q`.
    Frozen,
    /// `psi(q)/q`; denominators below `h0` are skipped.
    PerQ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CountMethod {
    #[serde(rename = "brute")]
    Brute,
    #[serde(rename = "circle-r(n)")]
    CircleRn,
}

#[derive(Clone, Debug)]
pub struct CountOptions {
    pub mode: CountMode,
    pub rule: ThresholdRule,
    /// Keep the points when there are at most this many.
    pub emit_cap: Option<usize>,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions { mode: CountMode::Canonical, rule: ThresholdRule::Frozen, emit_cap: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    #[serde(rename = "Q")]
    pub q_max: u64,
    /// `psi(Q)/Q` (the frozen threshold; the per-q rule reports it too).
    pub threshold: f64,
    pub count: u64,
    pub method: CountMethod,
    pub mode: CountMode,
    pub rule: ThresholdRule,
    pub points: Option<Vec<RationalPoint>>,
    /// Not serialised: outputs must be reproducible byte for byte.
    #[serde(skip)]
    pub wall_time_s: f64,
}

const Q_BLOCK: u64 = 64;

struct BlockResult {
    count: u64,
    points: Vec<RationalPoint>,
    ambiguous: Vec<RationalPoint>,
}

/// Calls `visit` for every `(p1, p2)` with `p1/q` in `iv` and
/// `|q f(p1/q) - p2| < q * thr` where `thr = psi(h)/div`, decided exactly.
pub(crate) fn scan_denominator(
    curve: &PlanarCurve,
    iv: &Interval,
    psi: &ApproxFn,
    q: u64,
    h: u64,
    div: u64,
    mut visit: impl FnMut(i64, i64),
    ambiguous: &mut Vec<RationalPoint>,
) {
    let qb = Ball::exact(q as f64);
    let thr = psi.ball(h).checked_div(Ball::exact(div as f64)).unwrap() * qb;
    let reach = thr.hi();
    let (a, b) = iv.numerator_range(q);
    for p1 in a..=b {
        let y = curve.scaled_ball(p1, q);
        let lo = (y.lo() - reach).floor() as i64;
        let hi = (y.hi() + reach).ceil() as i64;
        for p2 in lo..=hi {
            let d = (y - Ball::exact(p2 as f64)).abs();
            let inside = match d.lt(thr) {
                Some(v) => v,
                None => {
                    let exact = curve.scaled_exact(p1, q).add_rat(&-rat_int(p2));
                    let exact = if exact.signum().is_lt() { exact.neg() } else { exact };
                    let lhs = exact.scale(&Rat::new(BigInt::from(1), BigInt::from(q)));
                    match certify_lt_slow(&lhs, &psi.threshold(h, div), CURVE_CAP_BITS) {
                        Ok(v) => v,
                        Err(_) => {
                            ambiguous.push(RationalPoint::new(p1, p2, q));
                            false
                        }
                    }
                }
            };
            if inside {
                visit(p1, p2);
            }
        }
    }
}

/// Exact `N_f(Q, psi, I)`.
pub fn count_near_curve(
    curve: &PlanarCurve,
    psi: &ApproxFn,
    q_max: u64,
    iv: &Interval,
    opts: &CountOptions,
) -> Result<CountReport> {
    let start = Instant::now();
    if !iv.is_subset_of(curve.domain()) {
        return Err(Error::Precondition(format!("interval {iv} is not inside the curve domain {}", curve.domain())));
    }
    if q_max < psi.h0() {
        return Err(Error::Precondition(format!("Q={q_max} is below the domain start h0={}", psi.h0())));
    }
    let keep = opts.emit_cap.map(|c| c + 1).unwrap_or(0);
    let q_lo = match opts.rule {
        ThresholdRule::Frozen => 1,
        ThresholdRule::PerQ => psi.h0(),
    };
    let blocks: Vec<(u64, u64)> =
        (q_lo..=q_max).step_by(Q_BLOCK as usize).map(|s| (s, (s + Q_BLOCK - 1).min(q_max))).collect();
    let results: Vec<BlockResult> = blocks
        .par_iter()
        .map(|&(s, e)| {
            let mut r = BlockResult { count: 0, points: Vec::new(), ambiguous: Vec::new() };
            for q in s..=e {
                let (h, div) = match opts.rule {
                    ThresholdRule::Frozen => (q_max, q_max),
                    ThresholdRule::PerQ => (q, q),
                };
                let mut amb = Vec::new();
                scan_denominator(
                    curve,
                    iv,
                    psi,
                    q,
                    h,
                    div,
                    |p1, p2| {
                        if opts.mode == CountMode::Multiplicity || gcd3(p1, p2, q) == 1 {
                            r.count += 1;
                            if r.points.len() < keep {
                                r.points.push(RationalPoint::new(p1, p2, q));
                            }
                        }
                    },
                    &mut amb,
                );
                r.ambiguous.extend(amb);
            }
            r
        })
        .collect();
    let mut count = 0;
    let mut points = Vec::new();
    let mut ambiguous = Vec::new();
    for r in results {
        count += r.count;
        if points.len() < keep {
            points.extend(r.points.into_iter().take(keep - points.len()));
        }
        ambiguous.extend(r.ambiguous);
    }
    if !ambiguous.is_empty() {
        let list: Vec<String> = ambiguous.iter().take(20).map(|p| format!("({},{})/{}", p.p1, p.p2, p.q)).collect();
        return Err(Error::Ambiguous(format!(
            "{} distance comparisons undecided at 2^-{}: {}",
            ambiguous.len(),
            CURVE_CAP_BITS,
            list.join(", ")
        )));
    }
    let points = match opts.emit_cap {
        Some(cap) if count as usize <= cap => Some(points),
        _ => None,
    };
    Ok(CountReport {
        q_max,
        threshold: psi.raw(q_max) / q_max as f64,
        count,
        method: CountMethod::Brute,
        mode: opts.mode,
        rule: opts.rule,
        points,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Sums of two squares
// ---------------------------------------------------------------------------

/// `r(n)` by direct enumeration of `a` in `[-floor(sqrt n), floor(sqrt n)]`.
pub fn r2_enum(n: u64) -> u64 {
    let s = n.isqrt() as i64;
    let mut count = 0;
    for a in -s..=s {
        let rest = n - (a * a) as u64;
        let b = rest.isqrt();
        if b * b == rest {
            count += if b == 0 { 1 } else { 2 };
        }
    }
    count
}

/// `r(n)` for every `n <= n_max` by tallying lattice points in the disc.
pub fn r2_table_enum(n_max: u64) -> Vec<u32> {
    let mut t = vec![0u32; n_max as usize + 1];
    let s = n_max.isqrt() as i64;
    for a in -s..=s {
        let aa = (a * a) as u64;
        let bmax = (n_max - aa).isqrt() as i64;
        for b in -bmax..=bmax {
            t[(aa + (b * b) as u64) as usize] += 1;
        }
    }
    t
}

/// `r(n) = 4 (d_1(n) - d_3(n))` from the factorisation of `n`.
pub fn r2_formula(n: u64) -> u64 {
    assert!(n >= 1);
    let mut acc = 4u64;
    for (p, e) in factor(n) {
        match p % 4 {
            1 => acc *= e as u64 + 1,
            3 if e % 2 == 1 => return 0,
            _ => {}
        }
    }
    acc
}

/// `r(n)` for `n` in `[lo, hi]` by a segmented factor sieve.
pub fn r2_segment(lo: u64, hi: u64) -> Vec<u32> {
    assert!(lo >= 1 && lo <= hi);
    let len = (hi - lo + 1) as usize;
    let mut rem: Vec<u64> = (lo..=hi).collect();
    let mut acc = vec![1u32; len];
    let mut bad = vec![false; len];
    for p in primes_up_to(hi.isqrt()) {
        let first = lo.div_ceil(p) * p;
        let mut m = first;
        while m <= hi {
            let i = (m - lo) as usize;
            let mut e = 0;
            while rem[i].is_multiple_of(p) {
                rem[i] /= p;
                e += 1;
            }
            match p % 4 {
                1 => acc[i] *= e + 1,
                3 if e % 2 == 1 => bad[i] = true,
                _ => {}
            }
            m += p;
        }
    }
    (0..len)
        .map(|i| {
            if rem[i] > 1 {
                match rem[i] % 4 {
                    1 => acc[i] *= 2,
                    3 => bad[i] = true,
                    _ => {}
                }
            }
            if bad[i] {
                0
            } else {
                4 * acc[i]
            }
        })
        .collect()
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let mut sieve = vec![true; n as usize + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n as usize {
        if sieve[i] {
            let mut j = i * i;
            while j <= n as usize {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve.iter().enumerate().filter(|(_, &p)| p).map(|(i, _)| i as u64).collect()
}

const TRIAL_LIMIT: u64 = 1_000_000;

/// Prime factorisation: trial division to 10^6, then Miller-Rabin and
/// Pollard rho.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let push = |out: &mut Vec<(u64, u32)>, p: u64| match out.iter_mut().find(|(q, _)| *q == p) {
        Some(e) => e.1 += 1,
        None => out.push((p, 1)),
    };
    let mut d = 2u64;
    while d * d <= n && d <= TRIAL_LIMIT {
        while n.is_multiple_of(d) {
            push(&mut out, d);
            n /= d;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        let mut stack = vec![n];
        while let Some(m) = stack.pop() {
            if m == 1 {
                continue;
            }
            if is_prime(m) {
                push(&mut out, m);
                continue;
            }
            let f = pollard_rho(m);
            stack.push(f);
            stack.push(m / f);
        }
    }
    out.sort_unstable();
    out
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A non-trivial factor of a composite `n` (Brent's variant).
fn pollard_rho(n: u64) -> u64 {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = x.abs_diff(y).gcd(&n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

// ---------------------------------------------------------------------------
// Circle annuli
// ---------------------------------------------------------------------------

/// Open range of integers `n` with `(q - psi)^2 < n < (q + psi)^2`, `n >= 1`.
fn annulus_range(q: u64, psi: &Rat) -> Option<(u64, u64)> {
    let qr = rat_int(q as i64);
    let lo = (&qr - psi) * (&qr - psi);
    let hi = (&qr + psi) * (&qr + psi);
    let a = (lo.floor().to_integer() + BigInt::from(1)).to_u64()?.max(1);
    let b = (hi.ceil().to_integer() - BigInt::from(1)).to_u64()?;
    (a <= b).then_some((a, b))
}

fn check_annulus_pre(q_max: u64, psi: &Rat) -> Result<()> {
    if q_max <= 1 {
        return Err(Error::Precondition(format!("annulus sums need Q > 1, got {q_max}")));
    }
    if !psi.is_positive() || psi >= &rat_int(1) {
        return Err(Error::Precondition("annulus sums need 0 < Psi < 1".into()));
    }
    Ok(())
}

/// `sum_{Q < q <= 2Q} sum_{|q - sqrt n| < Psi} r(n)`, with `r(n)` from the
/// segmented sieve.
pub fn count_circle_annulus(q_max: u64, psi: &Rat) -> Result<u64> {
    check_annulus_pre(q_max, psi)?;
    let per_q: Vec<u64> = (q_max + 1..=2 * q_max)
        .into_par_iter()
        .map(|q| match annulus_range(q, psi) {
            Some((a, b)) => r2_segment(a, b).iter().map(|&r| r as u64).sum(),
            None => 0,
        })
        .collect();
    Ok(per_q.iter().sum())
}

/// For each `Psi_j` (each in `(0, 1)`), `sum_{q_lo <= q < q_hi} sum_{|q - sqrt n| < Psi_j} r(n)`,
/// from a single sieve per `q` over the widest annulus.
pub fn annulus_profile(q_lo: u64, q_hi: u64, psis: &[Rat]) -> Result<Vec<u64>> {
    for p in psis {
        check_annulus_pre(q_lo.max(2), p)?;
    }
    let Some(widest) = psis.iter().max() else { return Ok(Vec::new()) };
    let per_q: Vec<Vec<u64>> = (q_lo.max(1)..q_hi)
        .into_par_iter()
        .map(|q| {
            let Some((a, b)) = annulus_range(q, widest) else { return vec![0; psis.len()] };
            let r = r2_segment(a, b);
            let mut prefix = Vec::with_capacity(r.len() + 1);
            prefix.push(0u64);
            for &x in &r {
                prefix.push(prefix.last().unwrap() + x as u64);
            }
            psis.iter()
                .map(|p| match annulus_range(q, p) {
                    Some((lo, hi)) => prefix[(hi - a + 1) as usize] - prefix[(lo - a) as usize],
                    None => 0,
                })
                .collect()
        })
        .collect();
    let mut out = vec![0u64; psis.len()];
    for v in per_q {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    Ok(out)
}

/// Brute-force oracle: lattice pairs `(q, (p1, p2))` with `Q < q <= 2Q` and
/// `|q - sqrt(p1^2 + p2^2)| < Psi`.
pub fn count_circle_annulus_brute(q_max: u64, psi: &Rat) -> Result<u64> {
    check_annulus_pre(q_max, psi)?;
    let (num, den) = (psi.numer().clone(), psi.denom().clone());
    let big = |x: i64| BigInt::from(x);
    // |q - sqrt n| < a/b  <=>  (bq - a)^2 < b^2 n < (bq + a)^2, given bq > a.
    let hit = |q: i64, n: i64| -> bool {
        let bq = &den * big(q);
        let lo = &bq - &num;
        let hi = &bq + &num;
        let bn = &den * &den * big(n);
        (lo.is_negative() || &lo * &lo < bn) && bn < &hi * &hi
    };
    let r = 2 * q_max as i64 + 1;
    let rows: Vec<u64> = (-r..=r)
        .into_par_iter()
        .map(|p1| {
            let mut c = 0;
            for p2 in -r..=r {
                let n = p1 * p1 + p2 * p2;
                let s = (n as u64).isqrt() as i64;
                for q in (s - 1).max(q_max as i64 + 1)..=(s + 2).min(2 * q_max as i64) {
                    if hit(q, n) {
                        c += 1;
                    }
                }
            }
            c
        })
        .collect();
    Ok(rows.iter().sum())
}

/// Triples `(q, p1, p2)` with `Q < q <= 2Q`, `p1/q` in `iv`, `p2 > 0` and
/// `|q - sqrt(p1^2 + p2^2)| < Psi`, found from the annulus representations.
pub fn circle_arc_annulus_points(q_max: u64, psi: &Rat, iv: &Interval) -> Result<u64> {
    check_annulus_pre(q_max, psi)?;
    let per_q: Vec<u64> = (q_max + 1..=2 * q_max)
        .into_par_iter()
        .map(|q| {
            let Some((a, b)) = annulus_range(q, psi) else { return 0 };
            let (lo, hi) = iv.numerator_range(q);
            let r = r2_segment(a, b);
            let mut c = 0;
            for (i, &rn) in r.iter().enumerate() {
                if rn == 0 {
                    continue;
                }
                let n = a + i as u64;
                for p1 in lo.max(0)..=hi {
                    let pp = p1 as u64 * p1 as u64;
                    if pp >= n {
                        break;
                    }
                    let rest = n - pp;
                    let p2 = rest.isqrt();
                    if p2 * p2 == rest {
                        c += 1;
                    }
                }
            }
            c
        })
        .collect();
    Ok(per_q.iter().sum())
}

/// The same triples by brute force over `(q, p1)` and nearby `p2`, on the
/// upper unit-circle arc.
pub fn circle_arc_brute_points(q_max: u64, psi: &Rat, iv: &Interval) -> Result<u64> {
    check_annulus_pre(q_max, psi)?;
    let (num, den) = (psi.numer().to_i128().unwrap(), psi.denom().to_i128().unwrap());
    let per_q: Vec<u64> = (q_max + 1..=2 * q_max)
        .into_par_iter()
        .map(|q| {
            let (lo, hi) = iv.numerator_range(q);
            let qi = q as i128;
            let mut c = 0;
            for p1 in lo..=hi {
                let p1i = p1 as i128;
                // Candidates: p2^2 in ((q - 1)^2 - p1^2, (q + 1)^2 - p1^2).
                let top = (qi + 1) * (qi + 1) - p1i * p1i;
                if top <= 0 {
                    continue;
                }
                let pmax = (top as u128).isqrt() as i128;
                let bot = (qi - 1) * (qi - 1) - p1i * p1i;
                let pmin = if bot <= 0 { 1 } else { (bot as u128).isqrt() as i128 };
                for p2 in pmin.max(1)..=pmax {
                    let n = p1i * p1i + p2 * p2;
                    let (l, h) = (den * qi - num, den * qi + num);
                    if (l < 0 || l * l < den * den * n) && den * den * n < h * h {
                        c += 1;
                    }
                }
            }
            c
        })
        .collect();
    Ok(per_q.iter().sum())
}

// ---------------------------------------------------------------------------
// Huxley scan
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct HuxleyRow {
    pub t: u32,
    pub count: u64,
    pub ratio: f64,
}

/// Checks `psi(t) -> 0` and `t psi(t) -> infinity`: exactly for PowerLog
/// forms, numerically at the range ends otherwise.
pub fn check_huxley_condition(psi: &ApproxFn, t_lo: u32, t_hi: u32) -> Result<()> {
    let fail = |why: &str| Err(Error::Precondition(format!("psi must satisfy psi(t) -> 0 and t psi(t) -> infinity: {why}")));
    if let Some(p) = psi.as_power_log() {
        let one = rat_int(1);
        let to_zero = p.a.is_positive() || p.b.is_positive();
        let t_to_inf = p.a < one || (p.a == one && p.b.is_negative());
        if !to_zero {
            return fail("psi does not tend to 0");
        }
        if !t_to_inf {
            return fail("t psi(t) does not tend to infinity");
        }
        return Ok(());
    }
    let (a, b) = (1u64 << t_lo, 1u64 << t_hi);
    let (pa, pb) = (psi.raw(a.max(psi.h0())), psi.raw(b.max(psi.h0())));
    if !(pb < pa && pb < 1.0) {
        return fail("psi is not decaying over the range");
    }
    if !(b as f64 * pb > a as f64 * pa && b as f64 * pb > 1.0) {
        return fail("t psi(t) is not growing over the range");
    }
    Ok(())
}

/// Per dyadic level, `N_f(2^t, psi, I)` and `N / (psi(2^t) 4^t)`.
pub fn huxley_ratio_scan(
    curve: &PlanarCurve,
    psi: &ApproxFn,
    t_lo: u32,
    t_hi: u32,
) -> Result<Vec<HuxleyRow>> {
    check_huxley_condition(psi, t_lo, t_hi)?;
    (t_lo..=t_hi)
        .map(|t| {
            let q = 1u64 << t;
            let r = count_near_curve(curve, psi, q, curve.domain(), &CountOptions::default())?;
            let ratio = r.count as f64 / (psi.raw(q) * (q as f64) * (q as f64));
            Ok(HuxleyRow { t, count: r.count, ratio })
        })
        .collect()
}

/// Least-squares slope of `log2 N` against `t`.
pub fn huxley_slope(rows: &[HuxleyRow]) -> Option<LineFit> {
    let xs: Vec<f64> = rows.iter().map(|r| r.t as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.count.max(1) as f64).log2()).collect();
    least_squares(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::rat;
    use proptest::prelude::*;

    fn pf(s: &str) -> ApproxFn {
        ApproxFn::parse(s).unwrap()
    }

    /// Independent oracle: all `(q, p1, p2)` with exact rational arithmetic.
    fn parabola_oracle(q_max: u64, thr: Rat, canonical: bool) -> u64 {
        let mut c = 0;
        for q in 1..=q_max {
            for p1 in 1..q as i64 {
                for p2 in -1..=q as i64 + 1 {
                    let x = rat(p1, q as i64);
                    let d = (&x * &x - rat(p2, q as i64)).abs();
                    if d < thr && (!canonical || gcd3(p1, p2, q) == 1) {
                        c += 1;
                    }
                }
            }
        }
        c
    }

    #[test]
    fn parabola_small_q_matches_oracle() {
        let run = |psi: &str| {
            count_near_curve(
                &PlanarCurve::parabola(),
                &pf(psi),
                3,
                &Interval::unit(),
                &CountOptions { emit_cap: Some(100), ..Default::default() },
            )
            .unwrap()
        };
        // Frozen threshold psi(3)/3 = 1/9: (1,0)/3 and (2,1)/3 sit exactly on it.
        let r = run("h^-1");
        assert_eq!(r.count, parabola_oracle(3, rat(1, 9), true));
        assert_eq!(r.count, 0);
        let r = run("2*h^-1");
        assert_eq!(r.count, parabola_oracle(3, rat(2, 9), true));
        assert_eq!(r.points.unwrap(), vec![RationalPoint::new(1, 0, 3), RationalPoint::new(2, 1, 3)]);
    }

    #[test]
    fn parabola_oracle_agreement_mid_range() {
        for (qm, s) in [(40u64, "h^-1/2"), (33, "h^-1"), (25, "1/2*h^-0.3")] {
            let psi = pf(s);
            let thr = Rat::from_float(psi.eval(qm).unwrap() / qm as f64).unwrap();
            for (mode, canon) in [(CountMode::Canonical, true), (CountMode::Multiplicity, false)] {
                let opts = CountOptions { mode, ..Default::default() };
                let r = count_near_curve(&PlanarCurve::parabola(), &psi, qm, &Interval::unit(), &opts).unwrap();
                let o = parabola_oracle(qm, thr.clone(), canon);
                // The f64 image of the threshold may differ from the real one by an ulp,
                // which only matters on exact ties; none occur for these parameters.
                assert_eq!(r.count, o, "{s} Q={qm} {mode:?}");
            }
        }
    }

    #[test]
    fn exact_ties_are_excluded() {
        // Q=2, psi=h^-1: threshold 1/4; (1,0)/2 is at distance exactly 1/4.
        let r = count_near_curve(&PlanarCurve::parabola(), &pf("h^-1"), 2, &Interval::unit(), &CountOptions {
            emit_cap: Some(10),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(r.count, 0);
    }

    #[test]
    fn empty_range_counts_zero() {
        let iv = Interval::open(rat(1, 3), rat(2, 5)).unwrap();
        let r = count_near_curve(&PlanarCurve::parabola(), &pf("h^-1/2"), 4, &iv, &CountOptions::default()).unwrap();
        assert_eq!(r.count, 0);
    }

    #[test]
    fn preconditions() {
        let iv = Interval::open(rat(1, 2), rat(3, 2)).unwrap();
        assert!(matches!(
            count_near_curve(&PlanarCurve::parabola(), &pf("h^-1"), 10, &iv, &CountOptions::default()),
            Err(Error::Precondition(_))
        ));
        let psi = pf("h^-1*logh^3");
        assert!(count_near_curve(&PlanarCurve::parabola(), &psi, 10, &Interval::unit(), &CountOptions::default())
            .is_err());
    }

    #[test]
    fn r2_examples() {
        for (n, r) in [(1u64, 4u64), (3, 0), (25, 12), (2, 4), (5, 8), (9, 4), (65, 16)] {
            assert_eq!(r2_enum(n), r);
            assert_eq!(r2_formula(n), r);
        }
        let t = r2_table_enum(10_000);
        for n in 1..=10_000u64 {
            assert_eq!(t[n as usize] as u64, r2_formula(n));
        }
        let seg = r2_segment(9_000, 10_000);
        for (i, r) in seg.iter().enumerate() {
            assert_eq!(*r as u64, t[9_000 + i] as u64);
        }
    }

    #[test]
    fn factorisation_of_large_numbers() {
        let p = 1_000_000_007u64;
        let q = 998_244_353u64;
        assert_eq!(factor(p * q), vec![(q, 1), (p, 1)]);
        assert_eq!(factor(2u64.pow(10) * 3u64.pow(5)), vec![(2, 10), (3, 5)]);
        // 5 * 13 * 1000003^2: r = 4 * 2 * 2 * 3 when 1000003 = 3 mod 4 has even exponent.
        assert_eq!(1_000_003 % 4, 3);
        assert_eq!(r2_formula(5 * 13 * 1_000_003u64 * 1_000_003), 16);
        assert!(is_prime(18446744073709551557));
    }

    #[test]
    fn annulus_examples() {
        // Q=2, Psi=1/2: q=3 -> n in 7..=12, q=4 -> n in 13..=20.
        let v: u64 = (7..=20).map(r2_enum).sum();
        assert_eq!(count_circle_annulus(2, &rat(1, 2)).unwrap(), v);
        assert_eq!(count_circle_annulus_brute(2, &rat(1, 2)).unwrap(), v);
        // Psi -> 0: only perfect squares.
        let v: u64 = (9..=16u64).map(|q| r2_enum(q * q)).sum();
        assert_eq!(count_circle_annulus(8, &rat(1, 1_000_000)).unwrap(), v);
        assert!(count_circle_annulus(1, &rat(1, 2)).is_err());
        assert!(count_circle_annulus(4, &rat(1, 1)).is_err());
    }

    #[test]
    fn annulus_profile_matches_single_sums() {
        let psis = [rat(1, 10), rat(3, 10), rat(1, 50)];
        let prof = annulus_profile(33, 65, &psis).unwrap();
        for (p, c) in psis.iter().zip(&prof) {
            assert_eq!(*c, count_circle_annulus(32, p).unwrap());
        }
        assert!(annulus_profile(8, 16, &[rat(1, 1)]).is_err());
    }

    #[test]
    fn annulus_zero_when_no_integer_fits() {
        // For Q=1000 every annulus around q has width below 1/q^3 * 4q < 1 and
        // contains only q^2 itself; excluding it is impossible, so use a tiny Q
        // with a Psi that falls strictly between squares' neighbours.
        assert_eq!(annulus_range(3, &rat(1, 1000)), Some((9, 9)));
        let r = count_circle_annulus(2, &rat(1, 1000)).unwrap();
        assert_eq!(r, r2_enum(9) + r2_enum(16));
    }

    #[test]
    fn arc_reconciliation() {
        let iv = PlanarCurve::circle().domain().clone();
        for t in 5..=8 {
            for psi in [rat(1, 10), rat(3, 10)] {
                let a = circle_arc_annulus_points(1 << t, &psi, &iv).unwrap();
                let b = circle_arc_brute_points(1 << t, &psi, &iv).unwrap();
                assert_eq!(a, b, "Q=2^{t}");
            }
        }
    }

    #[test]
    fn huxley_precondition() {
        let p = PlanarCurve::parabola();
        assert!(matches!(huxley_ratio_scan(&p, &pf("h^-2"), 3, 4), Err(Error::Precondition(_))));
        assert!(check_huxley_condition(&pf("h^-1*logh^3"), 7, 10).is_ok());
        assert!(check_huxley_condition(&pf("h^-1"), 7, 10).is_err());
        let rows = huxley_ratio_scan(&p, &pf("h^-1/2"), 5, 7).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.ratio > 0.1 && r.ratio < 10.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn multiplicity_counts_monotone_in_q(qa in 8u64..60, extra in 1u64..40, tau in 1i64..9) {
            // Threshold frozen at psi(Q_max)/Q_max via a constant table.
            let psi = pf(&format!("h^-{tau}/10"));
            let qb = qa + extra;
            let thr = psi.eval(qb).unwrap() / qb as f64;
            let opts = CountOptions { mode: CountMode::Multiplicity, ..Default::default() };
            // Frozen rule divides by Q; undo it by scaling the table per Q.
            let at = |q: u64| {
                let f = ApproxFn::table(2, vec![thr * q as f64]).unwrap();
                count_near_curve(&PlanarCurve::parabola(), &f, q, &Interval::unit(), &opts).unwrap().count
            };
            prop_assert!(at(qa) <= at(qb));
        }

        #[test]
        fn canonical_points_are_canonical(qm in 5u64..80) {
            let r = count_near_curve(&PlanarCurve::parabola(), &pf("h^-1/2"), qm, &Interval::unit(),
                &CountOptions { emit_cap: Some(100_000), ..Default::default() }).unwrap();
            let pts = r.points.unwrap();
            prop_assert_eq!(pts.len() as u64, r.count);
            prop_assert!(pts.iter().all(|p| p.is_canonical()));
        }
    }
}
