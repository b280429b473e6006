//! Certified real arithmetic.
//!
//! Three layers are used throughout the crate:
//!
//! * [`Ball`]: an `f64` midpoint with a conservative radius. Cheap, used in
//!   every hot loop. A comparison decided by balls is final.
//! * [`Enclosure`]: a closed interval with exact rational endpoints. Produced
//!   at a requested precision and refined on demand when balls overlap.
//! * [`Surd`]: an exact quadratic surd `a + b*sqrt(r)`. Every point of a
//!   rational quadric above a rational abscissa is a surd, so distances to
//!   quadrics can be compared with rationals exactly.
//!
//! The libm functions `powf`/`ln` are assumed to be accurate to a few ulp;
//! ball radii carry a 32-ulp allowance for them. Anything the balls cannot
//! separate is re-decided with enclosures, which rely on integer arithmetic
//! only.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

const EPS: f64 = f64::EPSILON;

/// Smallest refinement precision, in bits.
pub const BASE_PREC: u32 = 64;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Exact rational value of a finite double.
pub fn rat_from_f64(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float")
}

pub fn rat_to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits as usize
}

pub fn floor_rat(x: &Rat) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn ceil_rat(x: &Rat) -> BigInt {
    -((-x.numer()).div_floor(x.denom()))
}

/// Parses `7`, `-3/4` or `0.55` into an exact rational.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rat::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let d = num_traits::pow(BigInt::from(10), frac_part.len());
    let v = Rat::new(n, d);
    Some(if neg { -v } else { v })
}

/// Canonical text for a rational: `p` or `p/q`.
pub fn fmt_rat(x: &Rat) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

// ---------------------------------------------------------------------------
// Balls
// ---------------------------------------------------------------------------

/// An `f64` midpoint with an absolute error radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub mid: f64,
    pub rad: f64,
}

impl Ball {
    pub const fn exact(x: f64) -> Ball {
        Ball { mid: x, rad: 0.0 }
    }

    pub fn new(mid: f64, rad: f64) -> Ball {
        Ball { mid, rad }
    }

    /// A value computed by a handful of libm calls; radius covers 32 ulp.
    pub fn libm(x: f64) -> Ball {
        Ball { mid: x, rad: x.abs() * 32.0 * EPS }
    }

    fn rounded(mid: f64, rad: f64) -> Ball {
        Ball { mid, rad: (rad * (1.0 + 4.0 * EPS)) + mid.abs() * EPS + f64::MIN_POSITIVE }
    }

    /// Ball covering `[lo, hi]`.
    pub fn from_bounds(lo: f64, hi: f64) -> Ball {
        Ball::rounded(0.5 * (lo + hi), 0.5 * (hi - lo))
    }

    pub fn min(self, o: Ball) -> Ball {
        Ball::from_bounds(self.lo().min(o.lo()), self.hi().min(o.hi()))
    }

    pub fn max(self, o: Ball) -> Ball {
        Ball::from_bounds(self.lo().max(o.lo()), self.hi().max(o.hi()))
    }

    pub fn lo(&self) -> f64 {
        self.mid - self.rad - (self.mid.abs() + self.rad) * EPS
    }

    pub fn hi(&self) -> f64 {
        self.mid + self.rad + (self.mid.abs() + self.rad) * EPS
    }

    /// `None` when `o` may contain zero.
    pub fn checked_div(self, o: Ball) -> Option<Ball> {
        let den_lo = o.mid.abs() - o.rad;
        if den_lo <= 0.0 {
            return None;
        }
        let mid = self.mid / o.mid;
        let rad = (self.rad + mid.abs() * o.rad) / den_lo;
        Some(Ball::rounded(mid, rad))
    }

    pub fn abs(self) -> Ball {
        Ball { mid: self.mid.abs(), rad: self.rad }
    }

    pub fn sqrt(self) -> Option<Ball> {
        let lo = self.lo();
        if lo <= 0.0 {
            return None;
        }
        let mid = self.mid.sqrt();
        Some(Ball::rounded(mid, self.rad / (lo.sqrt() + mid)))
    }

    /// Distance to the nearest integer. `||.||` is 1-Lipschitz, so the radius
    /// carries over unchanged.
    pub fn dist_to_int(self) -> Ball {
        let d = (self.mid - self.mid.round()).abs();
        Ball::rounded(d, self.rad)
    }

    /// Strict `<`, or `None` when the balls overlap.
    pub fn lt(self, o: Ball) -> Option<bool> {
        if self.hi() < o.lo() {
            Some(true)
        } else if self.lo() >= o.hi() {
            Some(false)
        } else {
            None
        }
    }
}

impl std::ops::Add for Ball {
    type Output = Ball;
    fn add(self, o: Ball) -> Ball {
        Ball::rounded(self.mid + o.mid, self.rad + o.rad)
    }
}

impl std::ops::Sub for Ball {
    type Output = Ball;
    fn sub(self, o: Ball) -> Ball {
        Ball::rounded(self.mid - o.mid, self.rad + o.rad)
    }
}

impl std::ops::Mul for Ball {
    type Output = Ball;
    fn mul(self, o: Ball) -> Ball {
        let mid = self.mid * o.mid;
        let rad = self.mid.abs() * o.rad + o.mid.abs() * self.rad + self.rad * o.rad;
        Ball::rounded(mid, rad)
    }
}

// ---------------------------------------------------------------------------
// Enclosures
// ---------------------------------------------------------------------------

/// A closed interval `[lo, hi]` with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rat,
    pub hi: Rat,
}

impl Enclosure {
    pub fn point(x: Rat) -> Enclosure {
        Enclosure { lo: x.clone(), hi: x }
    }

    pub fn new(lo: Rat, hi: Rat) -> Enclosure {
        debug_assert!(lo <= hi);
        Enclosure { lo, hi }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn add(&self, o: &Enclosure) -> Enclosure {
        Enclosure { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    pub fn sub(&self, o: &Enclosure) -> Enclosure {
        Enclosure { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }

    pub fn neg(&self) -> Enclosure {
        Enclosure { lo: -&self.hi, hi: -&self.lo }
    }

    pub fn add_rat(&self, r: &Rat) -> Enclosure {
        Enclosure { lo: &self.lo + r, hi: &self.hi + r }
    }

    pub fn scale(&self, r: &Rat) -> Enclosure {
        let a = &self.lo * r;
        let b = &self.hi * r;
        if a <= b {
            Enclosure { lo: a, hi: b }
        } else {
            Enclosure { lo: b, hi: a }
        }
    }

    pub fn mul(&self, o: &Enclosure) -> Enclosure {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Enclosure { lo, hi }
    }

    /// Reciprocal of a strictly positive enclosure.
    pub fn recip_pos(&self) -> Enclosure {
        assert!(self.lo.is_positive(), "reciprocal of non-positive enclosure");
        Enclosure { lo: self.hi.recip(), hi: self.lo.recip() }
    }

    pub fn abs(&self) -> Enclosure {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            let m = std::cmp::max(-&self.lo, self.hi.clone());
            Enclosure { lo: Rat::zero(), hi: m }
        }
    }

    /// Enclosure of `||x||` over the interval.
    pub fn dist_to_int(&self) -> Enclosure {
        let half = rat(1, 2);
        let m_lo = floor_rat(&(&self.lo + &half));
        let m_hi = floor_rat(&(&self.hi + &half));
        if m_lo == m_hi {
            let m = Rat::from_integer(m_lo);
            let a = (&self.lo - &m).abs();
            let b = (&self.hi - &m).abs();
            let hi = std::cmp::max(a.clone(), b.clone());
            let lo = if self.contains(&m) { Rat::zero() } else { std::cmp::min(a, b) };
            Enclosure { lo, hi }
        } else {
            // Straddles a half-integer: the maximum 1/2 is attained inside.
            let a = dist_to_int_rat(&self.lo);
            let b = dist_to_int_rat(&self.hi);
            let lo = if m_hi - m_lo > BigInt::one() { Rat::zero() } else { std::cmp::min(a, b) };
            Enclosure { lo, hi: half }
        }
    }

    /// Outward rounding of both endpoints to multiples of `2^-bits`.
    pub fn round_out(&self, bits: u32) -> Enclosure {
        let s = Rat::from_integer(pow2(bits));
        let lo = Rat::new(floor_rat(&(&self.lo * &s)), pow2(bits));
        let hi = Rat::new(ceil_rat(&(&self.hi * &s)), pow2(bits));
        Enclosure { lo, hi }
    }

    /// Strict `<`, or `None` when the enclosures overlap.
    pub fn lt(&self, o: &Enclosure) -> Option<bool> {
        if self.hi < o.lo {
            Some(true)
        } else if self.lo >= o.hi {
            Some(false)
        } else {
            None
        }
    }

    pub fn to_ball(&self) -> Ball {
        let lo = rat_to_f64(&self.lo);
        let hi = rat_to_f64(&self.hi);
        let mid = 0.5 * (lo + hi);
        Ball::rounded(mid, 0.5 * (hi - lo) + (lo.abs() + hi.abs()) * EPS)
    }
}

pub fn dist_to_int_rat(x: &Rat) -> Rat {
    let m = floor_rat(&(x + rat(1, 2)));
    (x - Rat::from_integer(m)).abs()
}

/// Nearest integer to `x`, ties rounded up.
pub fn nearest_int_rat(x: &Rat) -> BigInt {
    floor_rat(&(x + rat(1, 2)))
}

/// `[s, s+1] / 2^prec` around the `n`-th root of a non-negative rational.
pub fn root_enclosure(x: &Rat, n: u32, prec: u32) -> Enclosure {
    assert!(!x.is_negative());
    assert!(n >= 1);
    if n == 1 {
        return Enclosure::point(x.clone());
    }
    let scaled = floor_rat(&(x * Rat::from_integer(pow2(n * prec))));
    let s = scaled.nth_root(n);
    let den = pow2(prec);
    let exact = num_traits::pow(s.clone(), n as usize) == scaled
        && Rat::new(scaled.clone(), pow2(n * prec)) == *x;
    if exact {
        Enclosure::point(Rat::new(s, den))
    } else {
        Enclosure { lo: Rat::new(s.clone(), den.clone()), hi: Rat::new(s + 1, den) }
    }
}

pub fn sqrt_enclosure(x: &Rat, prec: u32) -> Enclosure {
    root_enclosure(x, 2, prec)
}

/// Exact square root when `x` is the square of a rational.
pub fn rational_sqrt(x: &Rat) -> Option<Rat> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(Rat::new(n, d))
    } else {
        None
    }
}

/// Enclosure of `x^e` for a positive enclosure and rational exponent.
pub fn pow_enclosure(x: &Enclosure, e: &Rat, prec: u32) -> Enclosure {
    assert!(x.lo.is_positive(), "power of non-positive enclosure");
    if e.is_zero() {
        return Enclosure::point(Rat::one());
    }
    let num = e.numer().abs().to_u32().expect("exponent numerator fits u32");
    let den = e.denom().to_u32().expect("exponent denominator fits u32");
    let lo_pow = num_traits::pow(x.lo.clone(), num as usize);
    let hi_pow = num_traits::pow(x.hi.clone(), num as usize);
    // Extra bits so that the reciprocal below keeps the requested width.
    let p = prec + 8;
    let lo_root = root_enclosure(&lo_pow, den, p);
    let hi_root = root_enclosure(&hi_pow, den, p);
    let mut out = Enclosure { lo: lo_root.lo, hi: hi_root.hi };
    if out.lo.is_zero() {
        // Underflow of the fixed-point root; fall back to a finer grid.
        return pow_enclosure(x, e, prec * 2);
    }
    if e.is_negative() {
        out = out.recip_pos();
    }
    out
}

/// Fixed-point enclosure of `atanh(z)` for `0 <= z <= 1/2`, scaled by `2^p`.
fn atanh_fixed(z: &Rat, p: u32) -> (BigInt, BigInt) {
    let scale = Rat::from_integer(pow2(p));
    let z_lo = floor_rat(&(z * &scale));
    let z_hi = ceil_rat(&(z * &scale));
    let sh = p as usize;
    let z2_lo = (&z_lo * &z_lo) >> sh;
    let z2_hi = ((&z_hi * &z_hi) >> sh) + 1;
    let mut pow_lo = z_lo;
    let mut pow_hi = z_hi;
    let mut sum_lo = BigInt::zero();
    let mut sum_hi = BigInt::zero();
    let mut k: u64 = 1;
    loop {
        let kb = BigInt::from(k);
        sum_lo += &pow_lo / &kb;
        sum_hi += (&pow_hi + &kb - 1) / &kb;
        pow_lo = (&pow_lo * &z2_lo) >> sh;
        pow_hi = ((&pow_hi * &z2_hi) >> sh) + 1;
        k += 2;
        if pow_hi <= BigInt::from(2) {
            // Remaining tail is below z^k/(k(1-z^2)) <= 4/3 * pow_hi / k.
            sum_hi += BigInt::from(4);
            break;
        }
    }
    (sum_lo, sum_hi)
}

/// Enclosure of the natural logarithm of a positive rational, width about
/// `2^-prec` times a small factor.
pub fn ln_enclosure(x: &Rat, prec: u32) -> Enclosure {
    assert!(x.is_positive(), "logarithm of non-positive value");
    let p = prec + 16;
    // x = 2^k * y with 1 <= y < 2.
    let mut k: i64 = x.numer().bits() as i64 - x.denom().bits() as i64;
    let shift = |k: i64| -> Rat {
        if k >= 0 {
            x / Rat::from_integer(pow2(k as u32))
        } else {
            x * Rat::from_integer(pow2((-k) as u32))
        }
    };
    let mut y = shift(k);
    while y < Rat::one() {
        k -= 1;
        y = shift(k);
    }
    while y >= rat_int(2) {
        k += 1;
        y = shift(k);
    }
    let z = (&y - Rat::one()) / (&y + Rat::one());
    let (a_lo, a_hi) = atanh_fixed(&z, p);
    let (l2_lo, l2_hi) = atanh_fixed(&rat(1, 3), p);
    let kb = BigInt::from(k);
    let (kl_lo, kl_hi) = if k >= 0 {
        (&kb * &l2_lo, &kb * &l2_hi)
    } else {
        (&kb * &l2_hi, &kb * &l2_lo)
    };
    let lo = (kl_lo + a_lo) * 2;
    let hi = (kl_hi + a_hi) * 2;
    Enclosure { lo: Rat::new(lo, pow2(p)), hi: Rat::new(hi, pow2(p)) }
}

// ---------------------------------------------------------------------------
// Quadratic surds
// ---------------------------------------------------------------------------

/// The exact real `a + b * sqrt(r)` with `r >= 0`.
///
/// Normalised so that `b == 0` whenever the value is rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    a: Rat,
    b: Rat,
    r: Rat,
}

impl Surd {
    pub fn rational(a: Rat) -> Surd {
        Surd { a, b: Rat::zero(), r: Rat::zero() }
    }

    pub fn new(a: Rat, b: Rat, r: Rat) -> Result<Surd> {
        if r.is_negative() {
            return Err(Error::Domain(format!("square root of negative value {}", fmt_rat(&r))));
        }
        if b.is_zero() || r.is_zero() {
            return Ok(Surd::rational(a));
        }
        if let Some(s) = rational_sqrt(&r) {
            return Ok(Surd::rational(a + b * s));
        }
        Ok(Surd { a, b, r })
    }

    /// `sqrt(r)`.
    pub fn sqrt(r: Rat) -> Result<Surd> {
        Surd::new(Rat::zero(), Rat::one(), r)
    }

    pub fn parts(&self) -> (&Rat, &Rat, &Rat) {
        (&self.a, &self.b, &self.r)
    }

    pub fn as_rational(&self) -> Option<&Rat> {
        if self.b.is_zero() {
            Some(&self.a)
        } else {
            None
        }
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.a) + rat_to_f64(&self.b) * rat_to_f64(&self.r).sqrt()
    }

    pub fn ball(&self) -> Ball {
        let a = rat_to_f64(&self.a);
        if self.b.is_zero() {
            return Ball::new(a, a.abs() * EPS);
        }
        let b = rat_to_f64(&self.b);
        let r = rat_to_f64(&self.r);
        let s = Ball::new(r, r * EPS).sqrt().unwrap_or(Ball::new(r.sqrt(), r.sqrt() + 1e-300));
        Ball::new(a, a.abs() * EPS) + Ball::new(b, b.abs() * EPS) * s
    }

    pub fn enclose(&self, prec: u32) -> Enclosure {
        if self.b.is_zero() {
            return Enclosure::point(self.a.clone());
        }
        // Scale the root precision by the size of b.
        let extra = self.b.numer().bits().saturating_sub(self.b.denom().bits()) as u32;
        let s = sqrt_enclosure(&self.r, prec + extra + 2);
        s.scale(&self.b).add_rat(&self.a)
    }

    pub fn add_rat(&self, x: &Rat) -> Surd {
        Surd { a: &self.a + x, b: self.b.clone(), r: self.r.clone() }
    }

    pub fn scale(&self, k: &Rat) -> Surd {
        if k.is_zero() {
            return Surd::rational(Rat::zero());
        }
        Surd { a: &self.a * k, b: &self.b * k, r: self.r.clone() }
    }

    pub fn neg(&self) -> Surd {
        Surd { a: -&self.a, b: -&self.b, r: self.r.clone() }
    }

    /// Sum of two surds sharing a radicand (or either rational).
    pub fn add(&self, o: &Surd) -> Option<Surd> {
        if o.b.is_zero() {
            return Some(self.add_rat(&o.a));
        }
        if self.b.is_zero() {
            return Some(o.add_rat(&self.a));
        }
        if self.r == o.r {
            let s = Surd::new(&self.a + &o.a, &self.b + &o.b, self.r.clone()).ok()?;
            return Some(s);
        }
        None
    }

    pub fn signum(&self) -> Ordering {
        self.cmp_rat(&Rat::zero())
    }

    /// Exact comparison with a rational.
    pub fn cmp_rat(&self, t: &Rat) -> Ordering {
        // a + b s  vs  t   <=>   b s  vs  t - a
        let rhs = t - &self.a;
        if self.b.is_zero() {
            return Rat::zero().cmp(&rhs);
        }
        // b s has the sign of b (s > 0 since r is not a square, hence r > 0).
        let lhs_sign = if self.b.is_positive() { Ordering::Greater } else { Ordering::Less };
        let rhs_sign = rhs.cmp(&Rat::zero());
        if lhs_sign != rhs_sign {
            return lhs_sign.cmp(&rhs_sign);
        }
        // Same sign: compare squares, flipping for negatives.
        let l2 = &self.b * &self.b * &self.r;
        let r2 = &rhs * &rhs;
        let c = l2.cmp(&r2);
        if lhs_sign == Ordering::Greater {
            c
        } else {
            c.reverse()
        }
    }

    pub fn floor(&self) -> BigInt {
        let guess = self.to_f64().floor();
        let mut m = if guess.is_finite() {
            BigInt::from(guess as i64)
        } else {
            floor_rat(&self.enclose(BASE_PREC).lo)
        };
        while self.cmp_rat(&Rat::from_integer(m.clone())) == Ordering::Less {
            m -= 1;
        }
        while self.cmp_rat(&Rat::from_integer(&m + 1)) != Ordering::Less {
            m += 1;
        }
        m
    }

    /// Nearest integer, ties rounded up.
    pub fn nearest_int(&self) -> BigInt {
        self.add_rat(&rat(1, 2)).floor()
    }

    /// `||self||` as an exact non-negative surd.
    pub fn dist_to_int(&self) -> Surd {
        let m = Rat::from_integer(self.nearest_int());
        let d = self.add_rat(&-m);
        if d.signum() == Ordering::Less {
            d.neg()
        } else {
            d
        }
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", fmt_rat(&self.a))
        } else {
            write!(f, "{}+{}*sqrt({})", fmt_rat(&self.a), fmt_rat(&self.b), fmt_rat(&self.r))
        }
    }
}

// ---------------------------------------------------------------------------
// Certified decisions
// ---------------------------------------------------------------------------

/// A real quantity that can be bounded to any precision.
pub trait Certified {
    fn ball(&self) -> Ball;
    fn enclose(&self, prec: u32) -> Enclosure;
    /// Exact value when rational.
    fn as_rational(&self) -> Option<Rat> {
        None
    }
    /// Exact comparison `self` vs `r`, when the representation allows one.
    fn cmp_rational(&self, _r: &Rat) -> Option<Ordering> {
        None
    }
}

impl Certified for Surd {
    fn ball(&self) -> Ball {
        Surd::ball(self)
    }
    fn enclose(&self, prec: u32) -> Enclosure {
        Surd::enclose(self, prec)
    }
    fn as_rational(&self) -> Option<Rat> {
        Surd::as_rational(self).cloned()
    }
    fn cmp_rational(&self, r: &Rat) -> Option<Ordering> {
        Some(self.cmp_rat(r))
    }
}

impl Certified for Rat {
    fn ball(&self) -> Ball {
        let x = rat_to_f64(self);
        Ball::new(x, x.abs() * EPS)
    }
    fn enclose(&self, _prec: u32) -> Enclosure {
        Enclosure::point(self.clone())
    }
    fn as_rational(&self) -> Option<Rat> {
        Some(self.clone())
    }
    fn cmp_rational(&self, r: &Rat) -> Option<Ordering> {
        Some(self.cmp(r))
    }
}

/// Product of certified factors, e.g. `prod ||q y_i||`.
pub struct Product<'a>(pub Vec<&'a dyn Certified>);

impl Certified for Product<'_> {
    fn ball(&self) -> Ball {
        self.0.iter().fold(Ball::exact(1.0), |acc, f| acc * f.ball())
    }
    fn enclose(&self, prec: u32) -> Enclosure {
        let mut acc = Enclosure::point(Rat::one());
        for f in &self.0 {
            acc = acc.mul(&f.enclose(prec + 8)).round_out(prec + 16);
        }
        acc
    }
    fn as_rational(&self) -> Option<Rat> {
        let mut acc = Rat::one();
        for f in &self.0 {
            acc *= f.as_rational()?;
        }
        Some(acc)
    }
    fn cmp_rational(&self, r: &Rat) -> Option<Ordering> {
        self.as_rational().map(|v| v.cmp(r))
    }
}

/// Decides `lhs < rhs` (strict), refining enclosures from [`BASE_PREC`] bits
/// up to `cap_bits`. Fails with [`Error::Ambiguous`] when the enclosures still
/// overlap at the cap.
pub fn certify_lt(lhs: &dyn Certified, rhs: &dyn Certified, cap_bits: u32) -> Result<bool> {
    if let Some(b) = lhs.ball().lt(rhs.ball()) {
        return Ok(b);
    }
    certify_lt_slow(lhs, rhs, cap_bits)
}

/// As [`certify_lt`], skipping the ball test (the caller already tried it).
pub fn certify_lt_slow(lhs: &dyn Certified, rhs: &dyn Certified, cap_bits: u32) -> Result<bool> {
    if let Some(l) = lhs.as_rational() {
        if let Some(o) = rhs.cmp_rational(&l) {
            return Ok(o == Ordering::Greater);
        }
    }
    if let Some(r) = rhs.as_rational() {
        if let Some(o) = lhs.cmp_rational(&r) {
            return Ok(o == Ordering::Less);
        }
    }
    let mut prec = BASE_PREC;
    let mut last_width = None;
    while prec <= cap_bits {
        let l = lhs.enclose(prec);
        let r = rhs.enclose(prec);
        if let Some(b) = l.lt(&r) {
            return Ok(b);
        }
        last_width = Some(std::cmp::max(l.width(), r.width()));
        prec *= 2;
    }
    Err(Error::Ambiguous(format!(
        "comparison undecided at {cap_bits} bits (enclosure width {})",
        last_width.map(|w| format!("{:.3e}", rat_to_f64(&w))).unwrap_or_default()
    )))
}

/// Precision cap for curve-distance comparisons.
pub const CURVE_CAP_BITS: u32 = 128;
/// Precision cap for limsup-membership comparisons.
pub const LIMSUP_CAP_BITS: u32 = 1024;

pub fn sign_of(x: &BigInt) -> i32 {
    match x.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rat("3/4"), Some(rat(3, 4)));
        assert_eq!(parse_rat("-0.55"), Some(rat(-11, 20)));
        assert_eq!(parse_rat("7"), Some(rat_int(7)));
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(parse_rat("x"), None);
    }

    #[test]
    fn sqrt2_enclosure_is_tight_and_correct() {
        let e = sqrt_enclosure(&rat_int(2), 100);
        assert!(e.lo < e.hi);
        assert!(&e.lo * &e.lo <= rat_int(2));
        assert!(&e.hi * &e.hi >= rat_int(2));
        assert!(e.width() <= Rat::new(BigInt::one(), pow2(100)));
        assert!(sqrt_enclosure(&rat(9, 4), 50).is_point());
    }

    #[test]
    fn ln_enclosure_brackets_libm() {
        for &x in &[2.0f64, 3.0, 10.0, 1000.0, 0.3, 1.0, 65536.0] {
            let e = ln_enclosure(&rat_from_f64(x), 80);
            let (lo, hi) = (rat_to_f64(&e.lo), rat_to_f64(&e.hi));
            let l = x.ln();
            assert!(lo <= l + 1e-15 && l - 1e-15 <= hi, "ln({x}) = {l} not in [{lo}, {hi}]");
            assert!(rat_to_f64(&e.width()) < 1e-20);
        }
    }

    #[test]
    fn ln2_high_precision_digits() {
        // ln 2 = 0.693147180559945309417232121458176568...
        let e = ln_enclosure(&rat_int(2), 200);
        let probe = parse_rat("0.693147180559945309417232121458176568").unwrap();
        let delta = Rat::new(BigInt::one(), num_traits::pow(BigInt::from(10), 36));
        assert!(e.lo <= &probe + &delta && &probe - &delta <= e.hi);
    }

    #[test]
    fn surd_exact_comparisons() {
        let s = Surd::sqrt(rat_int(2)).unwrap().add_rat(&rat_int(-1)); // sqrt2 - 1
        assert_eq!(s.cmp_rat(&rat(41, 100)), Ordering::Greater);
        assert_eq!(s.cmp_rat(&rat(42, 100)), Ordering::Less);
        assert_eq!(s.floor(), BigInt::zero());
        let t = s.scale(&rat_int(5)); // 5 sqrt2 - 5 = 2.0710...
        assert_eq!(t.nearest_int(), BigInt::from(2));
        assert_eq!(t.dist_to_int().cmp_rat(&rat(711, 10000)), Ordering::Less);
        assert_eq!(t.dist_to_int().cmp_rat(&rat(71, 1000)), Ordering::Greater);
        // Pythagorean collapse.
        let c = Surd::sqrt(Rat::one() - rat(9, 25)).unwrap();
        assert_eq!(c.as_rational(), Some(&rat(4, 5)));
    }

    #[test]
    fn enclosure_dist_to_int() {
        let e = Enclosure::new(rat(9, 10), rat(11, 10));
        let d = e.dist_to_int();
        assert_eq!(d.lo, Rat::zero());
        assert_eq!(d.hi, rat(1, 10));
        let e = Enclosure::new(rat(4, 10), rat(6, 10));
        let d = e.dist_to_int();
        assert_eq!(d.lo, rat(4, 10));
        assert_eq!(d.hi, rat(1, 2));
    }

    #[test]
    fn pow_enclosure_matches_float() {
        let x = Enclosure::point(rat_int(8));
        let e = pow_enclosure(&x, &rat(-2, 3), 60);
        assert!(e.contains(&rat(1, 4)));
        let e = pow_enclosure(&Enclosure::point(rat_int(1000)), &rat(11, 20), 60);
        let v = 1000f64.powf(0.55);
        assert!(rat_to_f64(&e.lo) <= v * (1.0 + 1e-14) && v * (1.0 - 1e-14) <= rat_to_f64(&e.hi));
    }

    #[test]
    fn certify_exact_tie_is_not_strictly_less() {
        let a = rat(1, 9);
        assert!(!certify_lt(&a, &rat(1, 9), 128).unwrap());
        assert!(certify_lt(&rat(1, 10), &a, 128).unwrap());
    }
}
