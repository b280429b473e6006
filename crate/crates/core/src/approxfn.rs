//! Approximating functions: positive, non-increasing `psi` on integers `h >= h0`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::{
    fmt_rat, ln_enclosure, parse_rat, pow_enclosure, rat_from_f64, rat_int, rat_to_f64, Ball,
    Certified, Enclosure, Rat, LIMSUP_CAP_BITS,
};

/// `c * h^-a * (ln h)^-b`.
#[derive(Clone, Debug)]
pub struct PowerLog {
    pub c: Rat,
    pub a: Rat,
    pub b: Rat,
    cf: f64,
    af: f64,
    bf: f64,
}

#[derive(Debug)]
pub struct Table {
    h0: u64,
    values: Vec<f64>,
}

const STRIDE: u64 = 1024;

/// `base(h) / sqrt(sum_{t=h0}^{h} base(t) * pair(t))`.
#[derive(Debug)]
pub struct ScaledSqrt {
    base: ApproxFn,
    pair: ApproxFn,
    h0: u64,
    // checkpoints[k] = sum of the first k*STRIDE terms, summed left to right.
    checkpoints: RwLock<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub enum Form {
    PowerLog(PowerLog),
    Table(Arc<Table>),
    Min(Arc<ApproxFn>, Arc<ApproxFn>),
    Max(Arc<ApproxFn>, Arc<ApproxFn>),
    ScaledBySqrtPartialSum(Arc<ScaledSqrt>),
}

#[derive(Clone, Debug)]
pub struct ApproxFn {
    form: Form,
    h0: u64,
}

/// Result of [`ApproxFn::order`].
#[derive(Clone, Debug, PartialEq)]
pub enum Order {
    Exact(Rat),
    Approx(f64),
    Undefined,
}

impl Order {
    pub fn to_f64(&self) -> Option<f64> {
        match self {
            Order::Exact(r) => Some(rat_to_f64(r)),
            Order::Approx(x) => Some(*x),
            Order::Undefined => None,
        }
    }
}

impl ApproxFn {
    pub fn power_log(c: Rat, a: Rat, b: Rat) -> Result<ApproxFn> {
        if !c.is_positive() {
            return Err(Error::Domain(format!("scale {} must be positive", fmt_rat(&c))));
        }
        if a.is_negative() || (a.is_zero() && b.is_negative()) {
            return Err(Error::Domain(format!(
                "h^{}*logh^{} violates decreasing invariant",
                fmt_rat(&-&a),
                fmt_rat(&-&b)
            )));
        }
        let mut h0 = 2u64;
        if b.is_negative() {
            // d/dh ln psi = -(a ln h + b)/(h ln h) <= 0 once ln h >= -b/a.
            let x = (-rat_to_f64(&b) / rat_to_f64(&a)).exp().ceil();
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(x < 1e15) {
                return Err(Error::Domain("log-power too large for a decreasing domain".into()));
            }
            h0 = h0.max(x as u64);
        }
        let (cf, af, bf) = (rat_to_f64(&c), rat_to_f64(&a), rat_to_f64(&b));
        Ok(ApproxFn { form: Form::PowerLog(PowerLog { c, a, b, cf, af, bf }), h0 })
    }

    /// `h^-a`.
    pub fn power(a: Rat) -> Result<ApproxFn> {
        ApproxFn::power_log(Rat::one(), a, Rat::zero())
    }

    pub fn table(h0: u64, values: Vec<f64>) -> Result<ApproxFn> {
        if h0 < 2 {
            return Err(Error::Domain("table domain must start at h0 >= 2".into()));
        }
        if values.is_empty() {
            return Err(Error::Domain("empty table".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::Domain(format!("table entry {i} is not positive and finite")));
            }
            if i > 0 && *v > values[i - 1] {
                return Err(Error::Domain(format!(
                    "table entry at h={} violates decreasing invariant",
                    h0 + i as u64
                )));
            }
        }
        Ok(ApproxFn { form: Form::Table(Arc::new(Table { h0, values })), h0 })
    }

    pub fn min(f: ApproxFn, g: ApproxFn) -> ApproxFn {
        let h0 = f.h0.max(g.h0);
        ApproxFn { form: Form::Min(Arc::new(f), Arc::new(g)), h0 }
    }

    pub fn max(f: ApproxFn, g: ApproxFn) -> ApproxFn {
        let h0 = f.h0.max(g.h0);
        ApproxFn { form: Form::Max(Arc::new(f), Arc::new(g)), h0 }
    }

    pub fn scaled_by_sqrt_partial_sum(base: ApproxFn, pair: ApproxFn) -> ApproxFn {
        let h0 = base.h0.max(pair.h0);
        let s = ScaledSqrt { base, pair, h0, checkpoints: RwLock::new(vec![0.0]) };
        ApproxFn { form: Form::ScaledBySqrtPartialSum(Arc::new(s)), h0 }
    }

    /// Raises the domain start. Lowering below the natural start is refused.
    pub fn with_h0(mut self, h0: u64) -> Result<ApproxFn> {
        if h0 < self.h0 {
            return Err(Error::Domain(format!("h0={h0} is below the admissible start {}", self.h0)));
        }
        if let Form::ScaledBySqrtPartialSum(s) = &self.form {
            let base = s.base.clone();
            let pair = s.pair.clone();
            let st = ScaledSqrt { base, pair, h0, checkpoints: RwLock::new(vec![0.0]) };
            self.form = Form::ScaledBySqrtPartialSum(Arc::new(st));
        }
        self.h0 = h0;
        Ok(self)
    }

    pub fn h0(&self) -> u64 {
        self.h0
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn as_power_log(&self) -> Option<&PowerLog> {
        match &self.form {
            Form::PowerLog(p) => Some(p),
            _ => None,
        }
    }

    pub fn eval(&self, h: u64) -> Result<f64> {
        if h < self.h0 {
            return Err(Error::Domain(format!("evaluation at h={h} below domain start h0={}", self.h0)));
        }
        Ok(self.raw(h))
    }

    /// Evaluation without the domain check.
    pub(crate) fn raw(&self, h: u64) -> f64 {
        match &self.form {
            Form::PowerLog(p) => p.raw(h),
            Form::Table(t) => t.raw(h),
            Form::Min(f, g) => f.raw(h).min(g.raw(h)),
            Form::Max(f, g) => f.raw(h).max(g.raw(h)),
            Form::ScaledBySqrtPartialSum(s) => s.raw(h).0,
        }
    }

    /// Evaluation at a real argument `x >= h0` (PowerLog forms only; others
    /// step at integers).
    pub fn eval_real(&self, x: f64) -> f64 {
        match &self.form {
            Form::PowerLog(p) => p.raw_f(x),
            _ => self.raw(x.floor().max(self.h0 as f64) as u64),
        }
    }

    /// Natural log of `psi(2^t)` computed without overflow, for large `t`.
    pub fn ln_at_pow2(&self, t: u32) -> f64 {
        match &self.form {
            Form::PowerLog(_) => self.ln_at_ln(t as f64 * std::f64::consts::LN_2).unwrap(),
            Form::Min(f, g) => f.ln_at_pow2(t).min(g.ln_at_pow2(t)),
            Form::Max(f, g) => f.ln_at_pow2(t).max(g.ln_at_pow2(t)),
            _ => {
                let h = if t < 63 { 1u64 << t } else { u64::MAX };
                self.raw(h.max(self.h0)).ln()
            }
        }
    }

    pub fn ball(&self, h: u64) -> Ball {
        match &self.form {
            Form::PowerLog(p) => {
                let v = p.raw(h);
                if p.a.is_zero() && p.b.is_zero() {
                    Ball::new(v, v * f64::EPSILON)
                } else {
                    Ball::libm(v)
                }
            }
            Form::Table(t) => Ball::exact(t.raw(h)),
            Form::Min(f, g) => f.ball(h).min(g.ball(h)),
            Form::Max(f, g) => f.ball(h).max(g.ball(h)),
            Form::ScaledBySqrtPartialSum(s) => {
                let (v, n) = s.raw(h);
                Ball::new(v, v.abs() * (40.0 + n as f64) * f64::EPSILON)
            }
        }
    }

    pub fn enclose(&self, h: u64, prec: u32) -> Enclosure {
        match &self.form {
            Form::PowerLog(p) => p.enclose(h, prec),
            Form::Table(t) => Enclosure::point(rat_from_f64(t.raw(h))),
            Form::Min(f, g) => {
                let (x, y) = (f.enclose(h, prec), g.enclose(h, prec));
                Enclosure::new(x.lo.clone().min(y.lo.clone()), x.hi.min(y.hi))
            }
            Form::Max(f, g) => {
                let (x, y) = (f.enclose(h, prec), g.enclose(h, prec));
                Enclosure::new(x.lo.clone().max(y.lo.clone()), x.hi.max(y.hi))
            }
            Form::ScaledBySqrtPartialSum(_) => {
                let b = self.ball(h);
                Enclosure::new(rat_from_f64(b.lo()), rat_from_f64(b.hi()))
            }
        }
    }

    /// Exact comparison `psi(h)` vs `r` when decidable.
    pub fn cmp_rational(&self, h: u64, r: &Rat) -> Option<Ordering> {
        if !r.is_positive() {
            return Some(Ordering::Greater);
        }
        match &self.form {
            Form::PowerLog(p) => p.cmp_rational(h, r),
            Form::Table(t) => Some(rat_from_f64(t.raw(h)).cmp(r)),
            Form::Min(f, g) => combine(f.cmp_rational(h, r), g.cmp_rational(h, r), Ordering::Less),
            Form::Max(f, g) => combine(f.cmp_rational(h, r), g.cmp_rational(h, r), Ordering::Greater),
            Form::ScaledBySqrtPartialSum(_) => {
                let b = self.ball(h);
                let rb = r.ball();
                match b.lt(rb) {
                    Some(true) => Some(Ordering::Less),
                    Some(false) if rb.lt(b) == Some(true) => Some(Ordering::Greater),
                    _ => None,
                }
            }
        }
    }

    /// `psi(h)` when it is rational.
    pub fn exact_rational(&self, h: u64) -> Option<Rat> {
        match &self.form {
            Form::PowerLog(p) => p.exact_rational(h),
            Form::Table(t) => Some(rat_from_f64(t.raw(h))),
            Form::Min(f, g) => Some(f.exact_rational(h)?.min(g.exact_rational(h)?)),
            Form::Max(f, g) => Some(f.exact_rational(h)?.max(g.exact_rational(h)?)),
            Form::ScaledBySqrtPartialSum(_) => None,
        }
    }

    /// `psi(h) / div` as a certified quantity.
    pub fn threshold(&self, h: u64, div: u64) -> Threshold<'_> {
        Threshold { psi: self, h, div }
    }

    /// Fills `out[i] = psi(from + i)`.
    pub fn fill(&self, from: u64, out: &mut [f64]) {
        match &self.form {
            Form::ScaledBySqrtPartialSum(s) => s.fill(from, out),
            Form::Min(f, g) => {
                let mut tmp = vec![0.0; out.len()];
                f.fill(from, out);
                g.fill(from, &mut tmp);
                for (o, t) in out.iter_mut().zip(tmp) {
                    *o = o.min(t);
                }
            }
            Form::Max(f, g) => {
                let mut tmp = vec![0.0; out.len()];
                f.fill(from, out);
                g.fill(from, &mut tmp);
                for (o, t) in out.iter_mut().zip(tmp) {
                    *o = o.max(t);
                }
            }
            _ => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = self.raw(from + i as u64);
                }
            }
        }
    }

    /// The order `lim -log psi(h) / log h`.
    pub fn order(&self) -> Order {
        match &self.form {
            Form::PowerLog(p) => Order::Exact(p.a.clone()),
            Form::Table(t) => t.order(),
            Form::Min(f, g) => match (f.order(), g.order()) {
                (Order::Exact(a), Order::Exact(b)) => Order::Exact(a.max(b)),
                (Order::Undefined, _) | (_, Order::Undefined) => Order::Undefined,
                (x, y) => Order::Approx(x.to_f64().unwrap().max(y.to_f64().unwrap())),
            },
            Form::Max(f, g) => match (f.order(), g.order()) {
                (Order::Exact(a), Order::Exact(b)) => Order::Exact(a.min(b)),
                (Order::Undefined, _) | (_, Order::Undefined) => Order::Undefined,
                (x, y) => Order::Approx(x.to_f64().unwrap().min(y.to_f64().unwrap())),
            },
            Form::ScaledBySqrtPartialSum(_) => Order::Undefined,
        }
    }

    /// Smallest `k` such that `h^(-a-eps) <= psi(h) <= h^(-a+eps)` for every
    /// `h >= 2^k`, for PowerLog forms.
    pub fn sandwich_threshold_log2(&self, eps: f64) -> Option<u32> {
        let p = self.as_power_log()?;
        let lc = p.cf.ln().abs();
        let b = p.bf.abs();
        (1..4096u32).find(|&k| {
            let x = k as f64 * std::f64::consts::LN_2;
            // The slack eps*ln h - |ln c| - |b| ln ln h is increasing once ln h >= |b|/eps.
            eps * x >= lc + b * x.ln().abs() && x >= b / eps && x >= (self.h0 as f64).ln()
        })
    }

    /// `ln psi(h)` given `ln h`, for PowerLog forms.
    pub fn ln_at_ln(&self, lnh: f64) -> Option<f64> {
        let p = self.as_power_log()?;
        let mut v = p.cf.ln() - p.af * lnh;
        if p.bf != 0.0 {
            v -= p.bf * lnh.ln();
        }
        Some(v)
    }

    pub fn parse(text: &str) -> Result<ApproxFn> {
        let mut p = Parser { s: text.as_bytes(), i: 0 };
        let f = p.expr()?;
        p.ws();
        if p.i != p.s.len() {
            return Err(Error::parse(p.i + 1, format!("unexpected '{}'", p.s[p.i] as char)));
        }
        Ok(f)
    }
}

fn combine(x: Option<Ordering>, y: Option<Ordering>, dominant: Ordering) -> Option<Ordering> {
    match (x, y) {
        (Some(a), Some(b)) => Some(if dominant == Ordering::Less { a.min(b) } else { a.max(b) }),
        (Some(a), None) | (None, Some(a)) if a == dominant => Some(a),
        _ => None,
    }
}

impl PowerLog {
    fn raw(&self, h: u64) -> f64 {
        self.raw_f(h as f64)
    }

    fn raw_f(&self, x: f64) -> f64 {
        let mut v = self.cf;
        if self.af != 0.0 {
            v *= x.powf(-self.af);
        }
        if self.bf != 0.0 {
            v *= x.ln().powf(-self.bf);
        }
        v
    }

    fn enclose(&self, h: u64, prec: u32) -> Enclosure {
        let hr = rat_int(h as i64);
        let p = prec + 8;
        let mut e = if self.a.is_zero() {
            Enclosure::point(Rat::one())
        } else {
            pow_enclosure(&Enclosure::point(hr.clone()), &-&self.a, p)
        };
        if !self.b.is_zero() {
            let extra = self.b.numer().bits() as u32 + 8;
            let l = ln_enclosure(&hr, p + extra);
            e = e.mul(&pow_enclosure(&l, &-&self.b, p));
        }
        e.scale(&self.c).round_out(p + 8)
    }

    fn cmp_rational(&self, h: u64, r: &Rat) -> Option<Ordering> {
        if self.b.is_zero() {
            // c h^(-n/m) vs r  <=>  c^m vs r^m h^n
            let n = self.a.numer().to_usize()?;
            let m = self.a.denom().to_usize()?;
            let lhs = num_traits::pow(self.c.clone(), m);
            let rhs = num_traits::pow(r.clone(), m) * Rat::from_integer(num_traits::pow(BigInt::from(h), n));
            return Some(lhs.cmp(&rhs));
        }
        let mut prec = 64;
        while prec <= LIMSUP_CAP_BITS {
            let e = self.enclose(h, prec);
            if &e.hi < r {
                return Some(Ordering::Less);
            }
            if &e.lo > r {
                return Some(Ordering::Greater);
            }
            prec *= 2;
        }
        None
    }

    fn exact_rational(&self, h: u64) -> Option<Rat> {
        if !self.b.is_zero() {
            return None;
        }
        let n = self.a.numer().to_usize()?;
        let m = self.a.denom().to_u32()?;
        let p = num_traits::pow(BigInt::from(h), n);
        let root = p.nth_root(m);
        if num_traits::pow(root.clone(), m as usize) == p {
            Some(&self.c / Rat::from_integer(root))
        } else {
            None
        }
    }
}

impl Table {
    fn raw(&self, h: u64) -> f64 {
        let i = (h - self.h0) as usize;
        *self.values.get(i).unwrap_or_else(|| self.values.last().unwrap())
    }

    fn order(&self) -> Order {
        let last = self.h0 + self.values.len() as u64 - 1;
        let mut slopes = Vec::new();
        let mut t = 1u32;
        while t < 63 && (1u64 << (t + 1)) <= last {
            let h = 1u64 << t;
            if h >= self.h0 {
                let s = -(self.raw(2 * h).ln() - self.raw(h).ln()) / std::f64::consts::LN_2;
                slopes.push(s);
            }
            t += 1;
        }
        if slopes.len() < 3 {
            return Order::Undefined;
        }
        let tail = &slopes[slopes.len() - 3..];
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= 1e-2 {
            Order::Approx(*tail.last().unwrap())
        } else {
            Order::Undefined
        }
    }
}

impl ScaledSqrt {
    fn term(&self, t: u64) -> f64 {
        self.base.raw(t) * self.pair.raw(t)
    }

    fn checkpoint(&self, k: usize) -> f64 {
        {
            let ck = self.checkpoints.read().unwrap();
            if k < ck.len() {
                return ck[k];
            }
        }
        let mut ck = self.checkpoints.write().unwrap();
        while ck.len() <= k {
            let j = ck.len() as u64 - 1;
            let mut v = *ck.last().unwrap();
            let start = self.h0 + j * STRIDE;
            for t in start..start + STRIDE {
                v += self.term(t);
            }
            ck.push(v);
        }
        ck[k]
    }

    /// Value and number of summed terms.
    fn raw(&self, h: u64) -> (f64, u64) {
        let k = ((h - self.h0) / STRIDE) as usize;
        let mut v = self.checkpoint(k);
        for t in self.h0 + k as u64 * STRIDE..=h {
            v += self.term(t);
        }
        (self.base.raw(h) / v.sqrt(), h - self.h0 + 1)
    }

    fn fill(&self, from: u64, out: &mut [f64]) {
        if out.is_empty() {
            return;
        }
        let k = ((from - self.h0) / STRIDE) as usize;
        let mut v = self.checkpoint(k);
        let end = from + out.len() as u64;
        for t in self.h0 + k as u64 * STRIDE..end {
            v += self.term(t);
            if t >= from {
                out[(t - from) as usize] = self.base.raw(t) / v.sqrt();
            }
        }
    }
}

/// `psi(h) / div`.
pub struct Threshold<'a> {
    psi: &'a ApproxFn,
    h: u64,
    div: u64,
}

impl Certified for Threshold<'_> {
    fn ball(&self) -> Ball {
        self.psi.ball(self.h).checked_div(Ball::exact(self.div as f64)).unwrap()
    }
    fn enclose(&self, prec: u32) -> Enclosure {
        let d = rat_int(self.div as i64);
        let extra = 64 - self.div.leading_zeros();
        self.psi.enclose(self.h, prec + extra).scale(&d.recip())
    }
    fn as_rational(&self) -> Option<Rat> {
        Some(self.psi.exact_rational(self.h)? / rat_int(self.div as i64))
    }
    fn cmp_rational(&self, r: &Rat) -> Option<Ordering> {
        self.psi.cmp_rational(self.h, &(r * rat_int(self.div as i64)))
    }
}

impl fmt::Display for ApproxFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            Form::PowerLog(p) => {
                write!(f, "{}*h^{}*logh^{}", fmt_rat(&p.c), fmt_rat(&-&p.a), fmt_rat(&-&p.b))
            }
            Form::Table(t) => write!(f, "table[h0={};n={}]", t.h0, t.values.len()),
            Form::Min(a, b) => write!(f, "min({a},{b})"),
            Form::Max(a, b) => write!(f, "max({a},{b})"),
            Form::ScaledBySqrtPartialSum(s) => write!(f, "scaled({};{})", s.base, s.pair),
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.ws();
        if self.s[self.i..].starts_with(tok.as_bytes()) {
            self.i += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(Error::parse(self.i + 1, format!("expected '{tok}'")))
        }
    }

    fn expr(&mut self) -> Result<ApproxFn> {
        self.ws();
        for (kw, is_min) in [("min", true), ("max", false)] {
            let save = self.i;
            if self.eat(kw) && self.eat("(") {
                let f = self.expr()?;
                self.expect(",")?;
                let g = self.expr()?;
                self.expect(")")?;
                return Ok(if is_min { ApproxFn::min(f, g) } else { ApproxFn::max(f, g) });
            }
            self.i = save;
        }
        self.product()
    }

    fn number(&mut self) -> Result<Rat> {
        self.ws();
        let start = self.i;
        let mut seen_slash = false;
        while self.i < self.s.len() {
            let c = self.s[self.i];
            if c.is_ascii_digit() || c == b'.' {
                self.i += 1;
            } else if c == b'/' && !seen_slash && self.s.get(self.i + 1).is_some_and(u8::is_ascii_digit) {
                seen_slash = true;
                self.i += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.i]).unwrap();
        parse_rat(text).ok_or_else(|| Error::parse(start + 1, format!("invalid number '{text}'")))
    }

    fn exponent(&mut self) -> Result<Rat> {
        self.ws();
        let neg = if self.eat("-") {
            true
        } else {
            self.eat("+");
            false
        };
        let v = self.number()?;
        Ok(if neg { -v } else { v })
    }

    fn product(&mut self) -> Result<ApproxFn> {
        self.ws();
        let start = self.i;
        let mut c = Rat::one();
        let mut eh = Rat::zero();
        let mut el = Rat::zero();
        loop {
            self.ws();
            if self.eat("logh") {
                el += if self.eat("^") { self.exponent()? } else { Rat::one() };
            } else if self.eat("h") {
                eh += if self.eat("^") { self.exponent()? } else { Rat::one() };
            } else if self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.') {
                c *= self.number()?;
            } else {
                let msg = match self.s.get(self.i) {
                    Some(ch) => format!("unexpected '{}'", *ch as char),
                    None => "unexpected end of input".to_string(),
                };
                return Err(Error::parse(self.i + 1, msg));
            }
            if !self.eat("*") {
                break;
            }
        }
        ApproxFn::power_log(c, -eh, -el).map_err(|e| match e {
            Error::Domain(msg) => Error::parse(start + 1, msg),
            other => other,
        })
    }
}

// ---------------------------------------------------------------------------
// Series classification
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    Converges,
    Diverges,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesMethod {
    ClosedForm,
    NumericTrend,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesVerdict {
    pub kind: SeriesKind,
    pub method: SeriesMethod,
    /// `(H, sum_{h0 <= h <= H} term(h))` at dyadic `H`.
    pub partial_sums: Vec<(u64, f64)>,
    /// `(t, sum over (2^t, 2^(t+1)])`.
    pub block_sums: Vec<(u32, f64)>,
}

impl SeriesVerdict {
    pub fn is_exact(&self) -> bool {
        self.method == SeriesMethod::ClosedForm
    }
}

/// Last dyadic level summed by the numeric trend test.
pub const TREND_T_MAX: u32 = 24;
/// Last dyadic level reported alongside closed-form verdicts.
pub const CLOSED_FORM_T_MAX: u32 = 20;

/// Closed-form rule for `sum h^-a (ln h)^-b`.
pub fn power_log_series_converges(a: &Rat, b: &Rat) -> bool {
    let one = Rat::one();
    a > &one || (a == &one && b > &one)
}

/// Classifies `sum_h f(h) g(h) (ln h)^w`.
pub fn classify_product_series(f: &ApproxFn, g: &ApproxFn, log_weight: u32) -> SeriesVerdict {
    if let (Some(p), Some(q)) = (f.as_power_log(), g.as_power_log()) {
        let a = &p.a + &q.a;
        let b = &p.b + &q.b - rat_int(log_weight as i64);
        let kind = if power_log_series_converges(&a, &b) {
            SeriesKind::Converges
        } else {
            SeriesKind::Diverges
        };
        let (partial_sums, block_sums) = dyadic_sums(f, g, log_weight, CLOSED_FORM_T_MAX);
        return SeriesVerdict { kind, method: SeriesMethod::ClosedForm, partial_sums, block_sums };
    }
    classify_numeric(f, g, log_weight, TREND_T_MAX)
}

/// Numeric trend classification, never reported as exact.
pub fn classify_numeric(f: &ApproxFn, g: &ApproxFn, log_weight: u32, t_max: u32) -> SeriesVerdict {
    let (partial_sums, block_sums) = dyadic_sums(f, g, log_weight, t_max);
    let kind = trend_kind(&block_sums);
    SeriesVerdict { kind, method: SeriesMethod::NumericTrend, partial_sums, block_sums }
}

/// Converges when the last two block ratios are both at most 0.9, diverges
/// when both are at least 0.98, undetermined otherwise.
pub fn trend_kind(block_sums: &[(u32, f64)]) -> SeriesKind {
    if block_sums.len() < 3 {
        return SeriesKind::Undetermined;
    }
    let n = block_sums.len();
    let (b0, b1, b2) = (block_sums[n - 3].1, block_sums[n - 2].1, block_sums[n - 1].1);
    if b0 <= 0.0 || b1 <= 0.0 {
        return SeriesKind::Undetermined;
    }
    let (r1, r2) = (b1 / b0, b2 / b1);
    if r1 <= 0.9 && r2 <= 0.9 {
        SeriesKind::Converges
    } else if r1 >= 0.98 && r2 >= 0.98 {
        SeriesKind::Diverges
    } else {
        SeriesKind::Undetermined
    }
}

const CHUNK: u64 = 1 << 15;

fn dyadic_sums(f: &ApproxFn, g: &ApproxFn, w: u32, t_max: u32) -> (Vec<(u64, f64)>, Vec<(u32, f64)>) {
    let h0 = f.h0.max(g.h0);
    let term_range = |lo: u64, hi: u64| -> f64 {
        // Sum over [lo, hi] in fixed chunks for a schedule-independent result.
        if lo > hi {
            return 0.0;
        }
        let chunks: Vec<(u64, u64)> = (lo..=hi)
            .step_by(CHUNK as usize)
            .map(|s| (s, (s + CHUNK - 1).min(hi)))
            .collect();
        let sums: Vec<f64> = chunks
            .par_iter()
            .map(|&(s, e)| {
                let n = (e - s + 1) as usize;
                let mut fv = vec![0.0; n];
                let mut gv = vec![0.0; n];
                f.fill(s, &mut fv);
                g.fill(s, &mut gv);
                let mut acc = 0.0;
                for i in 0..n {
                    let mut v = fv[i] * gv[i];
                    if w > 0 {
                        v *= ((s + i as u64) as f64).ln().powi(w as i32);
                    }
                    acc += v;
                }
                acc
            })
            .collect();
        sums.iter().sum()
    };
    let mut partial = Vec::new();
    let mut blocks = Vec::new();
    let mut running = 0.0;
    let mut covered = h0 - 1;
    for t in 1..=t_max + 1 {
        let hi = 1u64 << t;
        if hi < h0 {
            continue;
        }
        let s = term_range(covered + 1, hi);
        if t >= 2 && (1u64 << (t - 1)) >= h0 {
            blocks.push((t - 1, s));
        }
        running += s;
        covered = hi;
        partial.push((hi, running));
    }
    (partial, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::rat;
    use proptest::prelude::*;

    fn pf(s: &str) -> ApproxFn {
        ApproxFn::parse(s).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(ApproxFn::power(rat_int(1)).unwrap().eval(4).unwrap(), 0.25);
        let m = ApproxFn::min(pf("h^-1/2"), pf("h^-2"));
        assert_eq!(m.eval(16).unwrap(), 1.0 / 256.0);
        let f = pf("h^-2/3");
        assert!((f.eval(8).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(f.exact_rational(8), Some(rat(1, 4)));
        assert!(f.eval(1).is_err());
    }

    #[test]
    fn parse_grammar_and_errors() {
        let f = pf("1*h^-1/2*logh^-0");
        assert_eq!(f.as_power_log().unwrap().a, rat(1, 2));
        assert_eq!(f.to_string(), "1*h^-1/2*logh^0");
        assert_eq!(pf(&f.to_string()).to_string(), f.to_string());
        let g = pf("max(1/2*h^-0.55, h^-1*logh^-2)");
        assert!(matches!(g.form(), Form::Max(..)));
        match ApproxFn::parse("h^+2") {
            Err(Error::Parse { col, msg, .. }) => {
                assert_eq!(col, 1);
                assert!(msg.contains("violates decreasing invariant"));
            }
            other => panic!("{other:?}"),
        }
        match ApproxFn::parse("h^-1 x") {
            Err(Error::Parse { col, .. }) => assert_eq!(col, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_log_power_raises_domain_start() {
        let f = pf("h^-1*logh^3");
        assert_eq!(f.h0(), 21);
        for h in 21..2000 {
            assert!(f.raw(h + 1) <= f.raw(h));
        }
    }

    #[test]
    fn exact_comparisons() {
        let f = pf("h^-1/2");
        assert_eq!(f.cmp_rational(16, &rat(1, 4)), Some(Ordering::Equal));
        assert_eq!(f.cmp_rational(17, &rat(1, 4)), Some(Ordering::Less));
        let g = pf("h^-1*logh^-2");
        let v = g.eval(1000).unwrap();
        let r = rat_from_f64(v * (1.0 + 1e-12));
        assert_eq!(g.cmp_rational(1000, &r), Some(Ordering::Less));
        let e = g.enclose(1000, 128);
        assert!(rat_to_f64(&e.lo) <= v * (1.0 + 1e-15) && v * (1.0 - 1e-15) <= rat_to_f64(&e.hi));
    }

    #[test]
    fn series_examples() {
        let v = classify_product_series(&pf("h^-1/2"), &pf("h^-1/2"), 0);
        assert_eq!((v.kind, v.method), (SeriesKind::Diverges, SeriesMethod::ClosedForm));
        let v = classify_product_series(&pf("h^-0.6"), &pf("h^-0.6"), 0);
        assert_eq!(v.kind, SeriesKind::Converges);
        let v = classify_product_series(&pf("h^-1*logh^-3"), &pf("1"), 1);
        assert_eq!(v.kind, SeriesKind::Converges);
        assert!(v.partial_sums.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn numeric_trend_is_tagged_and_sensible() {
        let t = ApproxFn::table(2, (2..5000u64).map(|h| (h as f64).powf(-0.7)).collect()).unwrap();
        let one = pf("1");
        let v = classify_product_series(&t, &one, 0);
        assert_eq!(v.method, SeriesMethod::NumericTrend);
        assert!(!v.is_exact());
        // Constant continuation beyond the table makes the series diverge.
        assert_eq!(v.kind, SeriesKind::Diverges);
        let geo = ApproxFn::min(pf("h^-3/2"), pf("h^-3/2*logh^1"));
        let v = classify_numeric(&geo, &one, 0, 18);
        assert_eq!(v.kind, SeriesKind::Converges);
    }

    #[test]
    fn order_examples() {
        assert_eq!(pf("5*h^-3*logh^-2").order(), Order::Exact(rat_int(3)));
        assert_eq!(pf("h^-1").order(), Order::Exact(rat_int(1)));
        let t = ApproxFn::table(2, (2..=65536u64).map(|h| (h as f64).powi(-2)).collect()).unwrap();
        match t.order() {
            Order::Approx(x) => assert!((x - 2.0).abs() < 1e-2),
            o => panic!("{o:?}"),
        }
        // Staircase constant on [4^k, 4^(k+1)): dyadic slopes alternate 0 and 2.
        let stairs: Vec<f64> = (2..=65536u64).map(|h| 4f64.powi(-((h as f64).log2() as i32 / 2))).collect();
        assert_eq!(ApproxFn::table(2, stairs).unwrap().order(), Order::Undefined);
    }

    #[test]
    fn step_two_rescaling_diverges() {
        let p1 = pf("h^-1/2");
        let p2 = pf("h^-1/2");
        let s1 = ApproxFn::scaled_by_sqrt_partial_sum(p1.clone(), p2.clone());
        let s2 = ApproxFn::scaled_by_sqrt_partial_sum(p2, p1);
        let v = classify_product_series(&s1, &s2, 0);
        assert_eq!(v.method, SeriesMethod::NumericTrend);
        let incs: Vec<f64> = v.partial_sums.windows(2).map(|w| w[1].1 - w[0].1).collect();
        assert!(incs.iter().all(|d| *d > 0.0));
        // Increments decay like 1/t, not geometrically: no stabilisation.
        let last = incs.len() - 1;
        assert!(incs[last] > 0.5 * incs[last - 4]);
        // Direct and streamed evaluation agree bit for bit.
        let mut buf = vec![0.0; 3000];
        s1.fill(5000, &mut buf);
        assert_eq!(buf[1234], s1.eval(6234).unwrap());
    }

    #[test]
    fn sandwich_at_eps_tenth() {
        for s in ["5*h^-3*logh^-2", "h^-1*logh^3", "1/100*h^-1/2", "h^-2*logh^-1", "h^-1/2"] {
            let f = pf(s);
            let a = rat_to_f64(&f.as_power_log().unwrap().a);
            let k = f.sandwich_threshold_log2(0.1).unwrap();
            let x0 = k as f64 * std::f64::consts::LN_2;
            for j in 0..5000 {
                let x = x0 * (1.0 + j as f64 * 0.01);
                let l = f.ln_at_ln(x).unwrap();
                assert!(-(a + 0.1) * x <= l && l <= -(a - 0.1) * x, "{s} at ln h = {x}");
            }
            if k < 40 {
                for h in (1u64 << k)..(1u64 << k) + 5000 {
                    let v = f.eval(h).unwrap();
                    let x = h as f64;
                    assert!(x.powf(-a - 0.1) <= v && v <= x.powf(-a + 0.1));
                }
            }
        }
    }

    fn arb_power_log() -> impl Strategy<Value = ApproxFn> {
        (1i64..20, 1i64..5, 1i64..12, 1i64..4, -3i64..4).prop_map(|(cn, cd, an, ad, b)| {
            ApproxFn::power_log(rat(cn, cd), rat(an, ad), rat_int(b)).unwrap()
        })
    }

    fn arb_fn() -> impl Strategy<Value = ApproxFn> {
        arb_power_log().prop_recursive(2, 6, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(f, g)| ApproxFn::min(f, g)),
                (inner.clone(), inner).prop_map(|(f, g)| ApproxFn::max(f, g)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn decreasing_and_positive(f in arb_fn(), start in 0u64..(1 << 20)) {
            let h = f.h0() + start;
            let (x, y) = (f.eval(h).unwrap(), f.eval(h + 1).unwrap());
            prop_assert!(x > 0.0 && y > 0.0);
            prop_assert!(y <= x * (1.0 + 1e-14));
        }

        #[test]
        fn decreasing_on_a_run(f in arb_fn(), start in 0u64..(1 << 20)) {
            let mut buf = vec![0.0; 512];
            f.fill(f.h0() + start, &mut buf);
            for w in buf.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-14) && w[1] > 0.0);
            }
        }

        #[test]
        fn min_max_pointwise(f in arb_power_log(), g in arb_power_log(), k in 0u64..100000) {
            let h = f.h0().max(g.h0()) + k;
            let (a, b) = (f.eval(h).unwrap(), g.eval(h).unwrap());
            prop_assert_eq!(ApproxFn::min(f.clone(), g.clone()).eval(h).unwrap(), a.min(b));
            prop_assert_eq!(ApproxFn::max(f, g).eval(h).unwrap(), a.max(b));
        }

        #[test]
        fn enclosure_brackets_ball(f in arb_power_log(), k in 0u64..100000) {
            let h = f.h0() + k;
            let e = f.enclose(h, 80);
            let b = f.ball(h);
            prop_assert!(rat_to_f64(&e.lo) <= b.hi() && b.lo() <= rat_to_f64(&e.hi));
        }

        #[test]
        fn display_round_trips(f in arb_fn(), k in 0u64..1000) {
            let g = ApproxFn::parse(&f.to_string()).unwrap();
            let h = f.h0().max(g.h0()) + k;
            prop_assert_eq!(f.eval(h).unwrap(), g.eval(h).unwrap());
        }
    }
}
