//! Planar curves as graphs `(x, f(x))`: rational quadrics under rational
//! affine maps, plus a few polynomial test graphs.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::ratpoints::RationalPoint;
use crate::real::{fmt_rat, parse_rat, rat, rat_int, rat_to_f64, Ball, Rat, Surd};

/// An interval with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rat,
    pub hi: Rat,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn open(lo: Rat, hi: Rat) -> Result<Interval> {
        Interval::new(lo, hi, true, true)
    }

    pub fn new(lo: Rat, hi: Rat, lo_open: bool, hi_open: bool) -> Result<Interval> {
        if lo >= hi {
            return Err(Error::Domain(format!("empty interval ({}, {})", fmt_rat(&lo), fmt_rat(&hi))));
        }
        Ok(Interval { lo, hi, lo_open, hi_open })
    }

    pub fn unit() -> Interval {
        Interval::open(Rat::zero(), Rat::one()).unwrap()
    }

    pub fn contains(&self, x: &Rat) -> bool {
        let above = if self.lo_open { x > &self.lo } else { x >= &self.lo };
        let below = if self.hi_open { x < &self.hi } else { x <= &self.hi };
        above && below
    }

    /// Whether `p / q` lies in the interval.
    pub fn contains_frac(&self, p: i64, q: u64) -> bool {
        let x = Rat::new(BigInt::from(p), BigInt::from(q));
        self.contains(&x)
    }

    pub fn is_subset_of(&self, o: &Interval) -> bool {
        let lo_ok = self.lo > o.lo || (self.lo == o.lo && (self.lo_open || !o.lo_open));
        let hi_ok = self.hi < o.hi || (self.hi == o.hi && (self.hi_open || !o.hi_open));
        lo_ok && hi_ok
    }

    pub fn lo_f64(&self) -> f64 {
        rat_to_f64(&self.lo)
    }

    pub fn hi_f64(&self) -> f64 {
        rat_to_f64(&self.hi)
    }

    pub fn length(&self) -> f64 {
        rat_to_f64(&(&self.hi - &self.lo))
    }

    pub fn midpoint(&self) -> Rat {
        (&self.lo + &self.hi) / rat_int(2)
    }

    /// Range of integers `p` with `p / q` in the interval.
    pub fn numerator_range(&self, q: u64) -> (i64, i64) {
        let qr = Rat::from_integer(BigInt::from(q));
        let lo = &self.lo * &qr;
        let hi = &self.hi * &qr;
        let mut a = lo.ceil().to_integer().to_i64().unwrap();
        if self.lo_open && lo.is_integer() {
            a += 1;
        }
        let mut b = hi.floor().to_integer().to_i64().unwrap();
        if self.hi_open && hi.is_integer() {
            b -= 1;
        }
        (a, b)
    }

    /// `k` equal closed-open pieces.
    pub fn split(&self, k: usize) -> Vec<Interval> {
        let w = (&self.hi - &self.lo) / rat_int(k as i64);
        (0..k)
            .map(|i| {
                let lo = &self.lo + &w * rat_int(i as i64);
                let hi = &self.lo + &w * rat_int(i as i64 + 1);
                Interval { lo, hi, lo_open: i == 0 && self.lo_open, hi_open: i + 1 < k || self.hi_open }
            })
            .collect()
    }

    /// Parses `(a,b)`, `[a,b]`, `(a,b]`, `[a,b)`.
    pub fn parse(s: &str) -> Result<Interval> {
        let s = s.trim();
        let bad = || Error::parse(1, format!("invalid interval '{s}'"));
        if s.len() < 5 {
            return Err(bad());
        }
        let lo_open = match s.as_bytes()[0] {
            b'(' => true,
            b'[' => false,
            _ => return Err(bad()),
        };
        let hi_open = match s.as_bytes()[s.len() - 1] {
            b')' => true,
            b']' => false,
            _ => return Err(bad()),
        };
        let (a, b) = s[1..s.len() - 1].split_once(',').ok_or_else(bad)?;
        let lo = parse_rat(a).ok_or_else(bad)?;
        let hi = parse_rat(b).ok_or_else(bad)?;
        Interval::new(lo, hi, lo_open, hi_open)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lo_open { '(' } else { '[' },
            fmt_rat(&self.lo),
            fmt_rat(&self.hi),
            if self.hi_open { ')' } else { ']' }
        )
    }
}

/// `z -> M z + t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalAffineMap {
    pub m: [[Rat; 2]; 2],
    pub t: [Rat; 2],
}

impl RationalAffineMap {
    pub fn new(m: [[Rat; 2]; 2], t: [Rat; 2]) -> Result<RationalAffineMap> {
        let map = RationalAffineMap { m, t };
        if map.det().is_zero() {
            return Err(Error::Domain("affine map is not invertible (det M = 0)".into()));
        }
        Ok(map)
    }

    pub fn identity() -> RationalAffineMap {
        let (o, z) = (Rat::one(), Rat::zero());
        RationalAffineMap { m: [[o.clone(), z.clone()], [z.clone(), o]], t: [z.clone(), z] }
    }

    pub fn is_identity(&self) -> bool {
        *self == RationalAffineMap::identity()
    }

    pub fn det(&self) -> Rat {
        &self.m[0][0] * &self.m[1][1] - &self.m[0][1] * &self.m[1][0]
    }

    pub fn apply(&self, z: &[Rat; 2]) -> [Rat; 2] {
        [
            &self.m[0][0] * &z[0] + &self.m[0][1] * &z[1] + &self.t[0],
            &self.m[1][0] * &z[0] + &self.m[1][1] * &z[1] + &self.t[1],
        ]
    }

    pub fn inverse(&self) -> RationalAffineMap {
        let d = self.det();
        let n = [
            [&self.m[1][1] / &d, -&self.m[0][1] / &d],
            [-&self.m[1][0] / &d, &self.m[0][0] / &d],
        ];
        let t = [
            -(&n[0][0] * &self.t[0] + &n[0][1] * &self.t[1]),
            -(&n[1][0] * &self.t[0] + &n[1][1] * &self.t[1]),
        ];
        RationalAffineMap { m: n, t }
    }

    fn apply_f64(&self, u: f64, v: f64) -> (f64, f64) {
        let m = |i: usize, j: usize| rat_to_f64(&self.m[i][j]);
        (
            m(0, 0) * u + m(0, 1) * v + rat_to_f64(&self.t[0]),
            m(1, 0) * u + m(1, 1) * v + rat_to_f64(&self.t[1]),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadricBase {
    Circle,
    Parabola,
    Hyperbola,
}

impl QuadricBase {
    fn name(self) -> &'static str {
        match self {
            QuadricBase::Circle => "circle",
            QuadricBase::Parabola => "parabola",
            QuadricBase::Hyperbola => "hyperbola",
        }
    }

    fn parse(s: &str) -> Option<QuadricBase> {
        match s.trim() {
            "circle" => Some(QuadricBase::Circle),
            "parabola" => Some(QuadricBase::Parabola),
            "hyperbola" => Some(QuadricBase::Hyperbola),
            _ => None,
        }
    }

    /// The base curve's default graph chart `(u, v(u))`.
    fn default_chart(self, eps: &Rat) -> Interval {
        match self {
            QuadricBase::Circle => Interval::open(eps.clone(), Rat::one() - eps).unwrap(),
            QuadricBase::Parabola => Interval::unit(),
            QuadricBase::Hyperbola => Interval::open(rat(5, 4), rat_int(2)).unwrap(),
        }
    }

    fn v_f64(self, u: f64) -> f64 {
        match self {
            QuadricBase::Circle => (1.0 - u * u).sqrt(),
            QuadricBase::Parabola => u * u,
            QuadricBase::Hyperbola => 1.0 / u,
        }
    }
}

/// Quadric provenance of a curve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadricTag {
    pub base: QuadricBase,
    pub map: RationalAffineMap,
}

// A x^2 + B xy + C y^2 + D x + E y + G with integer coefficients.
type Poly2 = [Rat; 6];

fn lin_mul(a: &[Rat; 3], b: &[Rat; 3]) -> Poly2 {
    // (a0 x + a1 y + a2)(b0 x + b1 y + b2)
    [
        &a[0] * &b[0],
        &a[0] * &b[1] + &a[1] * &b[0],
        &a[1] * &b[1],
        &a[0] * &b[2] + &a[2] * &b[0],
        &a[1] * &b[2] + &a[2] * &b[1],
        &a[2] * &b[2],
    ]
}

fn poly_add(a: &Poly2, b: &Poly2, sb: i64) -> Poly2 {
    let s = rat_int(sb);
    std::array::from_fn(|i| &a[i] + &b[i] * &s)
}

/// Scales to coprime integers.
fn primitive(p: &Poly2) -> Poly2 {
    let mut l = BigInt::one();
    for c in p {
        l = l.lcm(c.denom());
    }
    let ints: Vec<BigInt> = p.iter().map(|c| (c * Rat::from_integer(l.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for c in &ints {
        g = g.gcd(c);
    }
    std::array::from_fn(|i| Rat::from_integer(&ints[i] / &g))
}

/// Graph of one branch of a conic `F(x, y) = 0` over a chart.
#[derive(Clone, Debug)]
struct ConicGraph {
    // Integer coefficients, normalised so C >= 0.
    coef: Poly2,
    branch: i8,
    // Discriminant in y: disc(x) = p x^2 + q x + r.
    dp: Rat,
    dq: Rat,
    dr: Rat,
    f: [f64; 6],
    df: [f64; 3],
    // Integer copies for the scaled fast path.
    fast: Option<FastConic>,
}

#[derive(Clone, Copy, Debug)]
struct FastConic {
    b: i128,
    c: i128,
    e: i128,
    a: i128,
    d: i128,
    g: i128,
    dp: i128,
    dq: i128,
    dr: i128,
}

impl ConicGraph {
    fn new(coef: Poly2, branch: i8) -> ConicGraph {
        let mut coef = primitive(&coef);
        if coef[2].is_negative() || (coef[2].is_zero() && coef[1].is_negative()) {
            for c in coef.iter_mut() {
                *c = -c.clone();
            }
        }
        let [a, b, c, d, e, g] = &coef;
        let dp = b * b - rat_int(4) * a * c;
        let dq = rat_int(2) * b * e - rat_int(4) * c * d;
        let dr = e * e - rat_int(4) * c * g;
        let f = std::array::from_fn(|i| rat_to_f64(&coef[i]));
        let df = [rat_to_f64(&dp), rat_to_f64(&dq), rat_to_f64(&dr)];
        let small = |x: &Rat| -> Option<i128> {
            let v = x.to_integer().to_i128()?;
            (v.abs() < (1i128 << 40)).then_some(v)
        };
        let fast = (|| {
            Some(FastConic {
                a: small(a)?,
                b: small(b)?,
                c: small(c)?,
                d: small(d)?,
                e: small(e)?,
                g: small(g)?,
                dp: small(&dp)?,
                dq: small(&dq)?,
                dr: small(&dr)?,
            })
        })();
        ConicGraph { coef, branch, dp, dq, dr, f, df, fast }
    }

    fn is_quadratic_in_y(&self) -> bool {
        !self.coef[2].is_zero()
    }

    fn disc_f64(&self, x: f64) -> f64 {
        (self.df[0] * x + self.df[1]) * x + self.df[2]
    }

    fn disc_rat(&self, x: &Rat) -> Rat {
        (&self.dp * x + &self.dq) * x + &self.dr
    }

    fn f(&self, x: f64) -> f64 {
        let [a, b, c, d, e, g] = self.f;
        if self.is_quadratic_in_y() {
            (-(b * x + e) + self.branch as f64 * self.disc_f64(x).sqrt()) / (2.0 * c)
        } else {
            -(a * x * x + d * x + g) / (b * x + e)
        }
    }

    fn fp(&self, x: f64) -> f64 {
        let [a, b, c, d, e, g] = self.f;
        if self.is_quadratic_in_y() {
            let dd = 2.0 * self.df[0] * x + self.df[1];
            (-b + self.branch as f64 * dd / (2.0 * self.disc_f64(x).sqrt())) / (2.0 * c)
        } else {
            let p = a * x * x + d * x + g;
            let l = b * x + e;
            -((2.0 * a * x + d) * l - p * b) / (l * l)
        }
    }

    fn fpp(&self, x: f64) -> f64 {
        let [a, b, c, d, e, g] = self.f;
        if self.is_quadratic_in_y() {
            let k = 4.0 * self.df[0] * self.df[2] - self.df[1] * self.df[1];
            self.branch as f64 * k / (8.0 * c * self.disc_f64(x).powf(1.5))
        } else {
            let p = a * x * x + d * x + g;
            let l = b * x + e;
            -(2.0 * a * l * l - 2.0 * (2.0 * a * x + d) * b * l + 2.0 * p * b * b) / (l * l * l)
        }
    }

    /// Exact `q * f(p1 / q)`.
    fn scaled_exact(&self, p1: &Rat, q: &Rat) -> Surd {
        let [a, b, c, d, e, g] = &self.coef;
        if self.is_quadratic_in_y() {
            let two_c = rat_int(2) * c;
            let lin = -(b * p1 + e * q) / &two_c;
            let rad = (&self.dp * p1 + &self.dq * q) * p1 + &self.dr * q * q;
            Surd::new(lin, rat_int(self.branch as i64) / two_c, rad).expect("chart checked")
        } else {
            Surd::rational(-((a * p1 + d * q) * p1 + g * q * q) / (b * p1 + e * q))
        }
    }

    /// Ball for `q * f(p1 / q)` using integer arithmetic up to the square root.
    fn scaled_ball(&self, p1: i64, q: u64) -> Option<Ball> {
        let k = self.fast?;
        let (p, q) = (p1 as i128, q as i128);
        let as_ball = |v: i128| {
            let f = v as f64;
            Ball::new(f, if v.unsigned_abs() < (1u128 << 53) { 0.0 } else { f.abs() * f64::EPSILON })
        };
        if k.c != 0 {
            let rad = (k.dp * p + k.dq * q) * p + k.dr * q * q;
            let s = as_ball(rad).sqrt()?;
            let lin = as_ball(-(k.b * p + k.e * q));
            let num = if self.branch > 0 { lin + s } else { lin - s };
            num.checked_div(Ball::exact((2 * k.c) as f64))
        } else {
            let num = as_ball(-((k.a * p + k.d * q) * p + k.g * q * q));
            num.checked_div(as_ball(k.b * p + k.e * q))
        }
    }

    fn validate(&self, dom: &Interval) -> Result<(f64, f64)> {
        let (lo, hi) = (&dom.lo, &dom.hi);
        if self.is_quadratic_in_y() {
            let k = rat_int(4) * &self.dp * &self.dr - &self.dq * &self.dq;
            if k.is_zero() {
                return Err(Error::Domain(format!("inflection: curvature vanishes on {dom}")));
            }
            // Extremes of disc over the closed chart: endpoints and vertex.
            let mut pts = vec![lo.clone(), hi.clone()];
            if !self.dp.is_zero() {
                let v = -&self.dq / (rat_int(2) * &self.dp);
                if &v > lo && &v < hi {
                    pts.push(v);
                }
            }
            let vals: Vec<Rat> = pts.iter().map(|x| self.disc_rat(x)).collect();
            let min = vals.iter().min().unwrap();
            if !min.is_positive() {
                return Err(Error::Domain(format!(
                    "vertical tangent: the curve is not a graph over {}",
                    self.bad_subinterval(dom)
                )));
            }
            let max = vals.iter().max().unwrap();
            let kk = rat_to_f64(&k).abs() / (8.0 * self.f[2].abs());
            Ok((kk / rat_to_f64(max).powf(1.5), kk / rat_to_f64(min).powf(1.5)))
        } else {
            let [a, b, _, d, e, g] = &self.coef;
            let l_lo = b * lo + e;
            let l_hi = b * hi + e;
            if l_lo.is_zero() || l_hi.is_zero() || l_lo.is_negative() != l_hi.is_negative() {
                let root = if b.is_zero() { "everywhere".to_string() } else { format!("x={}", fmt_rat(&(-e / b))) };
                return Err(Error::Domain(format!("vertical asymptote at {root} within {dom}")));
            }
            // f'' = -2 (A E^2 - D B E + G B^2) / L^3
            let k = a * e * e - d * b * e + g * b * b;
            if k.is_zero() {
                return Err(Error::Domain(format!("inflection: curvature vanishes on {dom}")));
            }
            let c0 = rat_to_f64(&(rat_int(2) * k)).abs();
            let (u, v) = (rat_to_f64(&l_lo).abs().powi(3), rat_to_f64(&l_hi).abs().powi(3));
            Ok((c0 / u.max(v), c0 / u.min(v)))
        }
    }

    fn bad_subinterval(&self, dom: &Interval) -> String {
        let (lo, hi) = (dom.lo_f64(), dom.hi_f64());
        let n = 1000;
        let bad: Vec<f64> = (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .filter(|&x| self.disc_f64(x) <= 0.0)
            .collect();
        match (bad.first(), bad.last()) {
            (Some(a), Some(b)) => format!("[{a:.6}, {b:.6}]"),
            _ => format!("{dom} (at an endpoint)"),
        }
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Conic(ConicGraph),
    /// Polynomial with rational coefficients, lowest degree first.
    Poly(Vec<Rat>),
}

#[derive(Clone, Debug)]
pub struct PlanarCurve {
    shape: Shape,
    domain: Interval,
    c1: f64,
    c2: f64,
    tag: Option<QuadricTag>,
    name: String,
}

/// Default half-width trimmed off the circle's first-quadrant arc.
pub fn default_circle_eps() -> Rat {
    rat(1, 10)
}

impl PlanarCurve {
    /// A quadric image under `map`, restricted to the chart `dom` with an
    /// explicit branch (`+1` upper, `-1` lower), or an automatically chosen
    /// branch that matches the image of the base curve's default arc.
    pub fn make_quadric(
        base: QuadricBase,
        map: RationalAffineMap,
        dom: Interval,
        branch: Option<i8>,
    ) -> Result<PlanarCurve> {
        if map.det().is_zero() {
            return Err(Error::Domain("affine map is not invertible (det M = 0)".into()));
        }
        // u, v as linear forms in (x, y).
        let inv = map.inverse();
        let u = [inv.m[0][0].clone(), inv.m[0][1].clone(), inv.t[0].clone()];
        let v = [inv.m[1][0].clone(), inv.m[1][1].clone(), inv.t[1].clone()];
        let one: Poly2 = std::array::from_fn(|i| if i == 5 { Rat::one() } else { Rat::zero() });
        let vpoly: Poly2 = [Rat::zero(), Rat::zero(), Rat::zero(), v[0].clone(), v[1].clone(), v[2].clone()];
        let coef = match base {
            QuadricBase::Circle => poly_add(&poly_add(&lin_mul(&u, &u), &lin_mul(&v, &v), 1), &one, -1),
            QuadricBase::Parabola => poly_add(&vpoly, &lin_mul(&u, &u), -1),
            QuadricBase::Hyperbola => poly_add(&lin_mul(&u, &v), &one, -1),
        };
        let probe = ConicGraph::new(coef.clone(), 1);
        let branch = match branch {
            Some(b) => b,
            None if !probe.is_quadratic_in_y() => 1,
            None => {
                // Image of the base arc's midpoint decides the branch.
                let chart = base.default_chart(&default_circle_eps());
                let um = rat_to_f64(&chart.midpoint());
                let (x, y) = map.apply_f64(um, base.v_f64(um));
                let up = ConicGraph::new(coef.clone(), 1).f(x);
                let dn = ConicGraph::new(coef.clone(), -1).f(x);
                if (up - y).abs() <= (dn - y).abs() {
                    1
                } else {
                    -1
                }
            }
        };
        let g = ConicGraph::new(coef, branch);
        let (lo, hi) = g.validate(&dom)?;
        let name = if map.is_identity() && branch == 1 && dom == default_domain(base) {
            base.name().to_string()
        } else {
            let m = &map.m;
            format!(
                "quadric({}; M={},{},{},{}; t={},{}; I={}; branch={})",
                base.name(),
                fmt_rat(&m[0][0]),
                fmt_rat(&m[0][1]),
                fmt_rat(&m[1][0]),
                fmt_rat(&m[1][1]),
                fmt_rat(&map.t[0]),
                fmt_rat(&map.t[1]),
                dom,
                if branch > 0 { "+" } else { "-" }
            )
        };
        Ok(PlanarCurve {
            shape: Shape::Conic(g),
            domain: dom,
            c1: 0.95 * lo,
            c2: 1.05 * hi,
            tag: Some(QuadricTag { base, map }),
            name,
        })
    }

    pub fn parabola() -> PlanarCurve {
        PlanarCurve::make_quadric(QuadricBase::Parabola, RationalAffineMap::identity(), Interval::unit(), Some(1))
            .unwrap()
    }

    /// Upper unit-circle arc over `(eps, 1 - eps)`.
    pub fn circle_arc(eps: Rat) -> Result<PlanarCurve> {
        if !(eps.is_positive() && eps < rat(1, 2)) {
            return Err(Error::Domain(format!("circle eps={} must lie in (0, 1/2)", fmt_rat(&eps))));
        }
        let dom = Interval::open(eps.clone(), Rat::one() - &eps)?;
        let mut c = PlanarCurve::make_quadric(QuadricBase::Circle, RationalAffineMap::identity(), dom, Some(1))?;
        c.name = format!("circle[eps={}]", fmt_rat(&eps));
        Ok(c)
    }

    pub fn circle() -> PlanarCurve {
        PlanarCurve::circle_arc(default_circle_eps()).unwrap()
    }

    pub fn hyperbola() -> PlanarCurve {
        PlanarCurve::make_quadric(
            QuadricBase::Hyperbola,
            RationalAffineMap::identity(),
            default_domain(QuadricBase::Hyperbola),
            Some(1),
        )
        .unwrap()
    }

    /// Graph of a polynomial with constant-sign second derivative on `dom`,
    /// checked on a grid of 1000 points.
    pub fn polynomial(name: &str, coeffs: Vec<Rat>, dom: Interval) -> Result<PlanarCurve> {
        let shape = Shape::Poly(coeffs);
        let mut c = PlanarCurve { shape, domain: dom.clone(), c1: 0.0, c2: 0.0, tag: None, name: name.into() };
        let (lo, hi) = (dom.lo_f64(), dom.hi_f64());
        let n = 1000;
        let samples: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / n as f64;
                (x, c.fpp(x))
            })
            .collect();
        for w in samples.windows(2) {
            if w[0].1 == 0.0 || w[0].1.signum() != w[1].1.signum() {
                return Err(Error::Domain(format!(
                    "inflection: curvature vanishes in [{:.6}, {:.6}]",
                    w[0].0, w[1].0
                )));
            }
        }
        let abs: Vec<f64> = samples.iter().map(|s| s.1.abs()).collect();
        c.c1 = 0.95 * abs.iter().cloned().fold(f64::INFINITY, f64::min);
        c.c2 = 1.05 * abs.iter().cloned().fold(0.0, f64::max);
        Ok(c)
    }

    /// Parses `parabola`, `circle`, `circle[eps=p/q]`, `hyperbola`,
    /// `quadric(base; M=a,b,c,d; t=e,f[; I=(lo,hi)][; branch=+|-])`,
    /// `graph(cubic)` and `graph(quartic)`.
    pub fn parse(s: &str) -> Result<PlanarCurve> {
        let s = s.trim();
        match s {
            "parabola" => return Ok(PlanarCurve::parabola()),
            "circle" => return Ok(PlanarCurve::circle()),
            "hyperbola" => return Ok(PlanarCurve::hyperbola()),
            "graph(cubic)" => {
                return PlanarCurve::polynomial(
                    "graph(cubic)",
                    vec![Rat::zero(), Rat::zero(), Rat::zero(), Rat::one()],
                    Interval::open(rat(1, 2), Rat::one())?,
                )
            }
            "graph(quartic)" => {
                return PlanarCurve::polynomial(
                    "graph(quartic)",
                    vec![Rat::zero(), Rat::zero(), Rat::zero(), Rat::zero(), Rat::one()],
                    Interval::open(rat(1, 2), Rat::one())?,
                )
            }
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("circle[") {
            let body = rest.strip_suffix(']').ok_or_else(|| Error::parse(s.len(), "expected ']'"))?;
            let v = body
                .trim()
                .strip_prefix("eps=")
                .ok_or_else(|| Error::parse(8, "expected 'eps='"))?;
            let eps = parse_rat(v).ok_or_else(|| Error::parse(12, format!("invalid rational '{v}'")))?;
            return PlanarCurve::circle_arc(eps);
        }
        if let Some(rest) = s.strip_prefix("quadric(") {
            let body = rest.strip_suffix(')').ok_or_else(|| Error::parse(s.len(), "expected ')'"))?;
            return parse_quadric(body);
        }
        if s.starts_with("graph(") {
            return Err(Error::parse(7, format!("unknown built-in graph in '{s}' (cubic, quartic)")));
        }
        Err(Error::parse(1, format!("unknown curve '{s}'")))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn curvature_bounds(&self) -> (f64, f64) {
        (self.c1, self.c2)
    }

    pub fn quadric_tag(&self) -> Option<&QuadricTag> {
        self.tag.as_ref()
    }

    /// A copy restricted to a sub-chart.
    pub fn restrict(&self, dom: Interval) -> Result<PlanarCurve> {
        if !dom.is_subset_of(&self.domain) {
            return Err(Error::Domain(format!("{dom} is not inside the curve domain {}", self.domain)));
        }
        let mut c = self.clone();
        c.domain = dom;
        Ok(c)
    }

    pub fn f(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Conic(g) => g.f(x),
            Shape::Poly(c) => c.iter().rev().fold(0.0, |acc, k| acc * x + rat_to_f64(k)),
        }
    }

    pub fn fp(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Conic(g) => g.fp(x),
            Shape::Poly(c) => {
                c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, v)| acc * x + k as f64 * rat_to_f64(v))
            }
        }
    }

    pub fn fpp(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Conic(g) => g.fpp(x),
            Shape::Poly(c) => c
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, v)| acc * x + (k * (k - 1)) as f64 * rat_to_f64(v)),
        }
    }

    /// Exact `f(x)` at a rational abscissa in the domain.
    pub fn point_at(&self, x: &Rat) -> Result<Surd> {
        if !self.domain.contains(x) {
            return Err(Error::Domain(format!("x={} outside {}", fmt_rat(x), self.domain)));
        }
        Ok(self.scaled_exact_rat(x, &Rat::one()))
    }

    fn scaled_exact_rat(&self, p1: &Rat, q: &Rat) -> Surd {
        match &self.shape {
            Shape::Conic(g) => g.scaled_exact(p1, q),
            Shape::Poly(c) => {
                let x = p1 / q;
                Surd::rational(q * c.iter().rev().fold(Rat::zero(), |acc, k| acc * &x + k))
            }
        }
    }

    /// Exact `q * f(p1 / q)`.
    pub fn scaled_exact(&self, p1: i64, q: u64) -> Surd {
        self.scaled_exact_rat(&rat_int(p1), &Rat::from_integer(BigInt::from(q)))
    }

    /// Ball enclosing `q * f(p1 / q)`.
    pub fn scaled_ball(&self, p1: i64, q: u64) -> Ball {
        if let Shape::Conic(g) = &self.shape {
            if let Some(b) = g.scaled_ball(p1, q) {
                return b;
            }
        }
        self.scaled_exact(p1, q).ball()
    }

    /// Exact `|f(p1/q) - p2/q|`; a zero-width enclosure when rational.
    pub fn distance_to_curve(&self, pt: &RationalPoint) -> Result<Surd> {
        let x = pt.x();
        if !self.domain.contains(&x) {
            return Err(Error::Domain(format!("p1/q = {} outside {}", fmt_rat(&x), self.domain)));
        }
        let q = Rat::from_integer(BigInt::from(pt.q));
        let d = self.point_at(&x)?.add_rat(&-(rat_int(pt.p2) / q));
        Ok(if d.signum() == std::cmp::Ordering::Less { d.neg() } else { d })
    }

    /// `sup |f'|` over the closed domain (f' is monotone).
    pub fn sup_abs_fp(&self) -> f64 {
        self.fp(self.domain.lo_f64()).abs().max(self.fp(self.domain.hi_f64()).abs())
    }

    /// `inf |f'|` over the domain.
    pub fn inf_abs_fp(&self) -> f64 {
        let (lo, hi) = (self.domain.lo_f64(), self.domain.hi_f64());
        let (a, b) = (self.fp(lo), self.fp(hi));
        if a.signum() != b.signum() {
            0.0
        } else {
            a.abs().min(b.abs())
        }
    }

    /// Point in `[a, b]` where `f'` vanishes, if any.
    pub fn critical_point(&self, a: f64, b: f64) -> Option<f64> {
        let (fa, fb) = (self.fp(a), self.fp(b));
        if fa == 0.0 {
            return Some(a);
        }
        if fa.signum() == fb.signum() {
            return None;
        }
        let (mut lo, mut hi) = (a, b);
        for _ in 0..80 {
            let m = 0.5 * (lo + hi);
            if self.fp(m).signum() == fa.signum() {
                lo = m;
            } else {
                hi = m;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Sub-intervals of `[a, b]` on which `y0 - dy < f(x) < y0 + dy`.
    pub fn band_preimage(&self, a: f64, b: f64, y0: f64, dy: f64) -> Vec<(f64, f64)> {
        let mut pieces = vec![(a, b)];
        if let Some(c) = self.critical_point(a, b) {
            if c > a && c < b {
                pieces = vec![(a, c), (c, b)];
            }
        }
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in pieces {
            if let Some(iv) = self.monotone_band(lo, hi, y0 - dy, y0 + dy) {
                match out.last_mut() {
                    Some(last) if last.1 >= iv.0 => last.1 = last.1.max(iv.1),
                    _ => out.push(iv),
                }
            }
        }
        out
    }

    fn monotone_band(&self, a: f64, b: f64, ylo: f64, yhi: f64) -> Option<(f64, f64)> {
        let (fa, fb) = (self.f(a), self.f(b));
        let inc = fb >= fa;
        // x where f crosses level y, clamped to [a, b].
        let cross = |y: f64| -> f64 {
            let below = |x: f64| (self.f(x) < y) == inc;
            if !below(a) {
                return a;
            }
            if below(b) {
                return b;
            }
            let (mut lo, mut hi) = (a, b);
            for _ in 0..64 {
                let m = 0.5 * (lo + hi);
                if below(m) {
                    lo = m;
                } else {
                    hi = m;
                }
                if hi - lo <= 1e-16 * (1.0 + m.abs()) {
                    break;
                }
            }
            0.5 * (lo + hi)
        };
        let (x1, x2) = if inc { (cross(ylo), cross(yhi)) } else { (cross(yhi), cross(ylo)) };
        (x2 > x1).then_some((x1, x2))
    }
}

fn default_domain(base: QuadricBase) -> Interval {
    base.default_chart(&default_circle_eps())
}

fn parse_quadric(body: &str) -> Result<PlanarCurve> {
    let mut parts = body.split(';');
    let base_txt = parts.next().unwrap_or("");
    let base = QuadricBase::parse(base_txt)
        .ok_or_else(|| Error::parse(9, format!("unknown quadric base '{}'", base_txt.trim())))?;
    let mut m: Option<[[Rat; 2]; 2]> = None;
    let mut t: Option<[Rat; 2]> = None;
    let mut dom: Option<Interval> = None;
    let mut branch: Option<i8> = None;
    let nums = |v: &str, n: usize| -> Result<Vec<Rat>> {
        let out: Option<Vec<Rat>> = v.split(',').map(parse_rat).collect();
        match out {
            Some(o) if o.len() == n => Ok(o),
            _ => Err(Error::parse(1, format!("expected {n} rationals in '{v}'"))),
        }
    };
    for part in parts {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("expected key=value in '{}'", part.trim())))?;
        match k.trim() {
            "M" => {
                let x = nums(v, 4)?;
                m = Some([[x[0].clone(), x[1].clone()], [x[2].clone(), x[3].clone()]]);
            }
            "t" => {
                let x = nums(v, 2)?;
                t = Some([x[0].clone(), x[1].clone()]);
            }
            "I" => dom = Some(Interval::parse(v)?),
            "branch" => {
                branch = Some(match v.trim() {
                    "+" => 1,
                    "-" => -1,
                    o => return Err(Error::parse(1, format!("branch must be + or -, got '{o}'"))),
                })
            }
            o => return Err(Error::parse(1, format!("unknown quadric key '{o}'"))),
        }
    }
    let m = m.ok_or_else(|| Error::parse(1, "quadric needs M=a,b,c,d"))?;
    let t = t.unwrap_or_else(|| [Rat::zero(), Rat::zero()]);
    let map = RationalAffineMap::new(m, t)?;
    let dom = match dom {
        Some(d) => d,
        None => image_chart(base, &map)?,
    };
    PlanarCurve::make_quadric(base, map, dom, branch)
}

/// x-range of the image of the base's default arc, rounded inward to 1/1024.
fn image_chart(base: QuadricBase, map: &RationalAffineMap) -> Result<Interval> {
    let chart = default_domain(base);
    let xs: Vec<f64> = [chart.lo_f64(), chart.hi_f64()]
        .iter()
        .map(|&u| map.apply_f64(u, base.v_f64(u)).0)
        .collect();
    let (a, b) = (xs[0].min(xs[1]), xs[0].max(xs[1]));
    let lo = Rat::new(BigInt::from((a * 1024.0).ceil() as i64), BigInt::from(1024));
    let hi = Rat::new(BigInt::from((b * 1024.0).floor() as i64), BigInt::from(1024));
    Interval::open(lo, hi).map_err(|_| Error::Domain("the mapped arc is not a graph over x; give I=(lo,hi)".into()))
}

impl fmt::Display for PlanarCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Lipschitz constant of `(x, y) -> |q - sqrt(p1^2 + p2^2)| / q` in `y`:
/// a point within vertical distance `d` of the unit circle lies within `d` of
/// it radially.
pub const CIRCLE_RADIAL_K: f64 = 1.0;
