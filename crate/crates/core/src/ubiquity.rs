//! Local ubiquity of rational points near a curve, and the measure and
//! dimension predictions that ubiquity yields.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::approxfn::{trend_kind, ApproxFn, SeriesKind, SeriesMethod, SeriesVerdict};
use crate::curve::{Interval, PlanarCurve};
use crate::error::{Error, Result};
use crate::ratpoints::{scan_denominator, RationalPoint};
use crate::real::{certify_lt_slow, fmt_rat, rat_int, rat_to_f64, Rat, CURVE_CAP_BITS};

/// The unbounded increasing `u` in `rho(t) = u(log2 t) / (t^2 psi(t))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UFn {
    /// `u(s) = ln(2 + s)`.
    Log,
    /// `u(s) = 2^(eps s)`, so that `u(log2 t) = t^eps`.
    Pow(#[serde(serialize_with = "ser_rat")] Rat),
}

fn ser_rat<S: serde::Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_rat(r))
}

impl UFn {
    pub fn parse(s: &str) -> Result<UFn> {
        let s = s.trim();
        if s == "log" {
            return Ok(UFn::Log);
        }
        if let Some(e) = s.strip_prefix("pow:") {
            let eps = crate::real::parse_rat(e)
                .filter(|r| r.is_positive())
                .ok_or_else(|| Error::parse(5, format!("bad exponent '{e}'")))?;
            return Ok(UFn::Pow(eps));
        }
        Err(Error::parse(1, format!("unknown u '{s}' (expected log or pow:<eps>)")))
    }

    pub fn ln_at(&self, t: u32) -> f64 {
        match self {
            UFn::Log => (2.0 + t as f64).ln().ln(),
            UFn::Pow(e) => rat_to_f64(e) * t as f64 * std::f64::consts::LN_2,
        }
    }

    fn sig(&self) -> Sig {
        match self {
            UFn::Log => Sig { r: Rat::zero(), beta: Rat::zero(), gamma: -Rat::one() },
            UFn::Pow(e) => Sig { r: -e.clone(), beta: Rat::zero(), gamma: Rat::zero() },
        }
    }
}

impl fmt::Display for UFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UFn::Log => write!(f, "log"),
            UFn::Pow(e) => write!(f, "pow:{}", fmt_rat(e)),
        }
    }
}

/// Growth `F(2^t) ≍ 2^(-r t) t^(-beta) (ln t)^(-gamma)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sig {
    pub r: Rat,
    pub beta: Rat,
    pub gamma: Rat,
}

impl Sig {
    fn mul(&self, o: &Sig) -> Sig {
        Sig { r: &self.r + &o.r, beta: &self.beta + &o.beta, gamma: &self.gamma + &o.gamma }
    }

    fn inv(&self) -> Sig {
        Sig { r: -self.r.clone(), beta: -self.beta.clone(), gamma: -self.gamma.clone() }
    }

    fn series_converges(&self) -> bool {
        let one = Rat::one();
        self.r.is_positive()
            || (self.r.is_zero() && (self.beta > one || (self.beta == one && self.gamma > one)))
    }
}

/// A positive function sampled at `h = 2^t` through `ln F(2^t)`.
#[derive(Clone)]
pub struct DyadicFn {
    pub label: String,
    pub sig: Option<Sig>,
    ln: Arc<dyn Fn(u32) -> f64 + Send + Sync>,
}

impl fmt::Debug for DyadicFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DyadicFn").field("label", &self.label).field("sig", &self.sig).finish()
    }
}

impl DyadicFn {
    pub fn new(label: impl Into<String>, sig: Option<Sig>, ln: impl Fn(u32) -> f64 + Send + Sync + 'static) -> DyadicFn {
        DyadicFn { label: label.into(), sig, ln: Arc::new(ln) }
    }

    pub fn ln_at(&self, t: u32) -> f64 {
        (self.ln)(t)
    }

    pub fn from_approx(psi: &ApproxFn) -> DyadicFn {
        let sig = psi.as_power_log().map(|p| Sig { r: p.a.clone(), beta: p.b.clone(), gamma: Rat::zero() });
        let p = psi.clone();
        DyadicFn::new(psi.to_string(), sig, move |t| p.ln_at_pow2(t))
    }

    /// `t^-k psi(t)`.
    pub fn over_power(psi: &ApproxFn, k: &Rat) -> DyadicFn {
        let base = DyadicFn::from_approx(psi);
        let kf = rat_to_f64(k);
        let sig = base.sig.as_ref().map(|s| s.mul(&Sig { r: k.clone(), beta: Rat::zero(), gamma: Rat::zero() }));
        let label = format!("h^-{} * ({})", fmt_rat(k), base.label);
        DyadicFn::new(label, sig, move |t| base.ln_at(t) - kf * t as f64 * std::f64::consts::LN_2)
    }

    /// `rho(t) = u(log2 t) / (t^2 psi(t))`.
    pub fn rho(psi: &ApproxFn, u: &UFn) -> DyadicFn {
        let base = DyadicFn::from_approx(psi);
        let sig = base
            .sig
            .as_ref()
            .map(|s| u.sig().mul(&Sig { r: rat_int(2), beta: Rat::zero(), gamma: Rat::zero() }).mul(&s.inv()));
        let label = format!("rho[{}; u={u}]", base.label);
        let u = u.clone();
        DyadicFn::new(label, sig, move |t| u.ln_at(t) - 2.0 * t as f64 * std::f64::consts::LN_2 - base.ln_at(t))
    }

    /// `F(2^t) * 2^(-k t)`.
    pub fn times_pow2(&self, k: &Rat) -> DyadicFn {
        let kf = rat_to_f64(k);
        let sig = self.sig.as_ref().map(|s| s.mul(&Sig { r: k.clone(), beta: Rat::zero(), gamma: Rat::zero() }));
        let me = self.clone();
        DyadicFn::new(format!("{} * 2^(-{} t)", self.label, fmt_rat(k)), sig, move |t| me.ln_at(t) - kf * t as f64 * std::f64::consts::LN_2)
    }

    /// `c F`.
    pub fn scaled(&self, c: f64) -> DyadicFn {
        let me = self.clone();
        let lc = c.ln();
        DyadicFn::new(format!("{c} * {}", self.label), self.sig.clone(), move |t| me.ln_at(t) + lc)
    }
}

// ---------------------------------------------------------------------------
// Systems
// ---------------------------------------------------------------------------

/// A resonant point `p1/q` whose partner `p2/q` is within `Phi(q) = psi(q)/q`
/// of the curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Resonant {
    pub x: f64,
    pub point: RationalPoint,
}

#[derive(Clone, Debug, Serialize)]
pub struct UbiquitySystem {
    pub curve: String,
    pub psi: String,
    pub u: UFn,
    pub t_max: u32,
    /// `(lo, hi)` of the interval the resonant points live in; `None` when empty.
    pub interval: Option<(f64, f64)>,
    /// Sorted by `x`; one entry per reduced rational point.
    pub resonant: Vec<Resonant>,
    #[serde(skip)]
    psi_fn: Option<ApproxFn>,
    #[serde(skip)]
    curve_fn: Option<PlanarCurve>,
}

fn check_growth(psi: &ApproxFn, t_max: u32) -> Result<()> {
    if let Some(p) = psi.as_power_log() {
        let (zero, one) = (Rat::zero(), Rat::one());
        let psi_to_zero = p.a > zero || (p.a == zero && p.b > zero);
        let th_to_inf = p.a < one || (p.a == one && p.b < zero);
        if psi_to_zero && th_to_inf {
            return Ok(());
        }
        return Err(Error::Precondition(format!("{psi} needs psi(t) -> 0 and t psi(t) -> infinity")));
    }
    let (a, b) = (t_max / 2, t_max);
    let (la, lb) = (psi.ln_at_pow2(a), psi.ln_at_pow2(b));
    let ln2 = std::f64::consts::LN_2;
    if lb < la && lb + b as f64 * ln2 > la + a as f64 * ln2 {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{psi} needs psi(t) -> 0 and t psi(t) -> infinity (checked at 2^{a} and 2^{b})"
        )))
    }
}

/// All reduced rational points `(p1/q, p2/q)`, `q <= 2^t_max`, with `p1/q` in
/// `window ∩ I0` and `|f(p1/q) - p2/q| < psi(q)/q`. An empty window gives an
/// empty system.
pub fn build_system(
    curve: &PlanarCurve,
    psi: &ApproxFn,
    u: &UFn,
    t_max: u32,
    window: Option<(Rat, Rat)>,
) -> Result<UbiquitySystem> {
    if t_max > 24 {
        return Err(Error::Precondition(format!("t_max = {t_max} exceeds 24")));
    }
    check_growth(psi, t_max)?;
    let dom = curve.domain();
    let iv = match window {
        None => Some(dom.clone()),
        Some((lo, hi)) => {
            let lo = lo.max(dom.lo.clone());
            let hi = hi.min(dom.hi.clone());
            if lo < hi {
                Some(Interval::open(lo, hi)?)
            } else {
                None
            }
        }
    };
    let mut sys = UbiquitySystem {
        curve: curve.name().to_string(),
        psi: psi.to_string(),
        u: u.clone(),
        t_max,
        interval: iv.as_ref().map(|i| (i.lo_f64(), i.hi_f64())),
        resonant: Vec::new(),
        psi_fn: Some(psi.clone()),
        curve_fn: Some(curve.clone()),
    };
    let Some(iv) = iv else { return Ok(sys) };
    let q_max = 1u64 << t_max;
    let per_q: Vec<(Vec<Resonant>, Vec<RationalPoint>)> = (psi.h0()..=q_max)
        .into_par_iter()
        .map(|q| {
            let mut out = Vec::new();
            let mut amb = Vec::new();
            scan_denominator(
                curve,
                &iv,
                psi,
                q,
                q,
                q,
                |p1, p2| {
                    let pt = RationalPoint::new(p1, p2, q);
                    if pt.is_canonical() {
                        out.push(Resonant { x: p1 as f64 / q as f64, point: pt });
                    }
                },
                &mut amb,
            );
            (out, amb)
        })
        .collect();
    let mut amb_all = Vec::new();
    for (r, a) in per_q {
        sys.resonant.extend(r);
        amb_all.extend(a);
    }
    if let Some(p) = amb_all.first() {
        return Err(Error::Ambiguous(format!(
            "{} point(s) undecided at the precision cap, first ({}/{}, {}/{})",
            amb_all.len(),
            p.p1,
            p.q,
            p.p2,
            p.q
        )));
    }
    sys.resonant.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.point.cmp(&b.point)));
    Ok(sys)
}

impl UbiquitySystem {
    /// Re-checks every `Phi`-closeness certificate with exact arithmetic at a
    /// doubled precision cap. Returns the number of points checked.
    pub fn reverify(&self) -> Result<usize> {
        let (Some(psi), Some(curve)) = (&self.psi_fn, &self.curve_fn) else {
            return Ok(0);
        };
        let failures: Vec<RationalPoint> = self
            .resonant
            .par_iter()
            .filter_map(|r| {
                let RationalPoint { p1, p2, q } = r.point;
                let d = curve.scaled_exact(p1, q).add_rat(&-rat_int(p2));
                let d = if d.signum().is_lt() { d.neg() } else { d };
                let lhs = d.scale(&Rat::new(BigInt::one(), BigInt::from(q)));
                match certify_lt_slow(&lhs, &psi.threshold(q, q), 2 * CURVE_CAP_BITS) {
                    Ok(true) => None,
                    _ => Some(r.point),
                }
            })
            .collect();
        match failures.first() {
            None => Ok(self.resonant.len()),
            Some(p) => Err(Error::Ambiguous(format!("re-verification failed at ({}/{}, {}/{})", p.p1, p.q, p.p2, p.q))),
        }
    }

    /// Number of resonant points with `q <= 2^t`.
    pub fn count_up_to(&self, t: u32) -> usize {
        let h = 1u64 << t;
        self.resonant.iter().filter(|r| r.point.q <= h).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverFraction {
    pub t: u32,
    pub interval: usize,
    pub lo: f64,
    pub hi: f64,
    pub radius: f64,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UbiquityReport {
    pub curve: String,
    pub psi: String,
    pub u: String,
    pub t_min: u32,
    pub t_max: u32,
    pub subintervals: usize,
    pub rho_scale: f64,
    pub rows: Vec<CoverFraction>,
    /// Minimum fraction over the tested `(t, I)`.
    pub kappa_hat: f64,
    /// `(t, interval index)` attaining `kappa_hat`.
    pub worst: Option<(u32, usize)>,
}

/// `|⋃ B(x, r) ∩ [lo, hi]| / (hi - lo)` for sorted centres.
pub fn union_fraction(centres: &[f64], r: f64, lo: f64, hi: f64) -> f64 {
    if r <= 0.0 || hi <= lo {
        return 0.0;
    }
    let start = centres.partition_point(|x| *x <= lo - r);
    let mut covered = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for &x in &centres[start..] {
        if x - r >= hi {
            break;
        }
        let (a, b) = ((x - r).max(lo), (x + r).min(hi));
        cur = match cur {
            Some((s, e)) if a <= e => Some((s, e.max(b))),
            Some((s, e)) => {
                covered += e - s;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((s, e)) = cur {
        covered += e - s;
    }
    (covered / (hi - lo)).clamp(0.0, 1.0)
}

/// Covering fractions `|⋃_{q <= 2^t} B(p1/q, c rho(2^t)) ∩ I| / |I|` for the
/// `k` equal sub-intervals `I` of the system's interval, `t_min <= t <= t_max`.
pub fn covering_fractions(sys: &UbiquitySystem, t_min: u32, t_max: u32, k: usize, rho_scale: f64) -> Result<UbiquityReport> {
    if k == 0 {
        return Err(Error::Precondition("need at least one sub-interval".into()));
    }
    if t_min > t_max || t_max > sys.t_max {
        return Err(Error::Precondition(format!("t range {t_min}..{t_max} outside the system's 0..{}", sys.t_max)));
    }
    let psi = sys.psi_fn.as_ref().ok_or_else(|| Error::Precondition("system without psi".into()))?;
    let rho = DyadicFn::rho(psi, &sys.u);
    let jobs: Vec<(u32, usize)> = (t_min..=t_max).flat_map(|t| (0..k).map(move |i| (t, i))).collect();
    let rows: Vec<CoverFraction> = jobs
        .par_iter()
        .map(|&(t, i)| {
            let radius = rho_scale * rho.ln_at(t).exp();
            let (lo, hi) = match sys.interval {
                Some((a, b)) => (a + (b - a) * i as f64 / k as f64, a + (b - a) * (i + 1) as f64 / k as f64),
                None => (0.0, 0.0),
            };
            let h = 1u64 << t;
            let centres: Vec<f64> = sys.resonant.iter().filter(|r| r.point.q <= h).map(|r| r.x).collect();
            let fraction = union_fraction(&centres, radius, lo, hi);
            CoverFraction { t, interval: i, lo, hi, radius, fraction }
        })
        .collect();
    let worst = rows
        .iter()
        .min_by(|a, b| a.fraction.partial_cmp(&b.fraction).unwrap())
        .map(|r| (r.t, r.interval));
    let kappa_hat = rows.iter().map(|r| r.fraction).fold(f64::INFINITY, f64::min);
    Ok(UbiquityReport {
        curve: sys.curve.clone(),
        psi: sys.psi.clone(),
        u: sys.u.to_string(),
        t_min,
        t_max,
        subintervals: k,
        rho_scale,
        kappa_hat: if rows.is_empty() { 0.0 } else { kappa_hat },
        worst,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Predictions
// ---------------------------------------------------------------------------

/// Classifies `sum_t Psi(2^t)/rho(2^t)` after checking the regularity
/// `Psi(2^(t+1)) <= Psi(2^t)/2` over `t_max/2 <= t < t_max`. Divergence
/// predicts full measure for the limsup set.
pub fn predict_lemma1(rho: &DyadicFn, big_psi: &DyadicFn, t_max: u32) -> Result<SeriesVerdict> {
    if t_max < 4 {
        return Err(Error::Precondition("t_max must be at least 4".into()));
    }
    let ln2 = std::f64::consts::LN_2;
    for t in t_max / 2..t_max {
        if big_psi.ln_at(t + 1) - big_psi.ln_at(t) > -ln2 + 1e-12 {
            return Err(Error::Precondition(format!(
                "regularity Psi(2^(t+1)) <= Psi(2^t)/2 fails at t = {t}"
            )));
        }
    }
    let terms: Vec<(u32, f64)> = (1..=t_max).map(|t| (t, (big_psi.ln_at(t) - rho.ln_at(t)).exp())).collect();
    let mut acc = 0.0;
    let partial_sums = terms
        .iter()
        .map(|&(t, v)| {
            acc += v;
            (1u64 << t, acc)
        })
        .collect();
    let (kind, method) = match (&rho.sig, &big_psi.sig) {
        (Some(r), Some(p)) => {
            let g = p.mul(&r.inv());
            let k = if g.series_converges() { SeriesKind::Converges } else { SeriesKind::Diverges };
            (k, SeriesMethod::ClosedForm)
        }
        _ => (trend_kind(&terms), SeriesMethod::NumericTrend),
    };
    Ok(SeriesVerdict { kind, method, partial_sums, block_sums: terms })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma2Prediction {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub approximate: bool,
}

const LEMMA2_T_MAX: u32 = 60;

/// `min(1, |limsup log rho(2^t) / log Psi(2^t)|)`, the dimension lower bound.
pub fn predict_lemma2(rho: &DyadicFn, big_psi: &DyadicFn) -> Result<Lemma2Prediction> {
    if let (Some(r), Some(p)) = (&rho.sig, &big_psi.sig) {
        if !p.r.is_zero() {
            let q = (&r.r / &p.r).abs().min(Rat::one());
            return Ok(Lemma2Prediction { value: rat_to_f64(&q), exact: Some(fmt_rat(&q)), approximate: false });
        }
        if !r.r.is_zero() {
            return Ok(Lemma2Prediction { value: 1.0, exact: Some("1".into()), approximate: false });
        }
    }
    let ratios: Vec<f64> = (LEMMA2_T_MAX / 2..=LEMMA2_T_MAX)
        .map(|t| (rho.ln_at(t) / big_psi.ln_at(t)).abs())
        .filter(|x| x.is_finite())
        .collect();
    if ratios.is_empty() {
        return Err(Error::Domain("log Psi(2^t) vanishes along the range".into()));
    }
    let v = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max).min(1.0);
    Ok(Lemma2Prediction { value: v, exact: None, approximate: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::dim_theorem4;
    use crate::real::{parse_rat, rat};
    use proptest::prelude::{prop_assert, prop_assert_eq, prop_assume, proptest};

    fn lemma3_psi() -> ApproxFn {
        ApproxFn::power_log(rat(1, 2), rat(1, 2), rat(0, 1)).unwrap()
    }

    #[test]
    fn system_contents_match_enumeration() {
        let c = PlanarCurve::parabola();
        let psi = lemma3_psi();
        let sys = build_system(&c, &psi, &UFn::Log, 7, None).unwrap();
        let mut brute = Vec::new();
        for q in 2u64..=128 {
            for p1 in 1..q as i64 {
                let x = p1 as f64 / q as f64;
                let target = x * x * q as f64;
                let p2 = target.round() as i64;
                let phi = 0.5 * (q as f64).powf(-0.5);
                if (target - p2 as f64).abs() < phi && RationalPoint::new(p1, p2, q).is_canonical() {
                    brute.push((p1, p2, q));
                }
            }
        }
        let mut got: Vec<(i64, i64, u64)> = sys.resonant.iter().map(|r| (r.point.p1, r.point.p2, r.point.q)).collect();
        got.sort();
        brute.sort();
        assert_eq!(got, brute);
        assert_eq!(sys.reverify().unwrap(), got.len());
        assert!(sys.resonant.windows(2).all(|w| w[0].x <= w[1].x));
    }

    #[test]
    fn empty_window() {
        let sys = build_system(&PlanarCurve::parabola(), &lemma3_psi(), &UFn::Log, 6, Some((rat(1, 2), rat(1, 2)))).unwrap();
        assert!(sys.resonant.is_empty() && sys.interval.is_none());
        let r = covering_fractions(&sys, 2, 6, 2, 1.0).unwrap();
        assert!(r.rows.iter().all(|x| x.fraction == 0.0));
    }

    #[test]
    fn growth_precondition() {
        let c = PlanarCurve::parabola();
        assert!(build_system(&c, &ApproxFn::power(rat(1, 1)).unwrap(), &UFn::Log, 6, None).is_err());
        assert!(build_system(&c, &ApproxFn::power(rat(0, 1)).unwrap(), &UFn::Log, 6, None).is_err());
        let t = ApproxFn::table(2, vec![0.5; 100]).unwrap();
        assert!(build_system(&c, &t, &UFn::Log, 6, None).is_err());
    }

    #[test]
    fn saturation() {
        let sys = build_system(&PlanarCurve::parabola(), &lemma3_psi(), &UFn::Log, 10, None).unwrap();
        let full = covering_fractions(&sys, 6, 10, 4, 1000.0).unwrap();
        assert!(full.rows.iter().all(|r| r.fraction == 1.0));
        let none = covering_fractions(&sys, 6, 10, 4, 0.0).unwrap();
        assert!(none.rows.iter().all(|r| r.fraction == 0.0));
        let base = covering_fractions(&sys, 6, 10, 4, 1.0).unwrap();
        let double = covering_fractions(&sys, 6, 10, 4, 2.0).unwrap();
        for (a, b) in base.rows.iter().zip(&double.rows) {
            assert!(b.fraction >= a.fraction);
        }
        assert_eq!(base.kappa_hat, base.rows.iter().map(|r| r.fraction).fold(1.0, f64::min));
    }

    #[test]
    fn union_fraction_oracle() {
        let c = [0.1, 0.15, 0.5, 0.95];
        let f = union_fraction(&c, 0.05, 0.0, 1.0);
        assert!((f - (0.15 + 0.1 + 0.1)).abs() < 1e-12, "{f}");
        assert_eq!(union_fraction(&c, 0.05, 0.3, 0.4), 0.0);
        assert_eq!(union_fraction(&c, 1.0, 0.3, 0.4), 1.0);
    }

    #[test]
    fn lemma1_examples() {
        let psi = ApproxFn::power(rat(1, 2)).unwrap();
        let rho = DyadicFn::rho(&psi, &UFn::Log);
        // Psi = psi_1 / t with psi_1 = psi_2 = h^-1/2: terms 1/ln(2+t).
        let big = DyadicFn::over_power(&psi, &rat(1, 1));
        let v = predict_lemma1(&rho, &big, 20).unwrap();
        assert_eq!(v.kind, SeriesKind::Diverges);
        assert!(v.is_exact());
        for &(t, g) in &v.block_sums {
            assert!((g - 1.0 / (2.0 + t as f64).ln()).abs() < 1e-9 * g);
        }
        let same = predict_lemma1(&rho, &rho, 20).unwrap();
        assert_eq!(same.kind, SeriesKind::Diverges);
        assert!(same.block_sums.iter().all(|(_, g)| (g - 1.0).abs() < 1e-12));
        let geo = predict_lemma1(&rho, &rho.times_pow2(&rat(1, 1)), 20).unwrap();
        assert_eq!(geo.kind, SeriesKind::Converges);
        let flat = DyadicFn::from_approx(&ApproxFn::power(rat(1, 2)).unwrap());
        let err = predict_lemma1(&rho, &flat, 20).unwrap_err().to_string();
        assert!(err.contains("t = 10"), "{err}");
        let numeric = DyadicFn::new("custom", None, |t| -(t as f64) * 0.9);
        let v = predict_lemma1(&rho, &numeric, 20).unwrap();
        assert_eq!(v.method, SeriesMethod::NumericTrend);
    }

    #[test]
    fn lemma2_examples() {
        let rho = DyadicFn::rho(&ApproxFn::power(rat(1, 2)).unwrap(), &UFn::Log);
        assert_eq!(predict_lemma2(&rho, &rho).unwrap().value, 1.0);
        let sq = DyadicFn::new("rho^2", rho.sig.as_ref().map(|s| s.mul(s)), {
            let r = rho.clone();
            move |t| 2.0 * r.ln_at(t)
        });
        assert_eq!(predict_lemma2(&rho, &sq).unwrap().exact.as_deref(), Some("1/2"));
        assert_eq!(predict_lemma2(&sq, &rho).unwrap().value, 1.0);
        let approx = DyadicFn::new("custom", None, |t| -(t as f64) * 2.0 * std::f64::consts::LN_2);
        let p = predict_lemma2(&rho, &approx).unwrap();
        assert!(p.approximate && (p.value - 0.75).abs() < 0.03, "{p:?}");
    }

    #[test]
    fn lemma3_fractions_small() {
        let sys = build_system(&PlanarCurve::parabola(), &lemma3_psi(), &UFn::Log, 11, None).unwrap();
        let r = covering_fractions(&sys, 7, 11, 4, 1.0).unwrap();
        assert!(r.kappa_hat > 0.3, "{r:?}");
    }

    proptest! {
        #[test]
        fn lemma2_matches_theorem4(n1 in 1i64..12, n2 in 1i64..12, e in 1i64..10) {
            let (v1, v2) = (rat(n1, 4), rat(n2, 12));
            prop_assume!(v1 >= v2);
            let psi = ApproxFn::power_log(rat(1, 2), v2.clone(), rat(0, 1)).unwrap();
            let phi = ApproxFn::power_log(rat(1, 2), &v1 + rat(1, 1), rat(0, 1)).unwrap();
            let eps = rat(e, 1000);
            let rho = DyadicFn::rho(&psi, &UFn::Pow(eps.clone()));
            let p = predict_lemma2(&rho, &DyadicFn::from_approx(&phi)).unwrap();
            let exact = parse_rat(p.exact.as_deref().unwrap()).unwrap();
            let expect = ((rat(2, 1) - &v2 - &eps) / (rat(1, 1) + &v1)).min(Rat::one());
            prop_assert_eq!(exact, expect.clone());
            let limit = dim_theorem4(&v1, &v2).unwrap().exact.min(Rat::one());
            prop_assert!((rat_to_f64(&expect) - rat_to_f64(&limit)).abs() <= rat_to_f64(&eps) + 1e-12);
        }
    }
}
