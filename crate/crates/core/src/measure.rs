//! Monte Carlo zero-full experiments on curves, and the cover-tail sums that
//! bound the measure of a limsup set from above.

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::approxfn::ApproxFn;
use crate::curve::{PlanarCurve, QuadricBase};
use crate::error::{Error, Result};
use crate::limsup::{dyadic_block, multiplicative_solutions, simultaneous_solutions, Kind, TargetPoint};
use crate::ratpoints::annulus_profile;
use crate::real::{rat_from_f64, Rat};

// ---------------------------------------------------------------------------
// Dichotomy experiments
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictHint {
    FullLike,
    ZeroLike,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockActivity {
    pub t: u32,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CumulativeHit {
    pub m: u64,
    pub fraction: f64,
}

/// Outcome of [`dichotomy_experiment`]. `activity[t]` is the fraction of
/// sampled points that gain a new solution (a rational point `p/q` in lowest
/// terms) with `q` in `(2^(t-1), 2^t]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub curve: String,
    pub kind: Kind,
    pub psis: Vec<String>,
    pub samples: u64,
    pub seed: u64,
    #[serde(rename = "Q_max")]
    pub q_max: u64,
    pub activity: Vec<BlockActivity>,
    pub cumulative: Vec<CumulativeHit>,
    pub verdict_hint: VerdictHint,
}

pub const CUMULATIVE_LEVELS: [u64; 3] = [1, 3, 10];
const HINT_BLOCKS: usize = 4;

/// Heuristic reading of the last four block activities: full-like when all are
/// at least 0.5, zero-like when strictly decreasing and ending below 0.2.
pub fn verdict_hint(activity: &[BlockActivity]) -> VerdictHint {
    if activity.len() < HINT_BLOCKS {
        return VerdictHint::Inconclusive;
    }
    let last: Vec<f64> = activity[activity.len() - HINT_BLOCKS..].iter().map(|a| a.fraction).collect();
    if last.iter().all(|f| *f >= 0.5) {
        VerdictHint::FullLike
    } else if last.windows(2).all(|w| w[1] < w[0]) && last[HINT_BLOCKS - 1] < 0.2 {
        VerdictHint::ZeroLike
    } else {
        VerdictHint::Inconclusive
    }
}

/// Abscissa drawn uniformly from the curve's domain; sample `index` depends
/// only on `(seed, index)`.
pub fn sample_abscissa(curve: &PlanarCurve, seed: u64, index: u64) -> Rat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let dom = curve.domain();
    let (lo, hi) = (dom.lo_f64(), dom.hi_f64());
    loop {
        let x = rat_from_f64(lo + rng.random::<f64>() * (hi - lo));
        if dom.contains(&x) {
            return x;
        }
    }
}

fn is_primitive(q: u64, p: &[i64]) -> bool {
    p.iter().fold(q, |g, x| g.gcd(&x.unsigned_abs())) == 1
}

/// Samples points `(x, f(x))` and records in which dyadic blocks each acquires
/// new simultaneous (`psis = [psi_1, psi_2]`) or multiplicative (`psis = [psi]`)
/// solutions up to `Q_max`.
pub fn dichotomy_experiment(
    curve: &PlanarCurve,
    psis: &[ApproxFn],
    kind: Kind,
    samples: u64,
    q_max: u64,
    seed: u64,
) -> Result<DichotomyReport> {
    let want = match kind {
        Kind::Simultaneous => 2,
        Kind::Multiplicative => 1,
        Kind::Dual => return Err(Error::Precondition("dichotomy experiments are sim or mult".into())),
    };
    if psis.len() != want {
        return Err(Error::Precondition(format!("{kind:?} needs {want} approximating function(s)")));
    }
    if samples < 100 {
        return Err(Error::Precondition(format!("need at least 100 samples, got {samples}")));
    }
    if q_max < 2 {
        return Err(Error::Precondition("Q_max must be at least 2".into()));
    }
    let t_max = 63 - q_max.leading_zeros();
    let per_sample: Vec<Result<(Vec<bool>, u64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let x = sample_abscissa(curve, seed, i);
            let y = TargetPoint::on_curve(curve, &x)?;
            let rec = match kind {
                Kind::Simultaneous => simultaneous_solutions(&y, psis, q_max)?,
                _ => multiplicative_solutions(&y, &psis[0], q_max)?,
            };
            let mut hit = vec![false; t_max as usize + 1];
            let mut total = 0;
            for s in rec.solutions().iter().filter(|s| is_primitive(s.q, &s.p)) {
                total += 1;
                let t = dyadic_block(s.q);
                if t <= t_max {
                    hit[t as usize] = true;
                }
            }
            Ok((hit, total))
        })
        .collect();
    let mut hits = vec![0u64; t_max as usize + 1];
    let mut cum = [0u64; CUMULATIVE_LEVELS.len()];
    for r in per_sample {
        let (h, total) = r?;
        for (acc, b) in hits.iter_mut().zip(h) {
            *acc += b as u64;
        }
        for (c, m) in cum.iter_mut().zip(CUMULATIVE_LEVELS) {
            *c += (total >= m) as u64;
        }
    }
    let n = samples as f64;
    let activity: Vec<BlockActivity> =
        (1..=t_max).map(|t| BlockActivity { t, fraction: hits[t as usize] as f64 / n }).collect();
    let cumulative = CUMULATIVE_LEVELS
        .iter()
        .zip(cum)
        .map(|(m, c)| CumulativeHit { m: *m, fraction: c as f64 / n })
        .collect();
    Ok(DichotomyReport {
        curve: curve.name().to_string(),
        kind,
        psis: psis.iter().map(|p| p.to_string()).collect(),
        samples,
        seed,
        q_max,
        verdict_hint: verdict_hint(&activity),
        activity,
        cumulative,
    })
}

// ---------------------------------------------------------------------------
// Cover tails
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverKind {
    Simultaneous,
    Multiplicative,
}

/// One dyadic block `2^t <= q < 2^(t+1)`. For simultaneous covers `count` is
/// `N(t)` and `term_b` is zero; for multiplicative covers `count` sums `N(t,m)`
/// over the admissible small `|m|`, `term_a` is their cell total and `term_b`
/// is the strip total for large `|m|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverBlock {
    pub t: u32,
    pub count: u64,
    pub term_a: f64,
    pub term_b: f64,
    pub term: f64,
}

/// `tail(n) = sum_{t >= n} term(t)` over the computed range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub n: u32,
    pub tail_a: f64,
    pub tail_b: f64,
    pub tail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverTailReport {
    pub kind: CoverKind,
    pub curve: String,
    pub blocks: Vec<CoverBlock>,
    pub tails: Vec<TailRow>,
    /// `(t, m)` pairs dropped from case (a) because `Psi >= 1`.
    pub excluded: Vec<(u32, i32)>,
    pub warnings: Vec<String>,
}

fn tails(blocks: &[CoverBlock]) -> Vec<TailRow> {
    let mut out = Vec::with_capacity(blocks.len());
    let (mut a, mut b, mut s) = (0.0, 0.0, 0.0);
    for blk in blocks.iter().rev() {
        a += blk.term_a;
        b += blk.term_b;
        s += blk.term;
        out.push(TailRow { n: blk.t, tail_a: a, tail_b: b, tail: s });
    }
    out.reverse();
    out
}

fn check_range(psi: &ApproxFn, t_lo: u32, t_hi: u32) -> Result<()> {
    if t_lo > t_hi || t_hi > 40 {
        return Err(Error::Precondition(format!("bad block range {t_lo}..{t_hi}")));
    }
    if (1u64 << t_lo) < psi.h0() {
        return Err(Error::Precondition(format!("2^{t_lo} is below h0={}", psi.h0())));
    }
    Ok(())
}

/// Range of `f` over `[a, b]`.
pub(crate) fn f_range(curve: &PlanarCurve, a: f64, b: f64) -> (f64, f64) {
    let (fa, fb) = (curve.f(a), curve.f(b));
    let (mut lo, mut hi) = (fa.min(fb), fa.max(fb));
    if let Some(c) = curve.critical_point(a, b) {
        let fc = curve.f(c);
        lo = lo.min(fc);
        hi = hi.max(fc);
    }
    (lo, hi)
}

/// Integers in the open interval `(a, b)`.
pub(crate) fn integers_between(a: f64, b: f64) -> u64 {
    let first = a.floor() + 1.0;
    let last = b.ceil() - 1.0;
    if last >= first {
        (last - first) as u64 + 1
    } else {
        0
    }
}

/// Number of triples `(q, p1, p2)` with `2^t <= q < 2^(t+1)` whose box
/// `|x - p1/q| < wx`, `|y - p2/q| < wy` meets the curve over `window`.
fn count_boxes(curve: &PlanarCurve, window: (f64, f64), t: u32, wx: f64, wy: f64) -> u64 {
    let (lo, hi) = window;
    if hi <= lo {
        return 0;
    }
    (1u64 << t..1u64 << (t + 1))
        .into_par_iter()
        .map(|q| {
            let qf = q as f64;
            let p_lo = ((lo - wx) * qf).floor() as i64;
            let p_hi = ((hi + wx) * qf).ceil() as i64;
            let mut c = 0;
            for p1 in p_lo..=p_hi {
                let x = p1 as f64 / qf;
                let (a, b) = ((x - wx).max(lo), (x + wx).min(hi));
                if b <= a {
                    continue;
                }
                let (ylo, yhi) = f_range(curve, a, b);
                c += integers_between(qf * (ylo - wy), qf * (yhi + wy));
            }
            c
        })
        .sum()
}

fn window_of(curve: &PlanarCurve, window: Option<(f64, f64)>) -> (f64, f64) {
    let d = curve.domain();
    match window {
        Some((a, b)) => (a.max(d.lo_f64()), b.min(d.hi_f64())),
        None => (d.lo_f64(), d.hi_f64()),
    }
}

/// Cover of the curve by boxes `|x - p1/q| < psi(2^t)/2^t`,
/// `|y - p2/q| < phi(2^t)/2^t`: per block, the counted `N(t)` times the
/// largest possible x-measure of one box on the curve,
/// `min(2 psi, 2 phi / inf|f'|) / 2^t`.
pub fn simultaneous_cover_tail(
    curve: &PlanarCurve,
    psi: &ApproxFn,
    phi: &ApproxFn,
    t_lo: u32,
    t_hi: u32,
    window: Option<(f64, f64)>,
) -> Result<CoverTailReport> {
    check_range(psi, t_lo, t_hi)?;
    check_range(phi, t_lo, t_hi)?;
    let q_end = 1u64 << (t_hi + 1);
    if let Some(q) = (1u64 << t_lo..q_end).find(|&q| psi.ball(q).lt(phi.ball(q)) == Some(true)) {
        return Err(Error::Precondition(format!(
            "psi >= phi is required (the larger function bounds x); violated at q={q}"
        )));
    }
    let win = window_of(curve, window);
    let inf_fp = curve.inf_abs_fp();
    let blocks = (t_lo..=t_hi)
        .map(|t| {
            let h = (1u64 << t) as f64;
            let (wx, wy) = (psi.raw(1 << t) / h, phi.raw(1 << t) / h);
            let count = count_boxes(curve, win, t, wx, wy);
            let cell = if inf_fp > 0.0 { (2.0 * wx).min(2.0 * wy / inf_fp) } else { 2.0 * wx };
            let term = count as f64 * cell;
            CoverBlock { t, count, term_a: term, term_b: 0.0, term }
        })
        .collect::<Vec<_>>();
    Ok(CoverTailReport {
        kind: CoverKind::Simultaneous,
        curve: curve.name().to_string(),
        tails: tails(&blocks),
        blocks,
        excluded: Vec::new(),
        warnings: Vec::new(),
    })
}

/// Annulus width factor: a box of half-width `2^|m| sqrt(2 psi)/2^t` around
/// `(p1/q, p2/q)` meeting the unit circle forces
/// `|q - sqrt(p1^2+p2^2)| < sqrt2 q 2^|m| sqrt(2 psi)/2^t < 4 * 2^|m| sqrt(psi(2^t))`
/// (triangle inequality, `q < 2^(t+1)`).
pub const ANNULUS_C: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MultCase {
    A,
    B,
}

/// Case (a) when `2^-|m| >= t sqrt(psi(2^t))`, else case (b).
pub fn mult_case(t: u32, m: i32, psi: &ApproxFn) -> MultCase {
    let s = psi.raw(1 << t).sqrt();
    if (-(m.unsigned_abs() as f64)).exp2() >= t as f64 * s {
        MultCase::A
    } else {
        MultCase::B
    }
}

/// Largest `|m|` in case (a), if any.
fn case_a_bound(t: u32, psi: &ApproxFn) -> Option<i32> {
    if mult_case(t, 0, psi) == MultCase::B {
        return None;
    }
    let mut k = 0;
    while k < 1000 && mult_case(t, k + 1, psi) == MultCase::A {
        k += 1;
    }
    Some(k)
}

/// Cover of the circle arc by the boxes `|x - p1/q| < 2^m w`,
/// `|y - p2/q| < 2^-m w`, `w = sqrt(2 psi(2^t))/2^t`. Case (a) blocks sum the
/// annulus-counted `N(t,m)` times `2^-|m| sqrt(psi(2^t))/2^t`; case (b) sums the
/// strips `|x - p1/q|, |y - p2/q| < 2 t psi(2^t)/2^t` meeting the arc, each of
/// x-measure at most its width (over `inf|f'|` for horizontal strips).
pub fn multiplicative_cover_tail(
    curve: &PlanarCurve,
    psi: &ApproxFn,
    t_lo: u32,
    t_hi: u32,
) -> Result<CoverTailReport> {
    let is_arc = curve
        .quadric_tag()
        .is_some_and(|g| g.base == QuadricBase::Circle && g.map.is_identity());
    if !is_arc {
        return Err(Error::Precondition(format!("{} is not a unit-circle arc", curve.name())));
    }
    check_range(psi, t_lo, t_hi)?;
    let mut warnings = Vec::new();
    for t in t_lo..=t_hi {
        let h = (1u64 << t) as f64;
        let (l, v) = (h.ln(), psi.raw(1 << t));
        if !(v > 1.0 / (h * l.powi(3)) && v < 1.0 / (h * l)) {
            warnings.push(format!("psi(2^{t}) = {v:.3e} outside the corridor (q log^3 q)^-1 < psi < (q log q)^-1"));
        }
    }
    let (lo, hi) = window_of(curve, None);
    let (ylo, yhi) = f_range(curve, lo, hi);
    let inf_fp = curve.inf_abs_fp();
    let mut excluded = Vec::new();
    let mut blocks = Vec::new();
    for t in t_lo..=t_hi {
        let h = (1u64 << t) as f64;
        let s = psi.raw(1 << t).sqrt();
        let mut count = 0;
        let mut term_a = 0.0;
        if let Some(k) = case_a_bound(t, psi) {
            let mut ms = Vec::new();
            let mut widths = Vec::new();
            for m in -k..=k {
                let w = ANNULUS_C * (m.unsigned_abs() as f64).exp2() * s;
                if w >= 1.0 {
                    excluded.push((t, m));
                } else {
                    ms.push(m);
                    widths.push(rat_from_f64(w * (1.0 + 1e-12)));
                }
            }
            let counts = annulus_profile(1 << t, 1 << (t + 1), &widths)?;
            for (m, c) in ms.iter().zip(counts) {
                count += c;
                term_a += c as f64 * (-(m.unsigned_abs() as f64)).exp2() * s / h;
            }
        }
        let half = 2.0 * t as f64 * psi.raw(1 << t) / h;
        let (nx, ny) = (1u64 << t..1u64 << (t + 1))
            .into_par_iter()
            .map(|q| {
                let qf = q as f64;
                (
                    integers_between(qf * (lo - half), qf * (hi + half)),
                    integers_between(qf * (ylo - half), qf * (yhi + half)),
                )
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let term_b = nx as f64 * (2.0 * half).min(hi - lo) + ny as f64 * (2.0 * half / inf_fp).min(hi - lo);
        blocks.push(CoverBlock { t, count, term_a, term_b, term: term_a + term_b });
    }
    Ok(CoverTailReport {
        kind: CoverKind::Multiplicative,
        curve: curve.name().to_string(),
        tails: tails(&blocks),
        blocks,
        excluded,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::rat;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};

    fn power(a: i64, b: i64) -> ApproxFn {
        ApproxFn::power(rat(a, b)).unwrap()
    }

    fn activity(fs: &[f64]) -> Vec<BlockActivity> {
        fs.iter().enumerate().map(|(i, f)| BlockActivity { t: i as u32 + 1, fraction: *f }).collect()
    }

    #[test]
    fn hint_rules() {
        assert_eq!(verdict_hint(&activity(&[0.1, 0.6, 0.5, 0.9, 0.7])), VerdictHint::FullLike);
        assert_eq!(verdict_hint(&activity(&[0.9, 0.5, 0.4, 0.3, 0.1])), VerdictHint::ZeroLike);
        assert_eq!(verdict_hint(&activity(&[0.5, 0.4, 0.4, 0.1])), VerdictHint::Inconclusive);
        assert_eq!(verdict_hint(&activity(&[0.5, 0.4, 0.3, 0.25])), VerdictHint::Inconclusive);
        assert_eq!(verdict_hint(&activity(&[0.9, 0.9])), VerdictHint::Inconclusive);
    }

    #[test]
    fn parabola_full_like_small() {
        let psis = [power(1, 2), power(1, 2)];
        let r = dichotomy_experiment(&PlanarCurve::parabola(), &psis, Kind::Simultaneous, 100, 1 << 9, 3)
            .unwrap();
        assert_eq!(r.verdict_hint, VerdictHint::FullLike);
        assert!(r.cumulative.windows(2).all(|w| w[1].fraction <= w[0].fraction));
    }

    #[test]
    fn tiny_truncation_is_inconclusive() {
        let big = ApproxFn::power_log(rat(1000, 1), rat(1, 1), rat(0, 1)).unwrap();
        let r = dichotomy_experiment(&PlanarCurve::circle(), &[big.clone(), big], Kind::Simultaneous, 100, 4, 1)
            .unwrap();
        assert_eq!(r.verdict_hint, VerdictHint::Inconclusive);
    }

    #[test]
    fn dichotomy_is_seed_deterministic() {
        let run = |seed| {
            dichotomy_experiment(&PlanarCurve::circle(), &[power(1, 1)], Kind::Multiplicative, 100, 256, seed)
                .unwrap()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9).activity, run(10).activity);
        assert!(dichotomy_experiment(&PlanarCurve::circle(), &[power(1, 1)], Kind::Multiplicative, 99, 256, 1)
            .is_err());
    }

    #[test]
    fn simultaneous_tail_geometric() {
        let r = simultaneous_cover_tail(&PlanarCurve::circle(), &power(11, 20), &power(13, 20), 6, 11, None)
            .unwrap();
        for w in r.blocks.windows(2) {
            let ratio = w[1].term / w[0].term;
            // 2^(1 - 1.2) = 0.87 per block.
            assert!(ratio < 1.0 && ratio > 0.7, "{ratio}");
        }
        assert!(r.tails.windows(2).all(|w| w[1].tail <= w[0].tail));
    }

    #[test]
    fn simultaneous_tail_critical_is_flat() {
        let r =
            simultaneous_cover_tail(&PlanarCurve::circle(), &power(1, 2), &power(1, 2), 6, 11, None).unwrap();
        let terms: Vec<f64> = r.blocks.iter().map(|b| b.term).collect();
        let (mn, mx) = terms.iter().fold((f64::MAX, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
        assert!(mx / mn < 1.3, "{terms:?}");
    }

    #[test]
    fn simultaneous_tail_degenerate_window_and_normalisation() {
        let c = PlanarCurve::circle();
        let r = simultaneous_cover_tail(&c, &power(1, 2), &power(1, 2), 4, 8, Some((0.5, 0.5))).unwrap();
        assert!(r.blocks.iter().all(|b| b.count == 0 && b.term == 0.0));
        assert!(simultaneous_cover_tail(&c, &power(7, 10), &power(1, 2), 4, 8, None).is_err());
    }

    #[test]
    fn box_count_matches_direct_enumeration() {
        let c = PlanarCurve::parabola();
        let (wx, wy) = (0.01, 0.003);
        let fast = count_boxes(&c, (0.0, 1.0), 5, wx, wy);
        let mut slow = 0;
        for q in 32i64..64 {
            for p1 in -2..=q + 2 {
                for p2 in -2..=q + 2 {
                    // The box meets y = x^2 iff its x-range meets the preimage of its y-range.
                    let (x0, y0) = (p1 as f64 / q as f64, p2 as f64 / q as f64);
                    let (a, b) = ((x0 - wx).max(0.0), (x0 + wx).min(1.0));
                    let (c, d) = ((y0 - wy).max(0.0).sqrt(), (y0 + wy).max(0.0).sqrt());
                    let hit = y0 + wy > 0.0 && a.max(c) < b.min(d);
                    slow += hit as u64;
                }
            }
        }
        assert_eq!(fast, slow, "fast={fast} slow={slow}");
    }

    #[test]
    fn cover_dominates_activity() {
        let configs = [
            (PlanarCurve::parabola(), power(1, 2), power(1, 2)),
            (PlanarCurve::circle(), power(3, 5), power(3, 5)),
            (PlanarCurve::circle(), power(11, 20), power(13, 20)),
        ];
        for (curve, psi, phi) in configs {
            let d = dichotomy_experiment(&curve, &[psi.clone(), phi.clone()], Kind::Simultaneous, 200, 1 << 10, 7)
                .unwrap();
            let c = simultaneous_cover_tail(&curve, &psi, &phi, 2, 9, None).unwrap();
            let len = curve.domain().hi_f64() - curve.domain().lo_f64();
            for b in &c.blocks {
                // Activity block t + 1 holds q in (2^t, 2^(t+1)].
                let act = d.activity.iter().find(|a| a.t == b.t + 1).unwrap().fraction;
                assert!(b.term >= act * len / 2.0, "{} t={} term={} act={act}", curve.name(), b.t, b.term);
            }
        }
    }

    #[test]
    fn mult_tail_components() {
        let c = PlanarCurve::circle();
        let conv = ApproxFn::parse("h^-1*logh^-2").unwrap();
        let r = multiplicative_cover_tail(&c, &conv, 8, 12).unwrap();
        assert!(r.blocks.iter().all(|b| b.term_a > 0.0 && b.term_b > 0.0));
        assert!(r.blocks.windows(2).all(|w| w[1].term_b < w[0].term_b));
        assert!(r.tails.windows(2).all(|w| w[1].tail <= w[0].tail && w[1].tail_a <= w[0].tail_a));

        let crit = ApproxFn::parse("h^-1*logh^-1").unwrap();
        let r = multiplicative_cover_tail(&c, &crit, 8, 12).unwrap();
        // t 2^t psi(2^t) = 1/ln 2 per block times the strip count constant.
        let b: Vec<f64> = r.blocks.iter().map(|b| b.term_b).collect();
        assert!(b.windows(2).all(|w| (w[1] / w[0] - 1.0).abs() < 0.05), "{b:?}");
        assert!(!r.warnings.is_empty());

        assert!(multiplicative_cover_tail(&PlanarCurve::parabola(), &conv, 8, 9).is_err());
    }

    #[test]
    fn empty_case_a_range() {
        let psi = ApproxFn::parse("h^-1/2").unwrap();
        assert_eq!(case_a_bound(4, &psi), None);
        let r = multiplicative_cover_tail(&PlanarCurve::circle(), &psi, 2, 4).unwrap();
        assert!(r.blocks.iter().all(|b| b.term_a == 0.0 && b.count == 0));
    }

    #[test]
    fn annulus_constant_bound() {
        // Random points of the arc and box offsets: |q - |p|| stays below C 2^|m| sqrt(psi).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20000 {
            let t = rng.random_range(4u32..14);
            let q = rng.random_range(1u64 << t..1u64 << (t + 1)) as f64;
            let psi = (1u64 << t) as f64 / (1u64 << t) as f64 / (1u64 << t) as f64 * rng.random_range(0.01..1.0);
            let m = rng.random_range(-3i32..=3);
            let d = (m.unsigned_abs() as f64).exp2() * (2.0 * psi).sqrt() / (1u64 << t) as f64;
            let th: f64 = rng.random_range(0.1f64..1.47);
            let (x, y) = (th.cos(), th.sin());
            let p1 = q * (x + d * rng.random_range(-1.0..1.0));
            let p2 = q * (y + d * rng.random_range(-1.0..1.0));
            let bound = ANNULUS_C * (m.unsigned_abs() as f64).exp2() * psi.sqrt();
            assert!((q - (p1 * p1 + p2 * p2).sqrt()).abs() < bound);
        }
    }

    proptest! {
        #[test]
        fn mult_cases_partition(t in 2u32..30, m in -40i32..40, k in 1i64..4) {
            let psi = ApproxFn::power_log(rat(1, 1), rat(1, 1), rat(k, 1)).unwrap();
            let c = mult_case(t, m, &psi);
            let s = psi.raw(1 << t).sqrt();
            let lhs = (-(m.unsigned_abs() as f64)).exp2();
            prop_assert_eq!(c == MultCase::A, lhs >= t as f64 * s);
            prop_assert_eq!(c == MultCase::B, !(lhs >= t as f64 * s));
            if let Some(b) = case_a_bound(t, &psi) {
                prop_assert_eq!(m.abs() <= b, c == MultCase::A);
            } else {
                prop_assert_eq!(c, MultCase::B);
            }
        }

        #[test]
        fn tails_non_increasing(terms in proptest::collection::vec(0.0f64..1e3, 1..20)) {
            let blocks: Vec<CoverBlock> = terms.iter().enumerate()
                .map(|(i, x)| CoverBlock { t: i as u32, count: 0, term_a: *x, term_b: x / 3.0, term: x + x / 3.0 })
                .collect();
            let tl = tails(&blocks);
            prop_assert!(tl.windows(2).all(|w| w[1].tail <= w[0].tail && w[1].tail_b <= w[0].tail_b));
        }
    }
}
