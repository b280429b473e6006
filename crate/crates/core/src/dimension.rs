//! Hausdorff dimension formulas for limsup sets on planar curves, a cover-sum
//! exponent estimator and a box-counting estimator for truncated sets.

use std::collections::BTreeMap;

use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::approxfn::{ApproxFn, Order};
use crate::curve::PlanarCurve;
use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::measure::{f_range, integers_between};
use crate::real::{ceil_rat, fmt_rat, rat_int, rat_to_f64, Rat};

/// A closed-form dimension value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormulaValue {
    #[serde(serialize_with = "ser_rat")]
    pub exact: Rat,
    pub value: f64,
    pub outside_hypotheses: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn ser_rat<S: serde::Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_rat(r))
}

impl FormulaValue {
    fn new(exact: Rat) -> FormulaValue {
        FormulaValue { value: rat_to_f64(&exact), exact, outside_hypotheses: false, note: None }
    }
}

fn two() -> Rat {
    rat_int(2)
}

fn require_pos(name: &str, v: &Rat) -> Result<()> {
    if v.is_positive() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {}", fmt_rat(v))))
    }
}

fn require_ge1(name: &str, v: &Rat) -> Result<()> {
    if *v >= Rat::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} = {} < 1: Dirichlet's theorem makes the set full, no dimension drop",
            fmt_rat(v)
        )))
    }
}

/// `(2 - min(v1, v2)) / (1 + max(v1, v2))` for simultaneous approximation on a
/// non-degenerate curve. Values with `min >= 1` or `v1 + v2 < 1` are returned
/// but tagged.
pub fn dim_theorem4(v1: &Rat, v2: &Rat) -> Result<FormulaValue> {
    require_pos("v1", v1)?;
    require_pos("v2", v2)?;
    let (lo, hi) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
    let mut out = FormulaValue::new((two() - lo) / (Rat::one() + hi));
    if *lo >= Rat::one() || v1 + v2 < Rat::one() {
        out.outside_hypotheses = true;
        out.note = Some("outside stated hypotheses".into());
    }
    Ok(out)
}

/// `2 / (1 + v)` for multiplicative approximation on a non-degenerate curve.
pub fn dim_theorem6(v: &Rat) -> Result<Rat> {
    require_ge1("v", v)?;
    Ok(two() / (Rat::one() + v))
}

/// `2 / (1 + lambda)` with `lambda` the order of `psi`; requires `lambda > 1`.
pub fn dim_theorem6_order(psi: &ApproxFn) -> Result<f64> {
    match psi.order() {
        Order::Exact(l) if l > Rat::one() => Ok(rat_to_f64(&dim_theorem6(&l)?)),
        Order::Approx(l) if l > 1.0 => Ok(2.0 / (1.0 + l)),
        Order::Undefined => Err(Error::Domain(format!("order of {psi} does not exist"))),
        o => Err(Error::Domain(format!("order {:?} of {psi} must exceed 1", o.to_f64()))),
    }
}

/// Rynne's formula `min_k (n + 1 + sum_{i>=k} (v_k - v_i)) / (1 + v_k)` over
/// the exponents sorted in decreasing order.
pub fn dim_rynne(v: &[Rat]) -> Result<FormulaValue> {
    if v.is_empty() {
        return Err(Error::Domain("empty exponent vector".into()));
    }
    for x in v {
        require_pos("exponent", x)?;
    }
    let sum: Rat = v.iter().sum();
    if sum < Rat::one() {
        return Err(Error::Domain(format!("exponents sum to {} < 1", fmt_rat(&sum))));
    }
    let mut w = v.to_vec();
    w.sort_by(|a, b| b.cmp(a));
    let n = rat_int(w.len() as i64);
    let best = (0..w.len())
        .map(|k| {
            let tail: Rat = w[k..].iter().map(|x| &w[k] - x).sum();
            (&n + Rat::one() + tail) / (Rat::one() + &w[k])
        })
        .min()
        .unwrap();
    let mut out = FormulaValue::new(best);
    if w != v {
        out.note = Some("exponents sorted into decreasing order".into());
    }
    Ok(out)
}

/// `n - 1 + 2/(v + 1)`.
pub fn dim_bovey_dodson(n: u32, v: &Rat) -> Result<Rat> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    require_ge1("v", v)?;
    Ok(rat_int(n as i64 - 1) + two() / (v + Rat::one()))
}

/// Lower bound `dim M - 1 + 2/(1 + v)` for multiplicative approximation on a
/// non-degenerate manifold `M`; `dual` selects the dual-form statement, which
/// has the same value.
pub fn dim_theorem5_lower(dim_m: u32, v: &Rat, dual: bool) -> Result<Rat> {
    let _ = dual;
    if dim_m == 0 {
        return Err(Error::Domain("dim M must be at least 1".into()));
    }
    require_ge1("v", v)?;
    Ok(rat_int(dim_m as i64 - 1) + two() / (Rat::one() + v))
}

// ---------------------------------------------------------------------------
// Multiplicative exponent split
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitMember {
    pub t: i64,
    #[serde(serialize_with = "ser_rat")]
    pub v1: Rat,
    #[serde(serialize_with = "ser_rat")]
    pub v2: Rat,
    /// Upper bound for the dimension of the member's set on the curve.
    #[serde(serialize_with = "ser_rat")]
    pub bound: Rat,
}

/// Which part of the split covers a multiplicative solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SplitCell {
    BoundaryX,
    BoundaryY,
    Member(i64),
}

/// `S*_2(v)` covered by `S_2(v-eps, 0)`, `S_2(0, v-eps)` and the members
/// `S_2(v1(t), v2(t))`, `|t| <= t0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultSplit {
    #[serde(serialize_with = "ser_rat")]
    pub v: Rat,
    #[serde(serialize_with = "ser_rat")]
    pub eps: Rat,
    pub t0: i64,
    pub family: Vec<SplitMember>,
    /// Bound for the two boundary sets, `2/(1 + v - eps)`.
    #[serde(serialize_with = "ser_rat")]
    pub boundary_bound: Rat,
    #[serde(serialize_with = "ser_rat")]
    pub max_bound: Rat,
    pub sums_ok: bool,
    pub bound_ok: bool,
}

pub fn mult_exponent_split(v: &Rat, eps: &Rat) -> Result<MultSplit> {
    let one = Rat::one();
    let cap = (one.clone() / (&one + v)).min(Rat::new(1.into(), 5.into()));
    if !eps.is_positive() || *eps >= cap || v - eps <= one {
        return Err(Error::Domain(format!(
            "need 0 < eps < min(1/(1+v), 1/5) and v - eps > 1, got v={}, eps={}",
            fmt_rat(v),
            fmt_rat(eps)
        )));
    }
    let half = Rat::new(1.into(), 2.into());
    let r = v / (two() * eps);
    let t0 = ceil_rat(&(&r - rat_int(3) * &half)).to_i64().unwrap();
    debug_assert!(rat_int(t0) < &r - &half);
    let ve = v - eps;
    let family: Vec<SplitMember> = (-t0..=t0)
        .map(|t| {
            let v1 = v * &half - rat_int(2 * t + 1) * eps * &half;
            let v2 = v * &half + rat_int(2 * t - 1) * eps * &half;
            let lo = (&v1).min(&v2).clone();
            let bound = if lo < one {
                dim_theorem4(&v1, &v2).unwrap().exact
            } else {
                // Inside S_2(1 - eps, v/2) (or its mirror).
                (two() + two() * eps) / (two() + v)
            };
            SplitMember { t, v1, v2, bound }
        })
        .collect();
    let boundary_bound = two() / (&one + &ve);
    let max_bound = family.iter().map(|m| m.bound.clone()).fold(boundary_bound.clone(), Rat::max);
    let sums_ok = family.iter().all(|m| &m.v1 + &m.v2 == ve);
    let bound_ok = max_bound <= boundary_bound;
    Ok(MultSplit { v: v.clone(), eps: eps.clone(), t0, family, boundary_bound, max_bound, sums_ok, bound_ok })
}

impl MultSplit {
    /// Part of the split containing a denominator `q` with errors
    /// `e1 = ||q x1||`, `e2 = ||q x2||` against thresholds `q^-w`.
    pub fn locate(&self, q: u64, e1: f64, e2: f64) -> Option<SplitCell> {
        let lq = (q as f64).ln();
        let under = |e: f64, w: &Rat| e < (-rat_to_f64(w) * lq).exp();
        let ve = &self.v - &self.eps;
        if under(e1, &ve) {
            return Some(SplitCell::BoundaryX);
        }
        if under(e2, &ve) {
            return Some(SplitCell::BoundaryY);
        }
        self.family.iter().find(|m| under(e1, &m.v1) && under(e2, &m.v2)).map(|m| SplitCell::Member(m.t))
    }
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Formula,
    CoverSumExponent,
    BoxCount,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleCount {
    pub log2_inv_delta: u32,
    pub q_lo: u64,
    pub q_hi: u64,
    pub boxes: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub cells: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    pub low_confidence: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub scales: Vec<ScaleCount>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub method: Method,
    pub value: f64,
    pub parameters: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted: Option<f64>,
    pub diagnostics: Diagnostics,
}

/// x-extents of `curve ∩ box` for every box `|x - p1/q| < wx`, `|y - p2/q| < wy`
/// meeting the curve over `win`.
fn cell_pieces(curve: &PlanarCurve, q: u64, wx: f64, wy: f64, win: (f64, f64), out: &mut Vec<(f64, f64)>) {
    let (lo, hi) = win;
    let qf = q as f64;
    let p_lo = ((lo - wx) * qf).floor() as i64;
    let p_hi = ((hi + wx) * qf).ceil() as i64;
    for p1 in p_lo..=p_hi {
        let x = p1 as f64 / qf;
        let (a, b) = ((x - wx).max(lo), (x + wx).min(hi));
        if b <= a {
            continue;
        }
        let (ylo, yhi) = f_range(curve, a, b);
        let n = integers_between(qf * (ylo - wy), qf * (yhi + wy));
        if n == 0 {
            continue;
        }
        let first = (qf * (ylo - wy)).floor() as i64 + 1;
        for p2 in first..first + n as i64 {
            let pieces = curve.band_preimage(a, b, p2 as f64 / qf, wy);
            if let (Some(s), Some(e)) = (pieces.first(), pieces.last()) {
                if e.1 > s.0 {
                    out.push((s.0, e.1));
                }
            }
        }
    }
}

fn domain_window(curve: &PlanarCurve) -> (f64, f64) {
    (curve.domain().lo_f64(), curve.domain().hi_f64())
}

const S_MAX: f64 = 2.0;

/// Log-diameters of the cells in the last two complete dyadic blocks below `Q`.
#[derive(Clone, Debug)]
pub struct CoverSums {
    pub t_top: u32,
    pub cells: u64,
    top: Vec<f64>,
    prev: Vec<f64>,
}

fn log_sum(ld: &[f64], s: f64) -> f64 {
    let m = ld.iter().map(|x| x * s).fold(f64::NEG_INFINITY, f64::max);
    m + ld.iter().map(|x| (x * s - m).exp()).sum::<f64>().ln()
}

impl CoverSums {
    /// `log (sum_top diam^s / sum_prev diam^s)`.
    pub fn log_ratio(&self, s: f64) -> f64 {
        log_sum(&self.top, s) - log_sum(&self.prev, s)
    }
}

pub fn cover_sums(curve: &PlanarCurve, v1: &Rat, v2: &Rat, q_max: u64) -> Result<CoverSums> {
    let (e1, e2) = (rat_to_f64(v1), rat_to_f64(v2));
    let lip = (1.0 + curve.sup_abs_fp().powi(2)).sqrt();
    let win = domain_window(curve);
    let t_top = 63 - (q_max + 1).leading_zeros() - 1;
    let per_q: Vec<Vec<f64>> = (1..=q_max)
        .into_par_iter()
        .map(|q| {
            let qf = q as f64;
            let mut pieces = Vec::new();
            cell_pieces(curve, q, qf.powf(-e1 - 1.0), qf.powf(-e2 - 1.0), win, &mut pieces);
            pieces.iter().map(|(a, b)| ((b - a) * lip).ln()).collect()
        })
        .collect();
    let cells: u64 = per_q.iter().map(|v| v.len() as u64).sum();
    if cells == 0 {
        return Err(Error::Precondition(format!("no cells meet the curve for q <= {q_max}; use a larger Q")));
    }
    let block = |t: u32| -> Vec<f64> {
        per_q[(1usize << t) - 1..(1usize << (t + 1)) - 1].iter().flatten().copied().collect()
    };
    let (top, prev) = (block(t_top), block(t_top - 1));
    if top.is_empty() || prev.is_empty() {
        return Err(Error::Precondition(format!("no cells in the last two dyadic blocks below {q_max}; use a larger Q")));
    }
    Ok(CoverSums { t_top, cells, top, prev })
}


/// Exponent `s` at which the cover sum `sum diam(C ∩ sigma(p/q))^s` over the
/// last complete dyadic block `2^T <= q < 2^(T+1) <= Q + 1` equals the sum over
/// the block before it. Cells are `|x - p1/q| < q^(-v1-1)`,
/// `|y - p2/q| < q^(-v2-1)`; diameters are x-extents times `sqrt(1 + sup f'^2)`.
pub fn cover_sum_exponent(curve: &PlanarCurve, v1: &Rat, v2: &Rat, q_max: u64, tol: f64) -> Result<DimensionEstimate> {
    require_pos("v1", v1)?;
    require_pos("v2", v2)?;
    if v1 < v2 {
        return Err(Error::Precondition("v1 >= v2 is required (swap the exponents)".into()));
    }
    if q_max < 256 {
        return Err(Error::Precondition(format!("Q must be at least 256, got {q_max}")));
    }
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(tol > 0.0) {
        return Err(Error::Precondition("tol must be positive".into()));
    }
    let sums = cover_sums(curve, v1, v2, q_max)?;
    let cells = sums.cells;
    let excess = |s: f64| sums.log_ratio(s);
    let mut notes = Vec::new();
    let (mut lo, mut hi) = (0.0, S_MAX);
    if excess(lo) <= 0.0 {
        notes.push("block ratio below 1 at s = 0".into());
        hi = tol / 2.0;
    } else if excess(hi) > 0.0 {
        notes.push(format!("block ratio above 1 at s = {S_MAX}"));
        lo = S_MAX - tol / 2.0;
    } else {
        while hi - lo > tol / 2.0 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let predicted = dim_theorem4(v1, v2)?;
    if predicted.outside_hypotheses {
        notes.push("prediction outside stated hypotheses".into());
    }
    let mut parameters = BTreeMap::new();
    parameters.insert("curve".into(), curve.name().to_string());
    parameters.insert("v1".into(), fmt_rat(v1));
    parameters.insert("v2".into(), fmt_rat(v2));
    parameters.insert("Q".into(), q_max.to_string());
    parameters.insert("tol".into(), format!("{tol}"));
    parameters.insert("blocks".into(), format!("{},{}", sums.t_top - 1, sums.t_top));
    Ok(DimensionEstimate {
        method: Method::CoverSumExponent,
        value: 0.5 * (lo + hi),
        parameters,
        predicted: Some(predicted.value.min(1.0)),
        diagnostics: Diagnostics {
            cells,
            bracket: Some((lo, hi)),
            bracket_width: Some(hi - lo),
            notes,
            ..Diagnostics::default()
        },
    })
}

/// Truncated limsup set whose x-projection is box counted.
#[derive(Clone, Debug, PartialEq)]
pub enum BoxKind {
    Simultaneous(Rat, Rat),
    Multiplicative(Rat),
}

/// x-projection of `⋃ (curve ∩ cells)` over `q_lo <= q <= q_hi`, merged into
/// disjoint intervals.
/// Multiplicative cells `|qx - p1| |q f(x) - p2| < q^-v` are replaced by the
/// union of the boxes `|qx - p1| < 2^m d`, `|q f(x) - p2| < 2^-m d`,
/// `d = q^(-v/2)`, which lies inside the hyperbolic cell and contains it after
/// doubling.
pub fn truncated_projection(curve: &PlanarCurve, kind: &BoxKind, q_lo: u64, q_hi: u64) -> Vec<(f64, f64)> {
    let win = domain_window(curve);
    let mut pieces: Vec<(f64, f64)> = (q_lo..=q_hi)
        .into_par_iter()
        .map(|q| {
            let qf = q as f64;
            let mut out = Vec::new();
            match kind {
                BoxKind::Simultaneous(v1, v2) => {
                    let (e1, e2) = (rat_to_f64(v1), rat_to_f64(v2));
                    cell_pieces(curve, q, qf.powf(-e1 - 1.0), qf.powf(-e2 - 1.0), win, &mut out);
                }
                BoxKind::Multiplicative(v) => {
                    let d = qf.powf(-rat_to_f64(v) / 2.0);
                    let mut m = 0i32;
                    while (m as f64).exp2() * d <= 0.5 {
                        for s in [m, -m] {
                            let k = (s as f64).exp2();
                            cell_pieces(curve, q, k * d / qf, d / (k * qf), win, &mut out);
                            if m == 0 {
                                break;
                            }
                        }
                        m += 1;
                    }
                }
            }
            out
        })
        .flatten()
        .collect();
    pieces.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in pieces {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
}

/// Number of grid boxes `[k delta, (k+1) delta)` meeting the union.
pub fn count_boxes(union: &[(f64, f64)], log2_inv_delta: u32) -> u64 {
    let scale = (log2_inv_delta as f64).exp2();
    let mut count = 0;
    let mut last: Option<i64> = None;
    for (a, b) in union {
        let first = (a * scale).floor() as i64;
        let end = ((b * scale).ceil() as i64 - 1).max(first);
        let start = match last {
            Some(l) if l >= first => l + 1,
            _ => first,
        };
        if end >= start {
            count += (end - start + 1) as u64;
        }
        last = Some(last.map_or(end, |l| l.max(end)));
    }
    count
}

pub const DEFAULT_SCALES: std::ops::RangeInclusive<u32> = 6..=14;
const MIN_R2: f64 = 0.9;

/// Least-squares slope of `log N(delta)` against `log(1/delta)` over the
/// dyadic scales `delta = 2^-k`, `k` in `scales`. At scale `delta` only the
/// cells of size comparable to `delta` are counted: denominators
/// `q_d <= q < 2 q_d` with `q_d^(-1-w) = delta`, `w` the larger exponent.
/// Smaller `q` give cells much larger than `delta` that the limsup set does not
/// need; every scale must fit below `Q`.
pub fn box_count_dimension(curve: &PlanarCurve, kind: &BoxKind, q_max: u64, scales: &[u32]) -> Result<DimensionEstimate> {
    let (mn, mx) = (scales.iter().min(), scales.iter().max());
    let mut uniq = scales.to_vec();
    uniq.sort();
    uniq.dedup();
    if uniq.len() < 5 || mx.zip(mn).is_none_or(|(a, b)| a - b < 3) {
        return Err(Error::Precondition("need at least 5 scales spanning at least 3 octaves".into()));
    }
    let (predicted, mut params) = match kind {
        BoxKind::Simultaneous(v1, v2) => {
            let p = dim_theorem4(v1, v2)?;
            let mut m = BTreeMap::new();
            m.insert("kind".to_string(), "sim".to_string());
            m.insert("v1".into(), fmt_rat(v1));
            m.insert("v2".into(), fmt_rat(v2));
            (p.value.min(1.0), m)
        }
        BoxKind::Multiplicative(v) => {
            let p = dim_theorem6(v)?;
            let mut m = BTreeMap::new();
            m.insert("kind".to_string(), "mult".to_string());
            m.insert("v".into(), fmt_rat(v));
            (rat_to_f64(&p), m)
        }
    };
    params.insert("curve".into(), curve.name().to_string());
    params.insert("Q".into(), q_max.to_string());
    let w = match kind {
        BoxKind::Simultaneous(v1, v2) => rat_to_f64(v1.max(v2)),
        BoxKind::Multiplicative(v) => rat_to_f64(v),
    };
    let mut counts = Vec::with_capacity(uniq.len());
    let mut cells = 0;
    for &k in &uniq {
        let q_lo = (k as f64 / (1.0 + w)).exp2().ceil() as u64;
        let q_hi = 2 * q_lo - 1;
        if q_hi > q_max {
            return Err(Error::Precondition(format!("scale 2^-{k} needs denominators up to {q_hi} > Q={q_max}")));
        }
        let union = truncated_projection(curve, kind, q_lo, q_hi);
        cells += union.len() as u64;
        counts.push(ScaleCount { log2_inv_delta: k, q_lo, q_hi, boxes: count_boxes(&union, k) });
    }
    if let Some(c) = counts.iter().find(|c| c.boxes == 0) {
        return Err(Error::Precondition(format!(
            "truncated set is empty for q in [{}, {}]",
            c.q_lo, c.q_hi
        )));
    }
    let xs: Vec<f64> = counts.iter().map(|c| c.log2_inv_delta as f64 * std::f64::consts::LN_2).collect();
    let ys: Vec<f64> = counts.iter().map(|c| (c.boxes as f64).ln()).collect();
    let fit = least_squares(&xs, &ys).ok_or_else(|| Error::Precondition("degenerate scale set".into()))?;
    Ok(DimensionEstimate {
        method: Method::BoxCount,
        value: fit.slope,
        parameters: params,
        predicted: Some(predicted),
        diagnostics: Diagnostics {
            cells,
            r2: Some(fit.r2),
            low_confidence: fit.r2 < MIN_R2,
            scales: counts,
            ..Diagnostics::default()
        },
    })
}

/// A closed-form value wrapped as an estimate.
pub fn formula_estimate(name: &str, args: &[Rat], value: &FormulaValue) -> DimensionEstimate {
    let mut parameters = BTreeMap::new();
    parameters.insert("formula".into(), name.to_string());
    parameters.insert("args".into(), args.iter().map(fmt_rat).collect::<Vec<_>>().join(","));
    parameters.insert("exact".into(), fmt_rat(&value.exact));
    let mut notes = Vec::new();
    notes.extend(value.note.clone());
    DimensionEstimate {
        method: Method::Formula,
        value: value.value,
        parameters,
        predicted: None,
        diagnostics: Diagnostics { notes, ..Diagnostics::default() },
    }
}

impl From<Rat> for FormulaValue {
    fn from(r: Rat) -> FormulaValue {
        FormulaValue::new(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::{parse_rat, rat};
    use proptest::prelude::{prop_assert, prop_assert_eq, prop_assume, proptest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(s: &str) -> Rat {
        parse_rat(s).unwrap()
    }

    #[test]
    fn theorem4_values() {
        assert_eq!(dim_theorem4(&r("3"), &r("1/2")).unwrap().exact, r("3/8"));
        assert_eq!(dim_theorem4(&r("1/2"), &r("1/2")).unwrap().exact, r("1"));
        assert_eq!(dim_theorem4(&r("3/4"), &r("3/4")).unwrap().exact, r("5/7"));
        assert!(dim_theorem4(&r("2"), &r("3")).unwrap().outside_hypotheses);
        assert!(dim_theorem4(&r("1/4"), &r("1/4")).unwrap().outside_hypotheses);
        assert!(dim_theorem4(&r("0"), &r("1")).is_err());
    }

    #[test]
    fn theorem6_and_order() {
        assert_eq!(dim_theorem6(&r("3")).unwrap(), r("1/2"));
        assert_eq!(dim_theorem6(&r("1")).unwrap(), r("1"));
        assert!(matches!(dim_theorem6(&r("9/10")), Err(Error::Domain(_))));
        let mut prev = 0.0;
        for k in [10, 100, 1000, 10000] {
            let psi = ApproxFn::power_log(rat(1, 1), rat(k + 1, k), rat(1, 1)).unwrap();
            let d = dim_theorem6_order(&psi).unwrap();
            assert!(d < 1.0 && d > prev);
            prev = d;
        }
        assert!((prev - 1.0).abs() < 1e-4);
        assert!(dim_theorem6_order(&ApproxFn::power(rat(1, 1)).unwrap()).is_err());
    }

    #[test]
    fn rynne_examples() {
        assert_eq!(dim_rynne(&[r("2"), r("1/2")]).unwrap().exact, r("3/2"));
        let swapped = dim_rynne(&[r("1/2"), r("2")]).unwrap();
        assert_eq!(swapped.exact, r("3/2"));
        assert!(swapped.note.is_some());
        assert_eq!(dim_rynne(&[r("1")]).unwrap().exact, r("1"));
        assert!(dim_rynne(&[r("1/4"), r("1/4")]).is_err());
    }

    #[test]
    fn bovey_dodson_and_lower_bound() {
        assert_eq!(dim_bovey_dodson(2, &r("3")).unwrap(), r("3/2"));
        assert_eq!(dim_bovey_dodson(5, &r("1")).unwrap(), r("5"));
        assert_eq!(dim_theorem5_lower(1, &r("3"), false).unwrap(), r("1/2"));
        assert_eq!(dim_theorem5_lower(4, &r("1"), true).unwrap(), r("4"));
        assert_eq!(dim_theorem5_lower(2, &r("3"), false).unwrap(), dim_bovey_dodson(2, &r("3")).unwrap());
    }

    #[test]
    fn split_example() {
        let s = mult_exponent_split(&r("3"), &r("1/10")).unwrap();
        assert_eq!(s.t0, 14);
        assert_eq!(s.family.len(), 29);
        assert!(s.sums_ok && s.bound_ok);
        assert_eq!(s.boundary_bound, r("20/39"));
        assert!(mult_exponent_split(&r("3"), &r("1/4")).is_err());
        assert!(mult_exponent_split(&r("11/10"), &r("1/10")).is_err());
    }

    #[test]
    fn split_covers_solutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (v, eps) in [("3", "1/10"), ("3/2", "1/10"), ("6/5", "1/20")] {
            let s = mult_exponent_split(&r(v), &r(eps)).unwrap();
            let vf = rat_to_f64(&s.v);
            let mut found = 0;
            for _ in 0..1000 {
                let (x1, x2): (f64, f64) = (rng.random(), rng.random());
                for q in 2u64..=256 {
                    let d = |x: f64| {
                        let y = q as f64 * x;
                        (y - y.round()).abs()
                    };
                    let (e1, e2) = (d(x1), d(x2));
                    if e1 * e2 < (q as f64).powf(-vf) {
                        found += 1;
                        assert!(s.locate(q, e1, e2).is_some(), "v={v} q={q} e=({e1},{e2})");
                    }
                }
            }
            assert!(found > 50, "{found}");
        }
    }

    #[test]
    fn cover_sum_small() {
        let c = PlanarCurve::parabola();
        let e = cover_sum_exponent(&c, &r("1"), &r("1"), 1024, 0.01).unwrap();
        assert!((e.value - 0.5).abs() < 0.1, "{}", e.value);
        assert!(e.diagnostics.bracket_width.unwrap() <= 0.01);
        let sums = cover_sums(&c, &r("1"), &r("1"), 1024).unwrap();
        let (lo, hi) = e.diagnostics.bracket.unwrap();
        for k in 0..=40 {
            let s = k as f64 * 0.05;
            if s > hi {
                assert!(sums.log_ratio(s) <= 0.0, "s={s}");
            }
            if s < lo {
                assert!(sums.log_ratio(s) > 0.0, "s={s}");
            }
        }
        assert!(cover_sum_exponent(&c, &r("1/2"), &r("1"), 1024, 0.01).is_err());
        assert!(cover_sum_exponent(&c, &r("1"), &r("1"), 100, 0.01).is_err());
    }

    #[test]
    fn box_union_counting() {
        let u = [(0.0, 0.1), (0.3, 0.30001), (0.30002, 0.35)];
        assert_eq!(count_boxes(&u, 2), 2);
        assert_eq!(count_boxes(&u, 4), 4);
        assert_eq!(count_boxes(&[(0.0, 1.0)], 10), 1024);
    }

    #[test]
    fn box_count_preconditions() {
        let c = PlanarCurve::parabola();
        let k = BoxKind::Simultaneous(r("1"), r("1"));
        assert!(box_count_dimension(&c, &k, 64, &[6, 7, 8, 9]).is_err());
        assert!(box_count_dimension(&c, &k, 64, &[6, 7, 8, 8, 7]).is_err());
        let full: Vec<u32> = DEFAULT_SCALES.collect();
        let e = box_count_dimension(&c, &BoxKind::Simultaneous(r("1/2"), r("1/2")), 4096, &full).unwrap();
        assert!((e.value - 1.0).abs() < 0.05, "{}", e.value);
        assert!(!e.diagnostics.low_confidence);
        assert!(box_count_dimension(&c, &BoxKind::Simultaneous(r("1/2"), r("1/2")), 512, &full).is_err());
        let far = BoxKind::Simultaneous(r("40"), r("40"));
        assert!(box_count_dimension(&PlanarCurve::circle(), &far, 4096, &[20, 25, 30, 35, 40]).is_err());
    }

    proptest! {
        #[test]
        fn rynne_equal_exponents(n in 1usize..8, num in 1i64..60, den in 1i64..20) {
            let v = rat(num, den);
            prop_assume!(rat_int(n as i64) * &v >= Rat::one());
            let d = dim_rynne(&vec![v.clone(); n]).unwrap();
            prop_assert_eq!(d.exact, rat_int(n as i64 + 1) / (Rat::one() + v));
        }

        #[test]
        fn lower_matches_theorem6(num in 1i64..200, den in 1i64..50) {
            let v = rat(num, den);
            if v >= Rat::one() {
                prop_assert_eq!(dim_bovey_dodson(1, &v).unwrap(), dim_theorem6(&v).unwrap());
                prop_assert_eq!(dim_theorem5_lower(1, &v, false).unwrap(), dim_theorem6(&v).unwrap());
            }
        }

        #[test]
        fn split_invariants(vn in 11i64..80, en in 1i64..40) {
            let v = rat(vn, 10);
            let eps = rat(en, 200);
            if let Ok(s) = mult_exponent_split(&v, &eps) {
                prop_assert!(s.sums_ok && s.bound_ok);
                let x = &v / (two() * &eps);
                prop_assert!(rat_int(s.t0) >= &x - rat(3, 2) && rat_int(s.t0) < x - rat(1, 2));
            }
        }

        #[test]
        fn theorem4_monotone(a in 1i64..40, b in 1i64..40, d in 1i64..5) {
            let (v1, v2) = (rat(a, 40), rat(b, 20));
            let base = dim_theorem4(&v1, &v2).unwrap();
            let up = dim_theorem4(&(&v1 + rat(d, 80)), &v2).unwrap();
            if !base.outside_hypotheses && !up.outside_hypotheses {
                prop_assert!(up.exact <= base.exact);
            }
        }

        #[test]
        fn theorem6_decreasing(a in 10i64..400, d in 1i64..50) {
            let v = rat(a, 10);
            prop_assert!(dim_theorem6(&(&v + rat(d, 10))).unwrap() < dim_theorem6(&v).unwrap());
        }
    }
}
