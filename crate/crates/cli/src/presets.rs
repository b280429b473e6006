//! Named, fully specified experiments and their run manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use curvelab::approxfn::classify_product_series;
use curvelab::curve::{Interval, PlanarCurve};
use curvelab::dimension::{
    box_count_dimension, cover_sum_exponent, dim_bovey_dodson, dim_theorem4, dim_theorem5_lower, dim_theorem6,
    mult_exponent_split, BoxKind, DEFAULT_SCALES,
};
use curvelab::limsup::{dual_solutions, simultaneous_solutions, Kind, TargetPoint};
use curvelab::measure::{dichotomy_experiment, multiplicative_cover_tail, simultaneous_cover_tail, CoverTailReport};
use curvelab::ratpoints::{
    circle_arc_annulus_points, circle_arc_brute_points, count_circle_annulus, count_circle_annulus_brute,
    huxley_ratio_scan, huxley_slope, r2_formula, r2_table_enum,
};
use curvelab::real::{fmt_rat, parse_rat, rat_int, rat_to_f64, Rat};
use curvelab::ubiquity::{build_system, covering_fractions, predict_lemma1, predict_lemma2, DyadicFn, UFn};
use curvelab::{ApproxFn, Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::emit::{self, row, Table};

/// One output file of a preset run.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub file: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn json<T: Serialize + ?Sized>(file: &str, x: &T) -> Result<Artifact> {
        Ok(Artifact { file: file.into(), bytes: emit::json(x)?.into_bytes() })
    }

    fn csv(file: &str, t: &Table) -> Artifact {
        Artifact { file: file.into(), bytes: t.to_csv().into_bytes() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub label: String,
    pub value: String,
    pub source: String,
}

type Runner = fn(&Params, u64) -> Result<Vec<Artifact>>;

#[derive(Debug)]
pub struct Preset {
    pub name: &'static str,
    pub op: &'static str,
    pub summary: &'static str,
    pub version: u32,
    pub seed: u64,
    pub params: &'static [(&'static str, &'static str)],
    pub expected: &'static [(&'static str, &'static str, &'static str)],
    run: Runner,
}

impl Preset {
    pub fn default_params(&self) -> BTreeMap<String, String> {
        self.params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    pub fn expected(&self) -> Vec<Expected> {
        self.expected
            .iter()
            .map(|(l, v, s)| Expected { label: l.to_string(), value: v.to_string(), source: s.to_string() })
            .collect()
    }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "thm1-divergence",
        op: "measure::dichotomy_experiment + measure::simultaneous_cover_tail",
        summary: "parabola, divergent pair psi1 = psi2 = h^-1/2: sampled block activity and cover tails",
        version: 1,
        seed: 42,
        params: &[
            ("curve", "parabola"),
            ("psi1", "h^-1/2"),
            ("psi2", "h^-1/2"),
            ("samples", "500"),
            ("Qmax", "4096"),
            ("tail_tmin", "4"),
            ("tail_tmax", "10"),
        ],
        expected: &[("verdict_hint", "full-like", "divergent sum of psi1 psi2 (full measure)")],
        run: run_dichotomy,
    },
    Preset {
        name: "thm2-dichotomy",
        op: "measure::dichotomy_experiment + measure::simultaneous_cover_tail",
        summary: "circle arc, convergent pair psi1 = psi2 = h^-3/5: sampled block activity and cover tails",
        version: 1,
        seed: 42,
        params: &[
            ("curve", "circle"),
            ("psi1", "h^-3/5"),
            ("psi2", "h^-3/5"),
            ("samples", "500"),
            ("Qmax", "4096"),
            ("tail_tmin", "4"),
            ("tail_tmax", "10"),
        ],
        expected: &[("verdict_hint", "zero-like", "convergent sum of psi1 psi2 (null measure)")],
        run: run_dichotomy,
    },
    Preset {
        name: "thm3-mult-tail",
        op: "measure::multiplicative_cover_tail",
        summary: "circle arc multiplicative cover tails inside the corridor (q log^3 q)^-1 < psi < (q log q)^-1",
        version: 1,
        seed: 0,
        params: &[("curve", "circle"), ("psis", "h^-1*logh^-2;h^-1*logh^-3/2"), ("tmin", "6"), ("tmax", "12")],
        expected: &[],
        run: run_mult_tail,
    },
    Preset {
        name: "thm4-dim",
        op: "dimension::cover_sum_exponent",
        summary: "parabola cover-sum exponents for (v1, v2) = (1, 1) and (3, 1/2)",
        version: 1,
        seed: 0,
        params: &[("curve", "parabola"), ("pairs", "1,1;3,1/2"), ("Q", "4096"), ("tol", "1/100")],
        expected: &[
            ("dim(1,1)", "1/2", "dim_theorem4"),
            ("dim(3,1/2)", "3/8", "dim_theorem4"),
        ],
        run: run_thm4,
    },
    Preset {
        name: "thm6-dim",
        op: "dimension::dim_theorem6 + dimension::mult_exponent_split + dimension::box_count_dimension",
        summary: "multiplicative dimension formula, its exponent split and a box-count estimate",
        version: 1,
        seed: 0,
        params: &[
            ("curve", "parabola"),
            ("vs", "1,3/2,2,3"),
            ("split_v", "3"),
            ("split_eps", "1/10"),
            ("box_v", "3"),
            ("Q", "4096"),
        ],
        expected: &[("dim*(3)", "1/2", "dim_theorem6")],
        run: run_thm6,
    },
    Preset {
        name: "huxley-scan",
        op: "ratpoints::huxley_ratio_scan",
        summary: "parabola near-curve counts N(2^t) for psi = h^-tau and their log-log slopes",
        version: 1,
        seed: 0,
        params: &[("curve", "parabola"), ("taus", "3/10,1/2,7/10"), ("tmin", "8"), ("tmax", "12")],
        expected: &[("slope", "2 - tau", "counting upper and lower bounds")],
        run: run_huxley,
    },
    Preset {
        name: "circle-rN",
        op: "ratpoints::count_circle_annulus",
        summary: "annulus counts against brute-force lattice counts, and r(n) formula against enumeration",
        version: 1,
        seed: 0,
        params: &[("Qs", "32,64,128,256"), ("Psis", "1/10,3/10"), ("n_max", "100000")],
        expected: &[("mismatches", "0", "exact identity")],
        run: run_circle_rn,
    },
    Preset {
        name: "ubiquity-parabola",
        op: "ubiquity::covering_fractions",
        summary: "covering fractions of the parabola's rational points with psi = t^-1/2 / 2, u = log",
        version: 1,
        seed: 0,
        params: &[
            ("curve", "parabola"),
            ("psi", "1/2*h^-1/2"),
            ("u", "log"),
            ("tmin", "8"),
            ("tmax", "12"),
            ("subintervals", "4"),
        ],
        expected: &[("kappa_hat", ">= 1/2", "empirical ubiquity bar")],
        run: run_ubiquity,
    },
    Preset {
        name: "dual-oracle-demo",
        op: "limsup::dual_solutions",
        summary: "dual solutions of sqrt2-1 (equal to the simultaneous ones) and of a point in the plane",
        version: 1,
        seed: 0,
        params: &[
            ("point1", "sqrt2m1"),
            ("psi1", "h^-1"),
            ("A1", "1000"),
            ("point2", "sqrt(2),sqrt(3)"),
            ("psi2", "h^-1"),
            ("A2", "200"),
        ],
        expected: &[("n=1 dual == simultaneous", "true", "transference for n = 1")],
        run: run_dual,
    },
];

pub fn find(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        Error::Precondition(format!("unknown preset '{name}'; available: {}", names.join(", ")))
    })
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

pub struct Params<'a>(&'a BTreeMap<String, String>);

impl Params<'_> {
    fn get(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::Precondition(format!("missing preset parameter '{key}'")))
    }

    fn bad(key: &str, v: &str) -> Error {
        Error::Precondition(format!("bad value '{v}' for preset parameter '{key}'"))
    }

    fn u64(&self, key: &str) -> Result<u64> {
        let v = self.get(key)?;
        v.parse().map_err(|_| Self::bad(key, v))
    }

    fn u32(&self, key: &str) -> Result<u32> {
        let v = self.get(key)?;
        v.parse().map_err(|_| Self::bad(key, v))
    }

    fn rat(&self, key: &str) -> Result<Rat> {
        let v = self.get(key)?;
        parse_rat(v).ok_or_else(|| Self::bad(key, v))
    }

    fn rats(&self, key: &str) -> Result<Vec<Rat>> {
        let v = self.get(key)?;
        v.split(',').map(|s| parse_rat(s.trim()).ok_or_else(|| Self::bad(key, v))).collect()
    }

    fn psi(&self, key: &str) -> Result<ApproxFn> {
        ApproxFn::parse(self.get(key)?)
    }

    fn curve(&self, key: &str) -> Result<PlanarCurve> {
        PlanarCurve::parse(self.get(key)?)
    }
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

fn tail_tables(r: &CoverTailReport) -> (Table, Table) {
    let mut blocks = Table::new(&["t", "count", "term_a", "term_b", "term"]);
    for b in &r.blocks {
        blocks.push(row![b.t, b.count, b.term_a, b.term_b, b.term]);
    }
    let mut tails = Table::new(&["n", "tail_a", "tail_b", "tail"]);
    for t in &r.tails {
        tails.push(row![t.n, t.tail_a, t.tail_b, t.tail]);
    }
    (blocks, tails)
}

fn run_dichotomy(p: &Params, seed: u64) -> Result<Vec<Artifact>> {
    let curve = p.curve("curve")?;
    let psis = [p.psi("psi1")?, p.psi("psi2")?];
    let report = dichotomy_experiment(&curve, &psis, Kind::Simultaneous, p.u64("samples")?, p.u64("Qmax")?, seed)?;
    let series = classify_product_series(&psis[0], &psis[1], 0);
    let (larger, smaller) = if psis[0].ln_at_pow2(20) >= psis[1].ln_at_pow2(20) { (0, 1) } else { (1, 0) };
    let tail = simultaneous_cover_tail(&curve, &psis[larger], &psis[smaller], p.u32("tail_tmin")?, p.u32("tail_tmax")?, None)?;

    let mut activity = Table::new(&["t", "fraction"]);
    for a in &report.activity {
        activity.push(row![a.t, a.fraction]);
    }
    let mut cumulative = Table::new(&["m", "fraction"]);
    for c in &report.cumulative {
        cumulative.push(row![c.m, c.fraction]);
    }
    let (blocks, tails) = tail_tables(&tail);
    let summary = json!({
        "dichotomy": report,
        "series": { "kind": series.kind, "method": series.method },
        "cover_tail": tail,
    });
    Ok(vec![
        Artifact::json("dichotomy.json", &summary)?,
        Artifact::csv("activity.csv", &activity),
        Artifact::csv("cumulative.csv", &cumulative),
        Artifact::csv("sim_cover_blocks.csv", &blocks),
        Artifact::csv("sim_cover_tail.csv", &tails),
    ])
}

fn run_mult_tail(p: &Params, _seed: u64) -> Result<Vec<Artifact>> {
    let curve = p.curve("curve")?;
    let (lo, hi) = (p.u32("tmin")?, p.u32("tmax")?);
    let mut out = Vec::new();
    let mut reports = Vec::new();
    for (i, s) in p.get("psis")?.split(';').enumerate() {
        let psi = ApproxFn::parse(s)?;
        let r = multiplicative_cover_tail(&curve, &psi, lo, hi)?;
        let (blocks, tails) = tail_tables(&r);
        out.push(Artifact::csv(&format!("mult_cover_blocks_{i}.csv"), &blocks));
        out.push(Artifact::csv(&format!("mult_cover_tail_{i}.csv"), &tails));
        reports.push(json!({ "psi": psi.to_string(), "report": r }));
    }
    out.insert(0, Artifact::json("mult_tail.json", &reports)?);
    Ok(out)
}

fn run_thm4(p: &Params, _seed: u64) -> Result<Vec<Artifact>> {
    let curve = p.curve("curve")?;
    let q_max = p.u64("Q")?;
    let tol = rat_to_f64(&p.rat("tol")?);
    let mut table = Table::new(&["v1", "v2", "value", "predicted", "formula", "bracket_width"]);
    let mut estimates = Vec::new();
    for pair in p.get("pairs")?.split(';') {
        let vs: Vec<Rat> = pair.split(',').map(|s| parse_rat(s.trim()).ok_or_else(|| Params::bad("pairs", pair))).collect::<Result<_>>()?;
        let [v1, v2] = vs.as_slice() else {
            return Err(Params::bad("pairs", pair));
        };
        let est = cover_sum_exponent(&curve, v1, v2, q_max, tol)?;
        let formula = dim_theorem4(v1, v2)?;
        table.push(row![
            rat_to_f64(v1),
            rat_to_f64(v2),
            est.value,
            est.predicted.unwrap_or(f64::NAN),
            formula.value,
            est.diagnostics.bracket_width.unwrap_or(f64::NAN),
        ]);
        estimates.push(json!({ "v1": fmt_rat(v1), "v2": fmt_rat(v2), "formula": formula, "estimate": est }));
    }
    Ok(vec![Artifact::json("thm4.json", &estimates)?, Artifact::csv("thm4.csv", &table)])
}

fn run_thm6(p: &Params, _seed: u64) -> Result<Vec<Artifact>> {
    let mut formulas = Table::new(&["v", "dim_theorem6", "dim_bovey_dodson_1", "dim_theorem5_lower_1"]);
    let mut exact = Vec::new();
    for v in p.rats("vs")? {
        let (a, b, c) = (dim_theorem6(&v)?, dim_bovey_dodson(1, &v)?, dim_theorem5_lower(1, &v, false)?);
        formulas.push(row![rat_to_f64(&v), rat_to_f64(&a), rat_to_f64(&b), rat_to_f64(&c)]);
        exact.push(json!({ "v": fmt_rat(&v), "dim_theorem6": fmt_rat(&a), "dim_bovey_dodson_1": fmt_rat(&b), "dim_theorem5_lower_1": fmt_rat(&c) }));
    }
    let split = mult_exponent_split(&p.rat("split_v")?, &p.rat("split_eps")?)?;
    let mut members = Table::new(&["t", "v1", "v2", "bound"]);
    for m in &split.family {
        members.push(row![m.t, rat_to_f64(&m.v1), rat_to_f64(&m.v2), rat_to_f64(&m.bound)]);
    }
    let curve = p.curve("curve")?;
    let scales: Vec<u32> = DEFAULT_SCALES.collect();
    let box_v = p.rat("box_v")?;
    let est = box_count_dimension(&curve, &BoxKind::Multiplicative(box_v.clone()), p.u64("Q")?, &scales)?;
    let mut boxes = Table::new(&["log2_inv_delta", "q_lo", "q_hi", "boxes"]);
    for s in &est.diagnostics.scales {
        boxes.push(row![s.log2_inv_delta, s.q_lo, s.q_hi, s.boxes]);
    }
    let summary = json!({
        "formulas": exact,
        "split": split,
        "box_count": { "v": fmt_rat(&box_v), "predicted": fmt_rat(&dim_theorem6(&box_v)?), "estimate": est },
    });
    Ok(vec![
        Artifact::json("thm6.json", &summary)?,
        Artifact::csv("formulas.csv", &formulas),
        Artifact::csv("split.csv", &members),
        Artifact::csv("box_count.csv", &boxes),
    ])
}

fn run_huxley(p: &Params, _seed: u64) -> Result<Vec<Artifact>> {
    let curve = p.curve("curve")?;
    let (lo, hi) = (p.u32("tmin")?, p.u32("tmax")?);
    let mut rows = Table::new(&["tau", "t", "count", "ratio"]);
    let mut slopes = Table::new(&["tau", "slope", "predicted", "r2"]);
    let mut summary = Vec::new();
    for tau in p.rats("taus")? {
        let psi = ApproxFn::power(tau.clone())?;
        let scan = huxley_ratio_scan(&curve, &psi, lo, hi)?;
        let tf = rat_to_f64(&tau);
        for r in &scan {
            rows.push(row![tf, r.t, r.count, r.ratio]);
        }
        let fit = huxley_slope(&scan).ok_or_else(|| Error::Precondition("too few levels for a slope".into()))?;
        slopes.push(row![tf, fit.slope, 2.0 - tf, fit.r2]);
        summary.push(json!({ "tau": fmt_rat(&tau), "rows": scan, "slope": fit.slope, "predicted": 2.0 - tf }));
    }
    Ok(vec![
        Artifact::json("huxley.json", &summary)?,
        Artifact::csv("huxley.csv", &rows),
        Artifact::csv("slopes.csv", &slopes),
    ])
}

fn run_circle_rn(p: &Params, _seed: u64) -> Result<Vec<Artifact>> {
    let qs: Vec<u64> = p.get("Qs")?.split(',').map(|s| s.trim().parse().map_err(|_| Params::bad("Qs", s))).collect::<Result<_>>()?;
    let big_psis = p.rats("Psis")?;
    let arc = PlanarCurve::circle();
    let mut table = Table::new(&["Q", "Psi", "annulus", "brute", "arc_annulus", "arc_brute"]);
    let mut mismatches = 0u64;
    for &q in &qs {
        for psi in &big_psis {
            let (a, b) = (count_circle_annulus(q, psi)?, count_circle_annulus_brute(q, psi)?);
            let iv: &Interval = arc.domain();
            let (c, d) = (circle_arc_annulus_points(q, psi, iv)?, circle_arc_brute_points(q, psi, iv)?);
            mismatches += u64::from(a != b) + u64::from(c != d);
            table.push(row![q, rat_to_f64(psi), a, b, c, d]);
        }
    }
    let n_max = p.u64("n_max")?;
    let table_enum = r2_table_enum(n_max);
    let mut rn_mismatch = 0u64;
    let mut total = 0u64;
    for (n, &e) in table_enum.iter().enumerate().skip(1) {
        let f = r2_formula(n as u64);
        total += f;
        if f != e as u64 {
            rn_mismatch += 1;
        }
    }
    let summary = json!({
        "annulus": { "Qs": qs, "Psis": big_psis.iter().map(fmt_rat).collect::<Vec<_>>(), "mismatches": mismatches },
        "r2": { "n_max": n_max, "mismatches": rn_mismatch, "sum": total },
    });
    Ok(vec![Artifact::json("circle_rn.json", &summary)?, Artifact::csv("annulus.csv", &table)])
}

fn run_ubiquity(p: &Params, _seed: u64) -> Result<Vec<Artifact>> {
    let curve = p.curve("curve")?;
    let psi = p.psi("psi")?;
    let u = UFn::parse(p.get("u")?)?;
    let (lo, hi) = (p.u32("tmin")?, p.u32("tmax")?);
    let sys = build_system(&curve, &psi, &u, hi, None)?;
    let report = covering_fractions(&sys, lo, hi, p.u64("subintervals")? as usize, 1.0)?;
    let rho = DyadicFn::rho(&psi, &u);
    let big_psi = DyadicFn::over_power(&psi, &rat_int(1));
    let lemma1 = predict_lemma1(&rho, &big_psi, hi)?;
    let lemma2 = predict_lemma2(&rho, &big_psi)?;
    let mut table = Table::new(&["t", "interval", "lo", "hi", "radius", "fraction"]);
    for r in &report.rows {
        table.push(row![r.t, r.interval, r.lo, r.hi, r.radius, r.fraction]);
    }
    let summary = json!({
        "resonant_points": sys.resonant.len(),
        "report": report,
        "series": { "kind": lemma1.kind, "method": lemma1.method },
        "dimension_lower_bound": lemma2,
    });
    Ok(vec![Artifact::json("ubiquity.json", &summary)?, Artifact::csv("ubiquity.csv", &table)])
}

fn run_dual(p: &Params, _seed: u64) -> Result<Vec<Artifact>> {
    let y1 = TargetPoint::parse(p.get("point1")?)?;
    let psi1 = p.psi("psi1")?;
    let a1 = p.u64("A1")?;
    let dual1 = dual_solutions(&y1, &psi1, a1)?;
    let sim1 = simultaneous_solutions(&y1, std::slice::from_ref(&psi1), a1)?;
    let same = dual1.denominators() == sim1.denominators();

    let y2 = TargetPoint::parse(p.get("point2")?)?;
    let dual2 = dual_solutions(&y2, &p.psi("psi2")?, p.u64("A2")?)?;

    let mut t1 = Table::new(&["q", "a1", "err"]);
    for s in dual1.solutions() {
        t1.push(row![s.q, s.a[0], s.err[0]]);
    }
    let mut t2 = Table::new(&["pi_plus", "a1", "a2", "err"]);
    for s in dual2.solutions() {
        t2.push(row![s.q, s.a[0], s.a[1], s.err[0]]);
    }
    let summary = json!({
        "n1": { "dual": dual1, "simultaneous_denominators": sim1.denominators(), "identical": same },
        "n2": dual2,
    });
    Ok(vec![
        Artifact::json("dual.json", &summary)?,
        Artifact::csv("dual_n1.csv", &t1),
        Artifact::csv("dual_n2.csv", &t2),
    ])
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub preset: String,
    pub preset_version: u32,
    pub op: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub expected: Vec<Expected>,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputDigest>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// `<root>/<preset>-seed<seed>`.
pub fn run_dir(root: &Path, preset: &str, seed: u64) -> PathBuf {
    root.join(format!("{preset}-seed{seed}"))
}

/// Runs `preset` with explicit parameters, writes every artifact and the
/// manifest under [`run_dir`], and returns the manifest.
pub fn execute(preset: &Preset, params: &BTreeMap<String, String>, seed: u64, root: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let artifacts = (preset.run)(&Params(params), seed)?;
    let wall = start.elapsed().as_secs_f64();
    let dir = run_dir(root, preset.name, seed);
    let mut outputs = Vec::new();
    for a in &artifacts {
        emit::write_file(&dir.join(&a.file), &a.bytes)?;
        outputs.push(OutputDigest { file: a.file.clone(), sha256: emit::sha256_hex(&a.bytes) });
    }
    let manifest = RunManifest {
        tool: "curvelab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        preset: preset.name.into(),
        preset_version: preset.version,
        op: preset.op.into(),
        parameters: params.clone(),
        seed,
        expected: preset.expected(),
        wall_time_s: wall,
        outputs,
    };
    emit::write_file(&dir.join(MANIFEST_FILE), emit::json(&manifest)?.as_bytes())?;
    Ok(manifest)
}

/// Runs a preset with its default parameters.
pub fn run_preset(name: &str, seed: Option<u64>, root: &Path) -> Result<RunManifest> {
    let preset = find(name)?;
    execute(preset, &preset.default_params(), seed.unwrap_or(preset.seed), root)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { line: e.line(), col: e.column(), msg: e.to_string() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileCheck {
    pub file: String,
    pub expected: Option<String>,
    pub actual: Option<String>,
    pub identical: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reproduction {
    pub preset: String,
    pub seed: u64,
    pub files: Vec<FileCheck>,
    pub identical: bool,
}

/// Re-runs the experiment recorded in `manifest` and compares digests.
pub fn rerun(manifest: &RunManifest, root: &Path) -> Result<Reproduction> {
    let preset = find(&manifest.preset)?;
    if preset.version != manifest.preset_version {
        return Err(Error::Precondition(format!(
            "manifest records {} version {}, this build has version {}",
            preset.name, manifest.preset_version, preset.version
        )));
    }
    let fresh = execute(preset, &manifest.parameters, manifest.seed, root)?;
    let mut names: Vec<&str> = manifest.outputs.iter().chain(&fresh.outputs).map(|o| o.file.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    let lookup = |m: &RunManifest, f: &str| m.outputs.iter().find(|o| o.file == f).map(|o| o.sha256.clone());
    let files: Vec<FileCheck> = names
        .into_iter()
        .map(|f| {
            let (expected, actual) = (lookup(manifest, f), lookup(&fresh, f));
            FileCheck { file: f.into(), identical: expected.is_some() && expected == actual, expected, actual }
        })
        .collect();
    Ok(Reproduction {
        preset: preset.name.into(),
        seed: manifest.seed,
        identical: files.iter().all(|f| f.identical),
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_complete() {
        let mut names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 9);
        for n in [
            "thm1-divergence",
            "thm2-dichotomy",
            "thm3-mult-tail",
            "thm4-dim",
            "thm6-dim",
            "huxley-scan",
            "circle-rN",
            "ubiquity-parabola",
            "dual-oracle-demo",
        ] {
            assert!(find(n).is_ok(), "{n}");
        }
    }

    #[test]
    fn unknown_preset_lists_available() {
        let e = find("thm9").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let msg = e.to_string();
        assert!(msg.contains("thm9"));
        for p in PRESETS {
            assert!(msg.contains(p.name));
        }
    }

    #[test]
    fn missing_parameter_is_named() {
        let preset = find("thm4-dim").unwrap();
        let mut params = preset.default_params();
        params.remove("tol");
        let dir = std::env::temp_dir().join("curvelab-missing-param");
        let e = execute(preset, &params, 0, &dir).unwrap_err();
        assert!(e.to_string().contains("'tol'"));
    }

    #[test]
    fn manifest_round_trips_and_rerun_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let preset = find("dual-oracle-demo").unwrap();
        let mut params = preset.default_params();
        params.insert("A1".into(), "100".into());
        params.insert("A2".into(), "40".into());
        let m = execute(preset, &params, 7, dir.path()).unwrap();
        let run = run_dir(dir.path(), preset.name, 7);
        let back = read_manifest(&run.join(MANIFEST_FILE)).unwrap();
        assert_eq!(back.outputs, m.outputs);
        assert_eq!(back.parameters, params);
        let summary: serde_json::Value =
            serde_json::from_slice(&std::fs::read(run.join("dual.json")).unwrap()).unwrap();
        assert_eq!(summary["n1"]["identical"], serde_json::Value::Bool(true));

        let other = tempfile::tempdir().unwrap();
        let r = rerun(&back, other.path()).unwrap();
        assert!(r.identical, "{r:?}");

        let mut tampered = back.clone();
        tampered.outputs[0].sha256 = "0".repeat(64);
        assert!(!rerun(&tampered, other.path()).unwrap().identical);
        tampered.preset_version += 1;
        assert!(rerun(&tampered, other.path()).is_err());
    }
}
