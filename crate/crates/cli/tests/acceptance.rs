//! Acceptance gate. Runs every criterion at its pinned tolerance, prints one
//! PASS/FAIL line each, and exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use curvelab::curve::PlanarCurve;
use curvelab::dimension::{
    cover_sum_exponent, dim_bovey_dodson, dim_rynne, dim_theorem5_lower, dim_theorem6, mult_exponent_split,
};
use curvelab::limsup::{inclusion_check, simultaneous_solutions, InclusionParams, InclusionVerdict, KindPair, TargetPoint};
use curvelab::ratpoints::{count_circle_annulus, huxley_ratio_scan, huxley_slope, r2_formula, r2_table_enum};
use curvelab::real::{rat, Rat};
use curvelab::ubiquity::{build_system, covering_fractions, UFn};
use curvelab::ApproxFn;
use curvelab_cli::presets::{self, RunManifest, MANIFEST_FILE, PRESETS};
use curvelab_cli::with_threads;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// 1. Circle annulus counts against a lattice count
// ---------------------------------------------------------------------------

/// Pairs `(q, (p1, p2))`, `Q < q <= 2Q`, with `|q - sqrt(p1^2 + p2^2)| < a/b`,
/// decided in integers: `(bq - a)^2 < b^2 n < (bq + a)^2`.
fn lattice_annulus(q_max: i64, a: i64, b: i64) -> u64 {
    let mut count = 0;
    for q in q_max + 1..=2 * q_max {
        let (lo, hi) = ((b * q - a) as i128, (b * q + a) as i128);
        let reach = q + 1;
        for p1 in -reach..=reach {
            for p2 in -reach..=reach {
                let n = (p1 * p1 + p2 * p2) as i128 * (b * b) as i128;
                if lo * lo < n && n < hi * hi {
                    count += 1;
                }
            }
        }
    }
    count
}

fn criterion_1() -> Outcome {
    let mut checked = 0;
    for q in [32, 64, 128, 256] {
        for (a, b) in [(1, 10), (3, 10)] {
            let fast = ok(count_circle_annulus(q as u64, &rat(a, b)))?;
            let slow = lattice_annulus(q, a, b);
            ensure!(fast == slow, "Q={q}, Psi={a}/{b}: annulus {fast} != lattice {slow}");
            checked += 1;
        }
    }
    Ok(format!("{checked} (Q, Psi) cases equal"))
}

// ---------------------------------------------------------------------------
// 2. r(n) two ways
// ---------------------------------------------------------------------------

fn criterion_2() -> Outcome {
    const N: u64 = 1_000_000;
    let table = r2_table_enum(N);
    let bad: Vec<u64> = (1..=N).filter(|&n| r2_formula(n) != table[n as usize] as u64).take(5).collect();
    ensure!(bad.is_empty(), "formula and enumeration differ at n = {bad:?}");
    Ok(format!("n <= {N} identical"))
}

// ---------------------------------------------------------------------------
// 3. Near-curve count scaling
// ---------------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let curve = PlanarCurve::parabola();
    let mut slopes = Vec::new();
    for (num, den) in [(3, 10), (1, 2), (7, 10)] {
        let tau = num as f64 / den as f64;
        let psi = ok(ApproxFn::power(rat(num, den)))?;
        let rows = ok(huxley_ratio_scan(&curve, &psi, 8, 12))?;
        let slope = huxley_slope(&rows).ok_or("no fit")?.slope;
        let (lo, hi) = (2.0 - tau - 0.3, 2.0 - tau + 0.3);
        ensure!(slope >= lo && slope <= hi, "tau={tau}: slope {slope:.4} outside [{lo:.2}, {hi:.2}]");
        slopes.push(format!("tau={tau}: {slope:.4}"));
    }
    Ok(slopes.join(", "))
}

// ---------------------------------------------------------------------------
// 4. Cover-sum exponent on the parabola
// ---------------------------------------------------------------------------

fn criterion_4() -> Outcome {
    let curve = PlanarCurve::parabola();
    let mut out = Vec::new();
    for (v1, v2, target, tol) in [(rat(1, 1), rat(1, 1), 0.5, 0.07), (rat(3, 1), rat(1, 2), 0.375, 0.10)] {
        let est = ok(cover_sum_exponent(&curve, &v1, &v2, 1 << 12, 0.01))?;
        ensure!(
            (est.value - target).abs() <= tol,
            "({v1},{v2}): {:.4} not within {tol} of {target}",
            est.value
        );
        out.push(format!("({v1},{v2}) -> {:.4}", est.value));
    }
    Ok(out.join(", "))
}

// ---------------------------------------------------------------------------
// 5. Formula identities
// ---------------------------------------------------------------------------

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.random_range(1..=6i64);
        let den = rng.random_range(1..=20i64);
        // v >= 1/n keeps the exponent sum at least 1.
        let v = rat(1, n) + rat(rng.random_range(0..=60i64), den);
        let got = ok(dim_rynne(&vec![v.clone(); n as usize]))?.exact;
        let want = rat(n + 1, 1) / (rat(1, 1) + &v);
        ensure!(got == want, "dim_rynne(n={n}, v={v}) = {got}, expected {want}");
    }
    for _ in 0..50 {
        let v = rat(1, 1) + rat(rng.random_range(0..=80i64), rng.random_range(1..=16i64));
        let t6 = ok(dim_theorem6(&v))?;
        ensure!(ok(dim_bovey_dodson(1, &v))? == t6, "bovey-dodson(1, {v}) != theorem6");
        ensure!(ok(dim_theorem5_lower(1, &v, false))? == t6, "theorem5_lower(1, {v}) != theorem6");
    }
    let mut splits = 0;
    while splits < 20 {
        let v = rat(1, 1) + rat(rng.random_range(1..=40i64), rng.random_range(1..=8i64));
        let eps = rat(1, rng.random_range(6..=60i64));
        let cap = (rat(1, 1) / (rat(1, 1) + &v)).min(rat(1, 5));
        if eps >= cap || &v - &eps <= rat(1, 1) {
            continue;
        }
        let s = ok(mult_exponent_split(&v, &eps))?;
        let ve = &v - &eps;
        let limit = rat(2, 1) / (rat(1, 1) + &ve);
        for m in &s.family {
            ensure!(&m.v1 + &m.v2 == ve, "v={v}, eps={eps}, t={}: v1+v2 != v-eps", m.t);
            ensure!(m.bound <= limit, "v={v}, eps={eps}, t={}: bound {} > {limit}", m.t, m.bound);
        }
        ensure!(s.boundary_bound <= limit && s.max_bound <= limit, "v={v}, eps={eps}: family bound above {limit}");
        splits += 1;
    }
    Ok("50 rynne, 50 fibre identities, 20 splits exact".into())
}

// ---------------------------------------------------------------------------
// 6. Dirichlet floor
// ---------------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let pairs: [(Rat, Rat); 3] = [(rat(1, 2), rat(1, 2)), (rat(1, 3), rat(2, 3)), (rat(3, 4), rat(1, 4))];
    let mut checks = 0;
    for (v1, v2) in &pairs {
        let psis = [ok(ApproxFn::power(v1.clone()))?, ok(ApproxFn::power(v2.clone()))?];
        for i in 0..100 {
            let y = TargetPoint::sample(6, i, 2);
            let rec = ok(simultaneous_solutions(&y, &psis, 1 << 12))?;
            let qs = rec.denominators();
            for t in 1..=12u32 {
                ensure!(
                    qs.iter().any(|&q| q <= 1 << t),
                    "({v1},{v2}), point {i} ({:?}): no solution with q <= 2^{t}",
                    y.to_f64()
                );
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} truncations, zero failures"))
}

// ---------------------------------------------------------------------------
// 7. Inclusions
// ---------------------------------------------------------------------------

fn criterion_7() -> Outcome {
    let cases = [
        ("psi1=psi2=h^-1 in psi=h^-2", vec![rat(1, 1), rat(1, 1)], rat(2, 1)),
        ("v=(0.7,0.5) in v=1.2", vec![rat(7, 10), rat(1, 2)], rat(6, 5)),
    ];
    let mut out = Vec::new();
    for (label, vs, v) in cases {
        let params = ok(InclusionParams::exponents(&vs, &v))?;
        let r = ok(inclusion_check(KindPair::SimultaneousInMultiplicative, &params, 100, 1 << 8, 7))?;
        ensure!(r.violations.is_empty(), "{label}: {} violations", r.violations.len());
        ensure!(r.verdict == InclusionVerdict::Pass, "{label}: verdict {:?}", r.verdict);
        out.push(format!("{label}: {} solutions checked", r.left_solutions));
    }
    Ok(out.join(", "))
}

// ---------------------------------------------------------------------------
// 8. Ubiquity covering fractions
// ---------------------------------------------------------------------------

fn criterion_8() -> Outcome {
    let psi = ok(ApproxFn::power_log(rat(1, 2), rat(1, 2), rat(0, 1)))?;
    let sys = ok(build_system(&PlanarCurve::parabola(), &psi, &UFn::Log, 14, None))?;
    let r = ok(covering_fractions(&sys, 10, 14, 4, 1.0))?;
    ensure!(r.rows.len() == 20, "expected 20 (t, interval) cells, got {}", r.rows.len());
    if let Some(bad) = r.rows.iter().find(|c| c.fraction < 0.5) {
        return Err(format!("t={}, interval {}: fraction {:.4} < 0.5", bad.t, bad.interval, bad.fraction));
    }
    Ok(format!("min fraction {:.4} over t=10..14, 4 sub-intervals", r.kappa_hat))
}

// ---------------------------------------------------------------------------
// Shared preset runs (criteria 9-11)
// ---------------------------------------------------------------------------

struct Baseline {
    _dir: tempfile::TempDir,
    root: PathBuf,
    manifests: Vec<RunManifest>,
}

fn baseline() -> &'static Baseline {
    static B: OnceLock<Baseline> = OnceLock::new();
    B.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("threads1");
        let manifests = PRESETS
            .iter()
            .map(|p| with_threads(Some(1), || presets::run_preset(p.name, None, &root)).unwrap().unwrap())
            .collect();
        Baseline { _dir: dir, root, manifests }
    })
}

fn read_json(path: &Path) -> Result<Value, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn verdict_of(b: &Baseline, preset: &str) -> Result<(String, Vec<f64>), String> {
    let m = b.manifests.iter().find(|m| m.preset == preset).ok_or("preset not run")?;
    ensure!(m.seed == 42, "{preset} ran with seed {}", m.seed);
    ensure!(m.parameters["samples"] == "500" && m.parameters["Qmax"] == "4096", "{preset} parameters changed");
    let v = read_json(&presets::run_dir(&b.root, preset, m.seed).join("dichotomy.json"))?;
    let hint = v["dichotomy"]["verdict_hint"].as_str().ok_or("no verdict_hint")?.to_string();
    let last: Vec<f64> = v["dichotomy"]["activity"]
        .as_array()
        .ok_or("no activity")?
        .iter()
        .rev()
        .take(4)
        .rev()
        .filter_map(|a| a["fraction"].as_f64())
        .collect();
    Ok((hint, last))
}

fn criterion_9() -> Outcome {
    let b = baseline();
    let (full, full_last) = verdict_of(b, "thm1-divergence")?;
    let (zero, zero_last) = verdict_of(b, "thm2-dichotomy")?;
    let detail = format!("divergent: {full} (last blocks {full_last:.3?}); convergent: {zero} (last blocks {zero_last:.3?})");
    ensure!(full == "full-like" && zero == "zero-like", "{detail}");
    Ok(detail)
}

fn csv_column(path: &Path, name: &str) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or("empty csv")?.split(',').collect();
    let col = header.iter().position(|h| *h == name).ok_or_else(|| format!("no column {name}"))?;
    lines
        .map(|l| l.split(',').nth(col).and_then(|c| c.parse::<f64>().ok()).ok_or_else(|| format!("bad row '{l}'")))
        .collect()
}

fn criterion_10() -> Outcome {
    let b = baseline();
    let mut seen = BTreeMap::new();
    for m in &b.manifests {
        let dir = presets::run_dir(&b.root, &m.preset, m.seed);
        for o in m.outputs.iter().filter(|o| o.file.contains("cover_tail") && o.file.ends_with(".csv")) {
            let kind = if o.file.starts_with("mult") { "multiplicative" } else { "simultaneous" };
            for col in ["tail_a", "tail_b", "tail"] {
                let xs = csv_column(&dir.join(&o.file), col)?;
                if let Some(w) = xs.windows(2).find(|w| w[1] > w[0]) {
                    return Err(format!("{}/{}: {col} increases {} -> {}", m.preset, o.file, w[0], w[1]));
                }
            }
            *seen.entry(kind).or_insert(0) += 1;
        }
    }
    ensure!(seen.len() == 2, "both estimators must appear among the presets, saw {seen:?}");
    Ok(format!("non-increasing tails: {seen:?}"))
}

fn criterion_11() -> Outcome {
    let b = baseline();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for m in &b.manifests {
        let path = presets::run_dir(&b.root, &m.preset, m.seed).join(MANIFEST_FILE);
        let recorded = ok(presets::read_manifest(&path))?;
        for threads in [1, 4, 8] {
            let root = dir.path().join(format!("threads{threads}"));
            let r = ok(with_threads(Some(threads), || presets::rerun(&recorded, &root)).and_then(|r| r))?;
            ensure!(r.identical, "{} at {threads} threads: {:?}", m.preset, r.files.iter().filter(|f| !f.identical).collect::<Vec<_>>());
            for o in &recorded.outputs {
                let a = std::fs::read(presets::run_dir(&b.root, &m.preset, m.seed).join(&o.file)).map_err(|e| e.to_string())?;
                let c = std::fs::read(presets::run_dir(&root, &m.preset, m.seed).join(&o.file)).map_err(|e| e.to_string())?;
                ensure!(a == c, "{}/{} differs at {threads} threads", m.preset, o.file);
                files += 1;
            }
        }
    }
    Ok(format!("{} presets x 3 thread counts, {files} files byte-identical", b.manifests.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("circle annulus oracle equivalence", criterion_1),
        ("r(n) formula = enumeration, n <= 10^6", criterion_2),
        ("near-curve count slopes", criterion_3),
        ("cover-sum exponent on the parabola", criterion_4),
        ("formula identities", criterion_5),
        ("Dirichlet floor", criterion_6),
        ("inclusion laws", criterion_7),
        ("ubiquity covering fractions", criterion_8),
        ("dichotomy direction", criterion_9),
        ("cover-tail monotonicity", criterion_10),
        ("determinism across thread counts", criterion_11),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {:>2} PASS  {name} [{secs:.1}s]: {detail}", i + 1),
            Err(why) => {
                println!("criterion {:>2} FAIL  {name} [{secs:.1}s]: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed.len(), failed.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
