//! Command-line front end: subcommands per module, presets with run
//! manifests, and configuration-file validation.

pub mod args;
pub mod config;
pub mod emit;
pub mod presets;

use std::path::{Path, PathBuf};

use curvelab::curve::{Interval, PlanarCurve};
use curvelab::dimension::{
    box_count_dimension, cover_sum_exponent, dim_bovey_dodson, dim_rynne, dim_theorem4, dim_theorem5_lower,
    dim_theorem6, formula_estimate, BoxKind, FormulaValue,
};
use curvelab::limsup::{dual_solutions, multiplicative_solutions, simultaneous_solutions, Kind, TargetPoint};
use curvelab::measure::{dichotomy_experiment, multiplicative_cover_tail, simultaneous_cover_tail};
use curvelab::ratpoints::{count_near_curve, huxley_ratio_scan, huxley_slope, CountMode, CountOptions, ThresholdRule};
use curvelab::real::{parse_rat, Rat};
use curvelab::ubiquity::{build_system, covering_fractions, UFn};
use curvelab::{ApproxFn, Error, Result};
use serde_json::json;

use args::{Cli, Command, MethodArg, ModeArg, PresetAction, RuleArg, Which};
use emit::{row, Table};

pub const OUT_ENV: &str = "CURVELAB_OUT";
pub const DEFAULT_OUT: &str = "curvelab-out";

/// What a command prints and how the process exits.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Outcome {
        Outcome { stdout, ..Outcome::default() }
    }
}

/// `--out`, else `$CURVELAB_OUT`, else `./curvelab-out`.
pub fn out_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Runs `f` on a pool of `n` workers, or on the global pool when `n` is `None`.
pub fn with_threads<T: Send>(n: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match n {
        None => Ok(f()),
        Some(0) => Err(Error::Precondition("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Precondition(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn run(cli: Cli) -> Outcome {
    let threads = cli.threads;
    match with_threads(threads, move || dispatch(cli.command)).and_then(|r| r) {
        Ok(o) => o,
        Err(e) => Outcome { stderr: format!("error: {e}\n"), code: e.exit_code(), ..Outcome::default() },
    }
}

fn rat_arg(name: &str, s: &str) -> Result<Rat> {
    parse_rat(s.trim()).ok_or_else(|| Error::Parse { line: 1, col: 1, msg: format!("--{name}: expected a rational, got '{s}'") })
}

fn range_arg(name: &str, s: &str) -> Result<(u32, u32)> {
    let bad = || Error::Parse { line: 1, col: 1, msg: format!("--{name}: expected 'lo..hi', got '{s}'") };
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let (a, b): (u32, u32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn write_csv(path: &Option<PathBuf>, t: &Table) -> Result<()> {
    match path {
        Some(p) => emit::write_file(p, t.to_csv().as_bytes()),
        None => Ok(()),
    }
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::CountPoints(a) => {
            let curve = PlanarCurve::parse(&a.curve)?;
            let psi = ApproxFn::parse(&a.psi)?;
            if let Some(scan) = &a.scan {
                let (lo, hi) = range_arg("scan", scan)?;
                let rows = huxley_ratio_scan(&curve, &psi, lo, hi)?;
                let mut t = Table::new(&["t", "count", "ratio"]);
                for r in &rows {
                    t.push(row![r.t, r.count, r.ratio]);
                }
                write_csv(&a.csv, &t)?;
                let fit = huxley_slope(&rows);
                return Ok(Outcome::ok(emit::json(&json!({ "rows": rows, "fit": fit }))?));
            }
            let iv = match &a.interval {
                Some(s) => Interval::parse(s)?,
                None => curve.domain().clone(),
            };
            let opts = CountOptions {
                mode: match a.mode {
                    ModeArg::Canonical => CountMode::Canonical,
                    ModeArg::Multiplicity => CountMode::Multiplicity,
                },
                rule: match a.rule {
                    RuleArg::Frozen => ThresholdRule::Frozen,
                    RuleArg::PerQ => ThresholdRule::PerQ,
                },
                emit_cap: a.emit_points,
            };
            let q = a.q.ok_or_else(|| Error::Precondition("--Q is required without --scan".into()))?;
            let r = count_near_curve(&curve, &psi, q, &iv, &opts)?;
            Ok(Outcome::ok(emit::json(&r)?))
        }
        Command::Membership(a) => {
            let y = TargetPoint::parse(&a.point)?;
            let psis = a.psi.iter().map(|s| ApproxFn::parse(s)).collect::<Result<Vec<_>>>()?;
            let rec = match Kind::parse(&a.kind)? {
                Kind::Simultaneous => {
                    let psis = if psis.len() == 1 { vec![psis[0].clone(); y.dim()] } else { psis };
                    simultaneous_solutions(&y, &psis, a.q)?
                }
                Kind::Multiplicative => multiplicative_solutions(&y, single(&psis)?, a.q)?,
                Kind::Dual => dual_solutions(&y, single(&psis)?, a.q)?,
            };
            Ok(Outcome::ok(emit::json(&rec)?))
        }
        Command::Dichotomy(a) => {
            let curve = PlanarCurve::parse(&a.curve)?;
            let kind = Kind::parse(&a.kind)?;
            let psi = ApproxFn::parse(&a.psi)?;
            let psis = match kind {
                Kind::Simultaneous => {
                    let phi = a.phi.as_deref().map(ApproxFn::parse).transpose()?.unwrap_or_else(|| psi.clone());
                    vec![psi, phi]
                }
                _ => vec![psi],
            };
            let r = dichotomy_experiment(&curve, &psis, kind, a.samples, a.q_max, a.seed)?;
            let mut t = Table::new(&["t", "fraction"]);
            for b in &r.activity {
                t.push(row![b.t, b.fraction]);
            }
            write_csv(&a.csv, &t)?;
            Ok(Outcome::ok(emit::json(&r)?))
        }
        Command::CoverTail(a) => {
            let curve = PlanarCurve::parse(&a.curve)?;
            let psi = ApproxFn::parse(&a.psi)?;
            let r = match Kind::parse(&a.kind)? {
                Kind::Simultaneous => {
                    let phi = a.phi.as_deref().map(ApproxFn::parse).transpose()?.unwrap_or_else(|| psi.clone());
                    simultaneous_cover_tail(&curve, &psi, &phi, a.tmin, a.tmax, None)?
                }
                Kind::Multiplicative => multiplicative_cover_tail(&curve, &psi, a.tmin, a.tmax)?,
                Kind::Dual => return Err(Error::Precondition("cover tails are sim or mult".into())),
            };
            let mut t = Table::new(&["t", "count", "term", "tail"]);
            for (b, tail) in r.blocks.iter().zip(&r.tails) {
                t.push(row![b.t, b.count, b.term, tail.tail]);
            }
            write_csv(&a.csv, &t)?;
            Ok(Outcome::ok(emit::json(&r)?))
        }
        Command::DimFormula(a) => {
            let xs = a.args.split(',').map(|s| rat_arg("args", s)).collect::<Result<Vec<_>>>()?;
            let (name, v) = formula(a.which, &xs)?;
            Ok(Outcome::ok(emit::json(&formula_estimate(name, &xs, &v))?))
        }
        Command::DimEstimate(a) => {
            let curve = PlanarCurve::parse(&a.curve)?;
            let pair = || -> Result<(Rat, Rat)> {
                match (&a.v1, &a.v2) {
                    (Some(x), Some(y)) => Ok((rat_arg("v1", x)?, rat_arg("v2", y)?)),
                    _ => Err(Error::Precondition("--v1 and --v2 are required".into())),
                }
            };
            let est = match a.method {
                MethodArg::Cover => {
                    let (v1, v2) = pair()?;
                    cover_sum_exponent(&curve, &v1, &v2, a.q, a.tol)?
                }
                MethodArg::Box => {
                    let kind = match &a.v {
                        Some(v) => BoxKind::Multiplicative(rat_arg("v", v)?),
                        None => {
                            let (v1, v2) = pair()?;
                            BoxKind::Simultaneous(v1, v2)
                        }
                    };
                    let (lo, hi) = range_arg("scales", &a.scales)?;
                    let scales: Vec<u32> = (lo..=hi).collect();
                    box_count_dimension(&curve, &kind, a.q, &scales)?
                }
            };
            Ok(Outcome::ok(emit::json(&est)?))
        }
        Command::Ubiquity(a) => {
            let curve = PlanarCurve::parse(&a.curve)?;
            let psi = ApproxFn::parse(&a.psi)?;
            let u = UFn::parse(&a.u)?;
            let sys = build_system(&curve, &psi, &u, a.tmax, None)?;
            let r = covering_fractions(&sys, a.tmin, a.tmax, a.subintervals, a.rho_scale)?;
            let mut t = Table::new(&["t", "interval", "fraction"]);
            for row in &r.rows {
                t.push(row![row.t, row.interval, row.fraction]);
            }
            write_csv(&a.csv, &t)?;
            Ok(Outcome::ok(emit::json(&r)?))
        }
        Command::Preset { action } => preset(action),
        Command::ValidateConfig { path } => Ok(validate(&path)),
    }
}

fn single(psis: &[ApproxFn]) -> Result<&ApproxFn> {
    match psis {
        [p] => Ok(p),
        _ => Err(Error::Precondition(format!("expected one --psi, got {}", psis.len()))),
    }
}

fn arity(which: Which, xs: &[Rat], n: usize, shape: &str) -> Result<()> {
    if xs.len() == n {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{which:?} takes {shape}, got {} values", xs.len()).to_lowercase()))
    }
}

fn small_int(x: &Rat, what: &str) -> Result<u32> {
    if x.is_integer() {
        if let Ok(n) = u32::try_from(x.to_integer()) {
            return Ok(n);
        }
    }
    Err(Error::Domain(format!("{what} must be a non-negative integer, got {x}")))
}

fn formula(which: Which, xs: &[Rat]) -> Result<(&'static str, FormulaValue)> {
    let exact = |r: Rat| FormulaValue { value: curvelab::real::rat_to_f64(&r), exact: r, outside_hypotheses: false, note: None };
    Ok(match which {
        Which::T4 => {
            arity(which, xs, 2, "v1,v2")?;
            ("dim_theorem4", dim_theorem4(&xs[0], &xs[1])?)
        }
        Which::T6 => {
            arity(which, xs, 1, "v")?;
            ("dim_theorem6", exact(dim_theorem6(&xs[0])?))
        }
        Which::Rynne => ("dim_rynne", dim_rynne(xs)?),
        Which::Bd => {
            arity(which, xs, 2, "n,v")?;
            ("dim_bovey_dodson", exact(dim_bovey_dodson(small_int(&xs[0], "n")?, &xs[1])?))
        }
        Which::T5 | Which::T7 => {
            arity(which, xs, 2, "dimM,v")?;
            let dual = which == Which::T7;
            let name = if dual { "dim_theorem5_lower_dual" } else { "dim_theorem5_lower" };
            (name, exact(dim_theorem5_lower(small_int(&xs[0], "dimM")?, &xs[1], dual)?))
        }
    })
}

fn preset(action: PresetAction) -> Result<Outcome> {
    match action {
        PresetAction::List => {
            let mut s = String::new();
            for p in presets::PRESETS {
                s.push_str(&format!("{:<18} seed {:<3} {}\n", p.name, p.seed, p.summary));
            }
            Ok(Outcome::ok(s))
        }
        PresetAction::Run { name, seed, out } => {
            let root = out_root(out);
            let m = presets::run_preset(&name, seed, &root)?;
            let dir = presets::run_dir(&root, &m.preset, m.seed);
            Ok(Outcome::ok(format!("{}\n", dir.join(presets::MANIFEST_FILE).display())))
        }
        PresetAction::Rerun { manifest, out } => {
            let m = presets::read_manifest(&manifest)?;
            let root = out_root(out);
            let r = presets::rerun(&m, &root)?;
            let code = if r.identical { 0 } else { 1 };
            Ok(Outcome { stdout: emit::json(&r)?, stderr: String::new(), code })
        }
    }
}

fn validate(path: &Path) -> Outcome {
    match config::validate_config(path) {
        Ok(c) => match emit::json(&c.summary()) {
            Ok(s) => Outcome::ok(s),
            Err(e) => Outcome { stderr: format!("error: {e}\n"), code: e.exit_code(), ..Outcome::default() },
        },
        Err(errors) => {
            let code = errors.iter().map(Error::exit_code).max().unwrap_or(2);
            let stderr = errors.iter().map(|e| format!("{}: {e}\n", path.display())).collect();
            Outcome { stdout: String::new(), stderr, code }
        }
    }
}
