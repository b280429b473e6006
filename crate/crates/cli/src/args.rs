use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "curvelab", version, about = "Rational points near planar curves and limsup-set experiments")]
pub struct Cli {
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count rational points within psi(Q)/Q of a curve, or scan N(2^t).
    CountPoints(CountPointsArgs),
    /// Truncated membership record of a point.
    Membership(MembershipArgs),
    /// Sampled block activity of points on a curve.
    Dichotomy(DichotomyArgs),
    /// Partial tails of a cover of the limsup set.
    CoverTail(CoverTailArgs),
    /// Closed-form dimension values.
    DimFormula(DimFormulaArgs),
    /// Dimension estimate of a truncated limsup set.
    DimEstimate(DimEstimateArgs),
    /// Covering fractions of a ubiquity system.
    Ubiquity(UbiquityArgs),
    /// Named experiments with manifests.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Parse a key = value configuration file and report every error.
    ValidateConfig { path: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum PresetAction {
    List,
    Run {
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Output root (default: $CURVELAB_OUT, else ./curvelab-out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the experiment recorded in a manifest and compare digests.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Canonical,
    Multiplicity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Frozen,
    PerQ,
}

#[derive(Debug, Args)]
pub struct CountPointsArgs {
    #[arg(long)]
    pub curve: String,
    #[arg(long)]
    pub psi: String,
    #[arg(long = "Q", required_unless_present = "scan")]
    pub q: Option<u64>,
    /// Defaults to the curve's domain.
    #[arg(long)]
    pub interval: Option<String>,
    #[arg(long = "emit-points")]
    pub emit_points: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Canonical)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = RuleArg::Frozen)]
    pub rule: RuleArg,
    /// `lo..hi`: count at Q = 2^t for each t and report N / (psi(Q) Q^2).
    #[arg(long)]
    pub scan: Option<String>,
    /// Write the scan rows here as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MembershipArgs {
    #[arg(long)]
    pub point: String,
    #[arg(long)]
    pub kind: String,
    /// One per coordinate for `sim` (a single value is repeated).
    #[arg(long, required = true)]
    pub psi: Vec<String>,
    #[arg(long = "Q")]
    pub q: u64,
}

#[derive(Debug, Args)]
pub struct DichotomyArgs {
    #[arg(long)]
    pub curve: String,
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub psi: String,
    /// Second function for `sim` (default: same as psi).
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long, default_value_t = 500)]
    pub samples: u64,
    #[arg(long = "Qmax")]
    pub q_max: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoverTailArgs {
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub curve: String,
    #[arg(long)]
    pub psi: String,
    /// y half-width function for `sim` (default: same as psi).
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub tmin: u32,
    #[arg(long)]
    pub tmax: u32,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    T4,
    T6,
    Rynne,
    Bd,
    T5,
    T7,
}

#[derive(Debug, Args)]
pub struct DimFormulaArgs {
    #[arg(long, value_enum)]
    pub which: Which,
    /// Comma-separated: t4 `v1,v2`; t6 `v`; rynne `v1,...,vn`; bd `n,v`; t5 and t7 `dimM,v`.
    #[arg(long, allow_hyphen_values = true)]
    pub args: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cover,
    Box,
}

#[derive(Debug, Args)]
pub struct DimEstimateArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long)]
    pub curve: String,
    #[arg(long)]
    pub v1: Option<String>,
    #[arg(long)]
    pub v2: Option<String>,
    /// Multiplicative exponent (box method only, instead of v1/v2).
    #[arg(long)]
    pub v: Option<String>,
    #[arg(long = "Q")]
    pub q: u64,
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
    /// `lo..hi` in log2(1/delta) (box method).
    #[arg(long, default_value = "6..14")]
    pub scales: String,
}

#[derive(Debug, Args)]
pub struct UbiquityArgs {
    #[arg(long)]
    pub curve: String,
    #[arg(long)]
    pub psi: String,
    #[arg(long, default_value = "log")]
    pub u: String,
    #[arg(long)]
    pub tmin: u32,
    #[arg(long)]
    pub tmax: u32,
    #[arg(long, default_value_t = 4)]
    pub subintervals: usize,
    #[arg(long = "rho-scale", default_value_t = 1.0)]
    pub rho_scale: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}
