//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "ldpu",
    version,
    about = "Prediction-preservation guarantees for classifiers under local differential privacy"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,

    /// Write the result to this file (a run manifest goes next to it)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Write the run manifest to this path (default: <out>.manifest.json when --out is set)
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    /// Cap on worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// RNG seed
    #[arg(long, global = true, env = "LDPU_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Human,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probability that a mechanism's output for x lands in [a, b]
    Concentration(ConcentrationArgs),
    /// Probabilistic robustness radius of a model at a point
    Radius(RadiusArgs),
    /// Robust hyperrectangle grown from the radius box
    Hyperrect(HyperrectArgs),
    /// Utility guarantee rho for a model, point and mechanisms
    Quantify(QuantifyArgs),
    /// Smallest epsilon reaching a target rho
    SelectEps(SelectEpsArgs),
    /// rho over families x epsilons x radii
    Sweep(SweepArgs),
    /// Monte-Carlo estimate of prediction preservation
    Empirical(EmpiricalArgs),
    /// Theoretical rho against the empirical estimate, with timing
    Compare(CompareArgs),
    /// Built-in fixture models
    #[command(subcommand)]
    Fixtures(FixturesCommand),
    /// Re-run a recorded manifest
    Replay(ReplayArgs),
}

#[derive(Debug, Subcommand)]
pub enum FixturesCommand {
    /// Write the built-in models as JSON files
    Export(ExportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    /// Target directory
    #[arg(long, default_value = "fixtures")]
    pub dir: PathBuf,

    /// Export only this fixture (nn2d, qda2d, step1d, linear2d, forest2d)
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run
    pub manifest: PathBuf,

    /// Compare with the recorded outputs instead of overwriting them
    #[arg(long)]
    pub check: bool,
}

/// Family parameters shared by commands that build mechanisms from a family name.
#[derive(Debug, Clone, Args, Serialize)]
pub struct FamilyParams {
    /// Gaussian failure probability delta
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,

    /// Grid size for krr / exp
    #[arg(long, default_value_t = 100)]
    pub k: usize,

    /// Wrap every mechanism in a privacy indicator with this delta
    #[arg(long)]
    pub indicator: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Robust {
    /// Misclassification tolerance tau
    #[arg(long, default_value_t = 0.02)]
    pub tau: f64,

    /// Confidence failure probability omega
    #[arg(long, default_value_t = 0.05)]
    pub omega: f64,

    /// Radius precision kappa
    #[arg(long, default_value_t = 0.01)]
    pub kappa: f64,

    /// Maximum expansion passes over all faces
    #[arg(long, default_value_t = 3)]
    pub passes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    /// B_theta(x) from the radius search
    Radius,
    /// The expanded hyperrectangle
    Hyperrect,
}

/// Where the robust box comes from: explicit, or searched on the model.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Region {
    /// Explicit box, one a:b per dimension, comma separated (e.g. 0.2:0.8,0:1)
    #[arg(long, conflicts_with = "theta")]
    pub rect: Option<String>,

    /// Explicit l_inf radius around the point
    #[arg(long)]
    pub theta: Option<f64>,

    /// Region searched on --model when neither --rect nor --theta is given
    #[arg(long, value_enum, default_value_t = RegionKind::Hyperrect)]
    pub region: RegionKind,
}

#[derive(Debug, Args, Serialize)]
pub struct ConcentrationArgs {
    /// Mechanism: family name with --eps, or compact family:eps[:delta][:k]
    #[arg(long)]
    pub mech: String,

    /// Privacy budget (overrides the compact form)
    #[arg(long)]
    pub eps: Option<f64>,

    #[command(flatten)]
    pub family: FamilyParams,

    /// Input value
    #[arg(long, default_value_t = 0.5)]
    pub x: f64,

    /// Interval start
    #[arg(long)]
    pub a: f64,

    /// Interval end
    #[arg(long)]
    pub b: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct RadiusArgs {
    /// Model file, or a built-in fixture name
    #[arg(long)]
    pub model: String,

    /// Comma-separated point
    #[arg(long)]
    pub point: String,

    #[command(flatten)]
    pub robust: Robust,

    /// Also report the brute-force boundary distance (2D models)
    #[arg(long)]
    pub oracle: bool,

    /// Grid spacing for --oracle
    #[arg(long, default_value_t = 0.001)]
    pub resolution: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct HyperrectArgs {
    /// Model file, or a built-in fixture name
    #[arg(long)]
    pub model: String,

    /// Comma-separated point
    #[arg(long)]
    pub point: String,

    #[command(flatten)]
    pub robust: Robust,

    /// Start from this radius instead of searching for one
    #[arg(long)]
    pub theta: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct QuantifyArgs {
    /// Model file or fixture name (needed unless --rect/--theta is given)
    #[arg(long)]
    pub model: Option<String>,

    /// Comma-separated point
    #[arg(long)]
    pub point: String,

    /// Mechanisms: family[:eps[:delta][:k]] for all --dims, or per dimension 1=pm:2,3=krr:2:100
    #[arg(long)]
    pub mech: String,

    /// Epsilon grid (comma separated); overrides the epsilons in --mech
    #[arg(long)]
    pub eps: Option<String>,

    /// Sensitive dimensions, 1-based (default: all)
    #[arg(long)]
    pub dims: Option<String>,

    #[command(flatten)]
    pub region: Region,

    #[command(flatten)]
    pub robust: Robust,

    #[command(flatten)]
    pub family: FamilyParams,

    /// One indicator over all sensitive dimensions
    #[arg(long)]
    pub joint_indicator: Option<f64>,

    /// Multiply by (1 - omega)(1 - tau); default on for --region radius, off otherwise
    #[arg(long)]
    pub slack: Option<bool>,
}

#[derive(Debug, Args, Serialize)]
pub struct SelectEpsArgs {
    /// Target rho in [0, 1)
    #[arg(long)]
    pub target: f64,

    /// Mechanism family
    #[arg(long, default_value = "laplace")]
    pub mech: String,

    #[command(flatten)]
    pub family: FamilyParams,

    /// Model file or fixture name (used when no --rect/--theta is given; without it --theta defaults to 0.3)
    #[arg(long)]
    pub model: Option<String>,

    /// Comma-separated point
    #[arg(long, default_value = "0.5")]
    pub point: String,

    /// Sensitive dimensions, 1-based (default: all)
    #[arg(long)]
    pub dims: Option<String>,

    #[command(flatten)]
    pub region: Region,

    #[command(flatten)]
    pub robust: Robust,

    /// Epsilon search range lo,hi
    #[arg(long, default_value = "0.01,20")]
    pub range: String,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Families to compare
    #[arg(long, default_value = "laplace,gaussian,pm,sw,krr,exp")]
    pub families: String,

    /// Epsilon grid
    #[arg(long, default_value = "0.5,1,2,4,8")]
    pub eps: String,

    /// Radius grid (ignored when --rect is given)
    #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5")]
    pub theta: String,

    /// Explicit box instead of the radius grid
    #[arg(long)]
    pub rect: Option<String>,

    /// Comma-separated point
    #[arg(long, default_value = "0.5")]
    pub point: String,

    /// Sensitive dimensions, 1-based (default: all)
    #[arg(long)]
    pub dims: Option<String>,

    #[command(flatten)]
    pub family: FamilyParams,
}

#[derive(Debug, Args, Serialize)]
pub struct EmpiricalArgs {
    /// Model file or fixture name
    #[arg(long)]
    pub model: String,

    /// Comma-separated point
    #[arg(long)]
    pub point: String,

    /// Mechanisms, as for quantify
    #[arg(long)]
    pub mech: String,

    /// Sensitive dimensions, 1-based (default: all)
    #[arg(long)]
    pub dims: Option<String>,

    #[command(flatten)]
    pub family: FamilyParams,

    /// One indicator over all sensitive dimensions
    #[arg(long)]
    pub joint_indicator: Option<f64>,

    /// Perturbed samples
    #[arg(long, default_value_t = 2000)]
    pub n: usize,

    /// Report zero timings so the output is reproducible
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// Model file or fixture name
    #[arg(long)]
    pub model: String,

    /// Comma-separated point
    #[arg(long)]
    pub point: String,

    /// Families to compare
    #[arg(long, default_value = "laplace,gaussian,pm,sw,krr,exp")]
    pub families: String,

    /// Epsilon grid
    #[arg(long, default_value = "1,2,4,8")]
    pub eps: String,

    /// Sensitive dimensions, 1-based (default: all)
    #[arg(long)]
    pub dims: Option<String>,

    #[command(flatten)]
    pub region: Region,

    #[command(flatten)]
    pub robust: Robust,

    #[command(flatten)]
    pub family: FamilyParams,

    /// Perturbed samples per cell
    #[arg(long, default_value_t = 2000)]
    pub n: usize,

    /// Timing repetitions (medians reported)
    #[arg(long, default_value_t = 10)]
    pub reps: usize,

    /// Skip timing so the output is reproducible
    #[arg(long)]
    pub no_timing: bool,

    /// Multiply rho by (1 - omega)(1 - tau)
    #[arg(long)]
    pub slack: bool,
}
