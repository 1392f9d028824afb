use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "ugat", version, about = "Multivariate UGAT count distributions")]
pub struct Cli {
    /// Emit machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,

    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Relative tolerance of the normalizing series.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,

    /// Term cap of the normalizing series.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub max_terms: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Probabilities and moments at given points.
    Eval(EvalArgs),
    /// Maximum-likelihood fit of a CSV count table.
    Fit(FitArgs),
    /// Fit and tabulate against the bundled reference rows.
    Compare(FitArgs),
    /// Draw a CSV sample.
    Sample(SampleArgs),
    /// Survival, hazard, MMRL and aging-class verdicts over a grid.
    Reliability(ReliabilityArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::Fit(_) => "fit",
            Command::Compare(_) => "compare",
            Command::Sample(_) => "sample",
            Command::Reliability(_) => "reliability",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ugat,
    Lerch,
    Hlz,
    Good,
    Hzeta,
    Zipf,
    Dpareto,
    Geom,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportArg {
    /// 0, 1, 2, ...
    N0,
    /// 1, 2, 3, ...
    N,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Ugat)]
    pub model: ModelKind,
    /// Comma-separated weights, e.g. 0.3,0.4.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Support of a one-dimensional model (defaults: geom n0, others n).
    #[arg(long, value_enum)]
    pub support: Option<SupportArg>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Evaluation point; comma-separated for multivariate models. Repeatable.
    #[arg(long = "x", required = true)]
    pub x: Vec<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FitArgs {
    /// CSV file with a header row.
    pub csv: PathBuf,
    /// Hold s fixed at this value.
    #[arg(long, conflicts_with_all = ["s_grid", "estimate_s"])]
    pub s: Option<f64>,
    /// Exponent grid searched when s is not estimated.
    #[arg(long, conflicts_with = "estimate_s", default_value = "0.5,1,2,3,5,8")]
    pub s_grid: String,
    /// Estimate s jointly with alpha and beta.
    #[arg(long)]
    pub estimate_s: bool,
    #[arg(long, default_value_t = 8)]
    pub multistart: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Gradient infinity-norm threshold.
    #[arg(long, default_value_t = 1e-6)]
    pub gtol: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReliabilityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Grid is the box [0, grid_max]^r unless points are given.
    #[arg(long, default_value_t = 3)]
    pub grid_max: u64,
    /// Explicit grid point; repeatable.
    #[arg(long = "point")]
    pub points: Vec<String>,
    #[arg(long, default_value_t = ugat::reliability::DEFAULT_GRID_CAP)]
    pub grid_cap: usize,
}
