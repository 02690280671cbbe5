use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Certify or falsify output contraction and output exponential stability
/// of ODE systems with outputs.
#[derive(Parser, Debug)]
#[command(name = "occtl", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate one initial state and dump the trajectory with its output
    Simulate(SimulateArgs),
    /// Jacobians of f and h at one point
    Jacobian(JacobianArgs),
    /// Output contraction over random initial-state pairs
    Contraction(CheckArgs),
    /// Partial contraction, including pairs with equal initial outputs
    Partial(CheckArgs),
    /// Exponential decay of the variational output
    Oes(CheckArgs),
    /// Exponential convergence of the output to an equilibrium value
    OesEq(OesEqArgs),
    /// Falsify Lyapunov sandwich and decay conditions by sampling
    Lyapunov(LyapunovArgs),
    /// Regenerate the data behind the worked examples
    Reproduce(ReproduceArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// system JSON file or built-in name
    #[arg(long)]
    pub system: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tf: f64,
    /// directory for report.json and CSV series
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// what goes to stdout
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug, Clone)]
pub struct Solver {
    /// rk45-adaptive or rk4-fixed
    #[arg(long, default_value = "rk45-adaptive")]
    pub method: String,
    #[arg(long, default_value_t = 1e-9)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    /// fixed step for rk4-fixed
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long)]
    pub max_step: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub solver: Solver,
    /// initial state, comma separated
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
}

#[derive(Args, Debug)]
pub struct JacobianArgs {
    /// system JSON file or built-in name
    #[arg(long)]
    pub system: String,
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub solver: Solver,
    /// number of sampled pairs or initial states
    #[arg(long, default_value_t = 50)]
    pub pairs: usize,
    /// sampling box, `lo:hi` per coordinate, comma separated; one interval is repeated
    #[arg(long = "box", default_value = "-5:5", allow_hyphen_values = true)]
    pub bounds: String,
    #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 401)]
    pub grid_points: usize,
}

#[derive(Args, Debug)]
pub struct OesEqArgs {
    #[command(flatten)]
    pub check: CheckArgs,
    /// output equilibrium, comma separated
    #[arg(long, allow_hyphen_values = true)]
    pub y_star: String,
    /// reference initial state for the fit scale
    #[arg(long, allow_hyphen_values = true)]
    pub x_ref: Option<String>,
}

#[derive(Args, Debug)]
pub struct LyapunovArgs {
    /// system JSON file or built-in name
    #[arg(long)]
    pub system: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// candidate V over x1..xn, xi1..xin, t
    #[arg(long = "V")]
    pub v: String,
    #[arg(long)]
    pub alpha1: f64,
    #[arg(long)]
    pub alpha2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha3: f64,
    /// decay rate in the time-varying condition
    #[arg(long, required_unless_present = "decay")]
    pub alpha4: Option<f64>,
    #[arg(long)]
    pub p: f64,
    /// check the time-invariant conditions with this decay rate instead
    #[arg(long, conflicts_with_all = ["alpha4", "alpha3"])]
    pub decay: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long = "box", default_value = "-10:10", allow_hyphen_values = true)]
    pub bounds: String,
    /// `lo:hi`
    #[arg(long, default_value = "0:6.283185307179586")]
    pub t_range: String,
    /// radii for the variation, comma separated
    #[arg(long, default_value = "0.1,1,10")]
    pub radii: String,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Fig1,
    Fig2,
    Remark1,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub name: Figure,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn parse_vector(src: &str) -> Result<Vec<f64>, String> {
    src.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("'{}' is not a number: {e}", s.trim())))
        .collect()
}

pub fn parse_interval(src: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = src
        .trim()
        .split_once(':')
        .ok_or_else(|| format!("interval '{}' must look like lo:hi", src.trim()))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("'{}' is not a number: {e}", s.trim()));
    Ok((num(lo)?, num(hi)?))
}

/// `lo:hi[,lo:hi...]`, broadcast when a single interval is given.
pub fn parse_box(src: &str, n: usize) -> Result<Vec<(f64, f64)>, String> {
    let parts = src.split(',').map(parse_interval).collect::<Result<Vec<_>, _>>()?;
    match parts.len() {
        1 => Ok(vec![parts[0]; n]),
        k if k == n => Ok(parts),
        k => Err(format!("box has {k} intervals, system has {n} states")),
    }
}
