use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exitlab::decomp::Variant;
use exitlab::laplace::Method;
use exitlab::levy::{ModelParams, SubordinatorSpec};
use exitlab::mc::Mode;
use exitlab::Grid;

#[derive(Debug, Parser)]
#[command(name = "exitlab", version, about = "First-exit-time distributions for subordinator-driven log-return models")]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write CSV files and a manifest here instead of printing to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exit-time density of a subordinator at a level.
    Density(DensityArgs),
    /// Numerical inversion of the exit-density transform in the level variable.
    Invert(InvertArgs),
    /// Decomposition integral of the exit times.
    Decompose(DecomposeArgs),
    /// Monte Carlo paths of the log-return model.
    Simulate(SimulateArgs),
    /// Rolling exit times and a gamma fit on a daily close series.
    Empirical(EmpiricalArgs),
    /// Evaluate one special function.
    #[command(hide = true)]
    SpecfunEval(SpecfunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DensityPath {
    Closed,
    Numeric,
    Both,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// e.g. `gamma-bdlp:nu=1,alpha=1`
    #[arg(long)]
    pub spec: SubordinatorSpec,
    #[arg(long)]
    pub level: f64,
    /// `start:step:n` in elapsed time.
    #[arg(long)]
    pub grid: Grid,
    #[arg(long, value_enum, default_value_t = DensityPath::Closed)]
    pub path: DensityPath,
    /// Evaluate the closed forms literally, known slips included.
    #[arg(long)]
    pub as_printed: bool,
    #[arg(long, default_value = "talbot")]
    pub method: Method,
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[arg(long)]
    pub psi: SubordinatorSpec,
    /// Elapsed time at which the density is taken.
    #[arg(long)]
    pub x: f64,
    /// `start:step:n` in the level variable.
    #[arg(long)]
    pub grid: Grid,
    #[arg(long, default_value = "talbot")]
    pub method: Method,
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long, default_value = "basic")]
    pub variant: Variant,
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub spec: SubordinatorSpec,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 5.0)]
    pub time_box: f64,
    #[arg(long, default_value_t = 10.0)]
    pub eps_window: f64,
    /// Panel budget of the outermost integral.
    #[arg(long, default_value_t = 200)]
    pub max_panels: usize,
    /// Also run the Monte Carlo integration check with this many samples.
    #[arg(long)]
    pub mc_check: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `mu=..,sigma=..,rho=..,lambda=..,r=..`; omitted keys keep defaults.
    #[arg(long, default_value = "")]
    pub model: ModelParams,
    #[arg(long)]
    pub spec: SubordinatorSpec,
    #[arg(long)]
    pub paths: usize,
    #[arg(long)]
    pub dt: f64,
    #[arg(long)]
    pub horizon: f64,
    /// Record first exits past this level instead of path summaries.
    #[arg(long)]
    pub exit_level: Option<f64>,
    #[arg(long, default_value = "up")]
    pub mode: Mode,
}

#[derive(Debug, Args)]
pub struct EmpiricalArgs {
    /// `date,close` CSV.
    #[arg(long)]
    pub prices: PathBuf,
    /// Exit threshold in log-return units; repeat for several.
    #[arg(long, required = true)]
    pub threshold: Vec<f64>,
    #[arg(long, default_value = "up")]
    pub mode: Mode,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long)]
    pub estimate_gamma: bool,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct SpecfunArgs {
    #[arg(long = "fn")]
    pub function: String,
    /// Comma-separated arguments.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub args: String,
}
