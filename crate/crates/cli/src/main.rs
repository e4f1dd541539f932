use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] lcn_core::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "lcn", version, about = "Latent channel network and BKN graph models")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to an edge list.
    Fit(FitArgs),
    /// Score node pairs with a fitted model.
    Predict(PredictArgs),
    /// Run the repeated masked-holdout experiment over a channel sweep.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic graph and its true parameters.
    Simulate(SimulateArgs),
    /// Channel sizes, usage and connection counts of a fitted matrix.
    Stats(StatsArgs),
    /// Order a fitted matrix by node labels and export a graymap.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Directory for all output files; created if missing.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// key=value file of flag defaults; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Lcn,
    Bkn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Lcn,
    Bkn,
    Both,
}

#[derive(Debug, Args)]
pub struct FitKnobs {
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub skip_tol: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub knobs: FitKnobs,
    /// Edge list: one `i j` pair per line, `#` comments allowed.
    #[arg(long)]
    pub graph: PathBuf,
    /// Node count when it exceeds the largest id in the edge list.
    #[arg(long)]
    pub num_nodes: Option<usize>,
    /// Pairs to hide from fitting, one `i j` per line.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelArg::Lcn)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 8)]
    pub channels: usize,
    /// Warm-start matrix (TSV).
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Write the per-iteration log-likelihood to llk_trace.csv.
    #[arg(long)]
    pub trace_llk: bool,
    /// Use the direct O(N^2 K^2) LCN update instead of the cached one.
    #[arg(long)]
    pub naive: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: Common,
    /// Fitted parameter matrix (TSV).
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::Lcn)]
    pub model: ModelArg,
    /// Pairs to score: `i j` or `i j status` per line. With a status on
    /// every line the AUC is reported as well.
    #[arg(long)]
    pub pairs: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Sbm,
    Lcn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SparsityArg {
    Sparse,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Skewed,
    Uniform,
}

#[derive(Debug, Args)]
pub struct SbmFlags {
    #[arg(long, default_value_t = 8)]
    pub blocks: usize,
    #[arg(long, default_value_t = 32)]
    pub block_size: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.02)]
    pub p_out: f64,
}

#[derive(Debug, Args)]
pub struct LcnFlags {
    #[arg(long, default_value_t = 1000)]
    pub nodes: usize,
    #[arg(long, default_value_t = 16)]
    pub true_channels: usize,
    #[arg(long, value_enum, default_value_t = SparsityArg::Sparse)]
    pub sparsity: SparsityArg,
    #[arg(long, value_enum, default_value_t = ProfileArg::Skewed)]
    pub profile: ProfileArg,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub knobs: FitKnobs,
    /// Observed graph; without it every repetition draws from --generator.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub num_nodes: Option<usize>,
    #[arg(long, value_enum, default_value_t = Generator::Sbm)]
    pub generator: Generator,
    #[command(flatten)]
    pub sbm: SbmFlags,
    #[command(flatten)]
    pub lcn: LcnFlags,
    #[arg(long, value_enum, default_value_t = ModelChoice::Both)]
    pub model: ModelChoice,
    /// Channel counts to sweep, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
    pub channels: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 500)]
    pub holdout_edges: usize,
    #[arg(long, default_value_t = 500)]
    pub holdout_nonedges: usize,
    #[arg(long, default_value_t = 500)]
    pub in_sample_edges: usize,
    #[arg(long, default_value_t = 500)]
    pub in_sample_nonedges: usize,
    /// Also report mean squared error against the generator's probabilities.
    #[arg(long)]
    pub mse: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(value_enum)]
    pub kind: Generator,
    #[command(flatten)]
    pub sbm: SbmFlags,
    #[command(flatten)]
    pub lcn: LcnFlags,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub params: PathBuf,
    /// With an edge list, also write expected connections per channel.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// A channel counts as used when its entry exceeds this.
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub params: PathBuf,
    /// Node labels: `i label` per line.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
}

fn run(args: Vec<OsString>) -> Result<(), CliError> {
    let args = config::expand_args(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => return Err(CliError::Usage(e.to_string())),
        Err(e) => {
            // --help and --version
            print!("{e}");
            return Ok(());
        }
    };
    match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Stats(a) => commands::stats(&a),
        Command::Heatmap(a) => commands::heatmap(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprint!("{msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
