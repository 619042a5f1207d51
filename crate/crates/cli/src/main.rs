//! Command-line surface for the infomax patch-learning pipeline.
//!
//! One command per process; every artifact-producing run writes a manifest
//! with the resolved configuration, input digests and stage timings, and all
//! artifacts are written atomically. Exit codes: 0 success, 2 usage error,
//! 3 data error, 4 numerical error.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::FileConfig;

/// Errors at the command level; each class maps to a stable exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config keys or values, refused configurations.
    Usage(String),
    /// Errors from the library: data problems or numerical failures.
    App(infomax::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{}", msg),
            CliError::App(e) => write!(f, "{}", e),
        }
    }
}

impl From<infomax::Error> for CliError {
    fn from(e: infomax::Error) -> Self {
        CliError::App(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::App(e) if e.is_numerical() => 4,
            CliError::App(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "infomax", version, about = "Unsupervised infomax filter learning on image patches")]
struct Cli {
    /// Flat key=value config file; flags override file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker thread cap for parallel evaluation (default: INFOMAX_THREADS
    /// env var, then all cores). Results are identical for any value.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample random square patches from images into a matrix file.
    Sample(SampleArgs),
    /// Whiten a patch matrix and train a filter bank.
    Train(TrainArgs),
    /// Compute coefficient and conditional entropy for a checkpoint.
    Metrics(MetricsArgs),
    /// Export basis and filter dictionaries as PGM grids and raw matrices.
    Export(ExportArgs),
    /// Denoise an image with filters trained on a clean image.
    Denoise(DenoiseArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgChoice {
    /// Pick alg1 when the bank is square (K1 = K0), alg2 otherwise.
    Auto,
    /// Square banks: orthonormal phase, then relative-gradient refinement.
    Alg1,
    /// Rectangular banks: determinant surrogate objective.
    Alg2,
    /// Per-sample exact objective; refused for K1·M > 10^6.
    Exact,
}

#[derive(Args)]
pub struct SampleArgs {
    /// PGM images to sample from.
    #[arg(long, value_name = "FILE", num_args = 1..)]
    images: Vec<PathBuf>,
    /// IDX image archive to sample from.
    #[arg(long, value_name = "FILE")]
    idx: Option<PathBuf>,
    /// Square patch edge length in pixels.
    #[arg(long, value_name = "W")]
    patch_width: Option<usize>,
    /// Number of patches to draw (uniform over image and position).
    #[arg(long, value_name = "M")]
    count: Option<usize>,
    /// Sampler seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Output patch matrix file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Input patch matrix file.
    #[arg(long, value_name = "FILE")]
    patches: PathBuf,
    /// Number of output units K1 (default 144).
    #[arg(long, value_name = "K1")]
    k1: Option<usize>,
    /// Whitening energy threshold selecting K0 (default 1.0).
    #[arg(long, value_name = "EPS")]
    epsilon: Option<f64>,
    /// Training epochs t_max (default 300).
    #[arg(long, value_name = "T")]
    epochs: Option<usize>,
    /// Last epoch of the orthonormal phase (default 50).
    #[arg(long, value_name = "T0")]
    t0: Option<usize>,
    /// Initial step factor (default 0.4).
    #[arg(long, value_name = "V1")]
    v1: Option<f64>,
    /// Backtracking shrink factor (default 0.8).
    #[arg(long, value_name = "TAU")]
    tau: Option<f64>,
    /// Objective selection (default auto).
    #[arg(long, value_enum, value_name = "ALG")]
    alg: Option<AlgChoice>,
    /// Initialization seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Emit a metrics CSV row every N epochs (bare flag: every 10).
    #[arg(long, value_name = "N", num_args = 0..=1, default_missing_value = "10")]
    metrics_every: Option<usize>,
    /// Population size N for conditional entropy rows (default 1000000).
    #[arg(long, value_name = "N")]
    n: Option<u64>,
    /// Output directory (default: current directory).
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
pub struct MetricsArgs {
    /// Trained checkpoint file.
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Whitening model file from the same run.
    #[arg(long, value_name = "FILE")]
    whitening: PathBuf,
    /// Patch matrix to evaluate on.
    #[arg(long, value_name = "FILE")]
    patches: PathBuf,
    /// Population size N for conditional entropy (default 1000000).
    #[arg(long, value_name = "N")]
    n: Option<u64>,
    /// Output CSV file.
    #[arg(long, value_name = "FILE", default_value = "metrics.csv")]
    out: PathBuf,
}

#[derive(Args)]
pub struct ExportArgs {
    /// Trained checkpoint file.
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Whitening model file from the same run.
    #[arg(long, value_name = "FILE")]
    whitening: PathBuf,
    /// Output directory (default: current directory).
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
pub struct DenoiseArgs {
    /// Clean training image (PGM).
    #[arg(long, value_name = "FILE")]
    clean: PathBuf,
    /// Noisy image to denoise (PGM).
    #[arg(long, value_name = "FILE")]
    noisy: PathBuf,
    /// Square patch edge length in pixels.
    #[arg(long, value_name = "W")]
    patch_width: Option<usize>,
    /// Whitening energy threshold; components below it are discarded.
    #[arg(long, value_name = "EPS")]
    epsilon: Option<f64>,
    /// Training epochs t_max (default 300).
    #[arg(long, value_name = "T")]
    epochs: Option<usize>,
    /// Last epoch of the orthonormal phase (default 50).
    #[arg(long, value_name = "T0")]
    t0: Option<usize>,
    /// Initial step factor (default 0.4).
    #[arg(long, value_name = "V1")]
    v1: Option<f64>,
    /// Backtracking shrink factor (default 0.8).
    #[arg(long, value_name = "TAU")]
    tau: Option<f64>,
    /// Objective selection (default auto; the bank is square).
    #[arg(long, value_enum, value_name = "ALG")]
    alg: Option<AlgChoice>,
    /// Initialization seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Output denoised image (PGM).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

fn init_threads(flag: Option<usize>, file: &FileConfig) -> CliResult<()> {
    let from_env = || {
        std::env::var("INFOMAX_THREADS")
            .ok()
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    CliError::Usage(format!("INFOMAX_THREADS must be an integer, got {:?}", v))
                })
            })
            .transpose()
    };
    let n = match flag.or(file.usize("threads")) {
        Some(n) => Some(n),
        None => from_env()?,
    };
    let Some(n) = n else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Usage("threads must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {} threads: {}", n, e)))
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    init_threads(cli.threads, &file)?;
    match cli.command {
        Command::Sample(args) => commands::sample::run(args, &file),
        Command::Train(args) => commands::train::run(args, &file),
        Command::Metrics(args) => commands::metrics::run(args, &file),
        Command::Export(args) => commands::export::run(args, &file),
        Command::Denoise(args) => commands::denoise::run(args, &file),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code())
        }
    }
}
