//! Experiment driver for the `blockpca` streaming PCA library.
//!
//! Every subcommand writes a headed CSV to stdout (or `--out`) and a short
//! summary to stderr. Output depends only on the arguments, never on the
//! thread count.

pub mod commands;
pub mod experiment;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "blockpca",
    version,
    about = "Single-pass streaming PCA experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic recovery trials on the spiked model.
    Recover(RecoverArgs),
    /// Minimal sample count for a target success rate, per dimension.
    Scaling(ScalingArgs),
    /// Success fraction over a noise × sample-count grid.
    Phase(PhaseArgs),
    /// Top-k extraction from a bag-of-words corpus.
    Realdata(RealdataArgs),
    /// Analytic and concentration checks.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleMode {
    /// Bound-driven B and T from (p, sigma, lambda_k, eps).
    Theorem,
    /// T = ceil(ln p), B = floor(n / T).
    Empirical,
    /// Explicit --block-size and --blocks.
    Manual,
}

#[derive(Debug, Clone, Args)]
pub struct RecoverArgs {
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub p: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Comma-separated, descending, first entry 1. Defaults to k ones.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = ScheduleMode::Theorem)]
    pub schedule: ScheduleMode,
    /// Sample budget for the empirical schedule.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub block_size: Option<usize>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub c_b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_t: f64,
    /// Independent instances over one pass; the best is kept.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub instances: u64,
    /// Selection samples for --instances > 1. Defaults to B.
    #[arg(long)]
    pub eval_block: Option<usize>,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    pub p_list: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Success fraction that counts as recovered.
    #[arg(long, default_value_t = 0.5)]
    pub target: f64,
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// First grid point; later points grow by a factor 1.3.
    #[arg(long, default_value_t = 100)]
    pub n_start: usize,
    /// Largest n tried; rows reaching it are flagged saturated.
    #[arg(long, default_value_t = 2_000_000)]
    pub n_cap: usize,
    /// Skip the batch PCA column.
    #[arg(long)]
    pub no_batch: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub p: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.5,1,2")]
    pub sigma_list: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1000,3000,10000,30000,100000"
    )]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrientationArg {
    /// One sample per document (dimension = vocabulary size).
    Docs,
    /// One sample per word (dimension = document count).
    Words,
}

#[derive(Debug, Clone, Args)]
pub struct RealdataArgs {
    /// UCI docword file, plain or gzip.
    #[arg(long)]
    pub docword: PathBuf,
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, value_enum, default_value_t = OrientationArg::Docs)]
    pub orientation: OrientationArg,
    /// Scale each sample to unit norm.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip the batch PCA column.
    #[arg(long)]
    pub no_batch: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Selector {
    /// Deviation of block covariances from the population covariance.
    Concentration,
    /// Overlap of random starts with a fixed subspace.
    Init,
    /// Iterated one-step bound against its closed form.
    Recursion,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[arg(value_enum)]
    pub selector: Selector,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub p: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Smallest block size (concentration).
    #[arg(long, default_value_t = 500)]
    pub block_size: usize,
    /// Number of block sizes (concentration).
    #[arg(long, default_value_t = 3)]
    pub levels: u32,
    /// Growth of the block size between levels (concentration).
    #[arg(long, default_value_t = 2)]
    pub factor: usize,
    /// Blocks per size, or random starts (init).
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Largest iteration count (recursion).
    #[arg(long, default_value_t = 100)]
    pub max_tau: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Recover(a) => commands::recover(&a),
        Command::Scaling(a) => commands::scaling(&a),
        Command::Phase(a) => commands::phase(&a),
        Command::Realdata(a) => commands::realdata(&a),
        Command::Diagnose(a) => commands::diagnose(&a),
    }
}
