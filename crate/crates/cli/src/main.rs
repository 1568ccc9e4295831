mod artifacts;
mod commands;
mod error;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::EXIT_USAGE;

#[derive(Parser)]
#[command(name = "pprec", version, about = "Privacy-preserving item-based top-N recommendation experiments")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a raw rating file, binarize it and write canonical pairs-tsv.
    Ingest(IngestArgs),
    /// Evaluate one k setting against the exact baseline.
    Run(RunArgs),
    /// Evaluate a list of k settings against the exact baseline.
    Sweep(SweepArgs),
    /// Write a seeded synthetic like dataset as pairs-tsv.
    Synth(SynthArgs),
}

#[derive(Args)]
pub struct IngestArgs {
    /// pairs-tsv, movielens-csv, lastfm-dat or jester-csv.
    #[arg(long)]
    pub format: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub subsample: SubsampleArgs,
}

#[derive(Args, Clone)]
pub struct SubsampleArgs {
    /// Keep a seeded random subset of this many users before binarizing.
    #[arg(long)]
    pub max_users: Option<usize>,
    #[arg(long)]
    pub sample_seed: Option<u64>,
    /// Keep only the most-rated items.
    #[arg(long)]
    pub max_items: Option<usize>,
}

#[derive(Args)]
pub struct ExperimentArgs {
    /// `key = value` file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input dataset.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Input format (default pairs-tsv).
    #[arg(long)]
    pub format: Option<String>,
    #[command(flatten)]
    pub subsample: SubsampleArgs,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Comma list of strategies: union-normalized, paper-literal, minhash.
    #[arg(long)]
    pub mode: Option<String>,
    /// Recommendation list length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Split seeds, `a..b` (inclusive) or a comma list.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Fraction of likes kept for training.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Acceptance probability shared by all users.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Per-user acceptance probabilities, one per line in dense user order.
    #[arg(long)]
    pub rho_file: Option<PathBuf>,
    #[arg(long)]
    pub max_hops: Option<u64>,
    /// Never forward the token to its current holder.
    #[arg(long)]
    pub exclude_self: bool,
    /// skip or abort.
    #[arg(long)]
    pub on_timeout: Option<String>,
    /// Comma list of AE thresholds for coverage columns.
    #[arg(long)]
    pub alphas: Option<String>,
    /// test (held-out likes) or all-rated.
    #[arg(long)]
    pub relevance: Option<String>,
    /// Do not pad short recommendation lists with zero-score items.
    #[arg(long)]
    pub no_pad: bool,
    /// Leave users without train likes out of precision averages.
    #[arg(long)]
    pub exclude_cold_start: bool,
    /// Timed builds per cell (median reported).
    #[arg(long)]
    pub timing_reps: Option<usize>,
    /// Write the round log of every (seed, k) as JSON lines.
    #[arg(long)]
    pub emit_roundlog: bool,
    /// Leave contributor ids out of emitted round logs.
    #[arg(long)]
    pub redact_roundlog: bool,
}

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// Rounds / hash functions as a fraction of the user count.
    #[arg(long)]
    pub k_frac: Option<f64>,
    /// Rounds / hash functions, absolute.
    #[arg(long)]
    pub k: Option<u64>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// Comma list of fractions of the user count (default 0.1,...,1.0).
    #[arg(long)]
    pub k_fracs: Option<String>,
    /// Comma list of absolute k values.
    #[arg(long)]
    pub ks: Option<String>,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub items: Option<usize>,
    #[arg(long)]
    pub genres: Option<usize>,
    #[arg(long)]
    pub mean_likes: Option<f64>,
    #[arg(long)]
    pub min_likes: Option<usize>,
    /// Popularity exponent.
    #[arg(long)]
    pub zipf: Option<f64>,
    /// Probability a like comes from a favorite genre.
    #[arg(long)]
    pub in_genre: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(error::EXIT_INTERNAL);
        }
    }
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Run(a) => commands::run(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Synth(a) => commands::synth(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
