//! `semf1`: evaluate predictions, build similarity matrices, sweep
//! thresholds and run the synthetic studies.
//!
//! Exit codes are 0 on success, 2 for invalid input and 3 for internal
//! failures. Errors go to stderr as a single JSON line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "semf1", version, about = "Semantic F1 evaluation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score a prediction file.
    Eval(EvalArgs),
    /// Build a similarity matrix CSV.
    Simmat {
        #[command(subcommand)]
        kind: SimmatKind,
        /// Output file; stdout when omitted.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Binarize scores over a threshold grid and trace every metric.
    Sweep(SweepArgs),
    /// Run a synthetic study grid.
    Study(StudyArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Search {
    Auto,
    Brute,
    Kdtree,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// JSONL prediction file.
    pub predictions: PathBuf,
    /// Similarity matrix CSV, or `identity`.
    #[arg(long, default_value = "identity")]
    pub matrix: String,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Treat rows as lists of vectors and score in continuous space.
    #[arg(long)]
    pub continuous: bool,
    /// Minkowski exponent for continuous mode; `inf` for the max norm.
    #[arg(long, default_value_t = 2.0)]
    pub p_norm: f64,
    /// Distance scale in `1 / (1 + beta * d)`.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = Search::Auto)]
    pub search: Search,
}

#[derive(Subcommand, Debug)]
pub enum SimmatKind {
    /// `1 / (1 + beta * ||x_a - x_b||)` from an embeddings CSV.
    Euclidean {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Rescaled cosine similarity from an embeddings CSV.
    Cosine {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, default_value_t = 1)]
        power: u32,
    },
    /// Correlation matrix CSV mapped into [0, 1].
    Correlation {
        #[arg(long)]
        input: PathBuf,
    },
    /// Shortest-path similarity from an edge list.
    Hierarchy {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Labels evenly spaced on a circle.
    Ring {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Score CSV: label header, one row per example.
    #[arg(long)]
    pub scores: PathBuf,
    /// Gold JSONL; `pred` fields are ignored.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, default_value = "identity")]
    pub matrix: String,
    /// Comma-separated thresholds.
    #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Directory for `sweep.csv` and `indices.json`; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StudyArgs {
    /// Study identifier: A, B, C or D.
    pub study: String,
    /// TOML or JSON overrides of the default grid.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed. Falls back to the config, then `SEMF1_SEED`, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub examples_per_cell: Option<usize>,
    /// Also write every generated batch as JSONL.
    #[arg(long)]
    pub export_batches: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(args) => commands::eval(&args),
        Command::Simmat { kind, out } => commands::simmat(&kind, out.as_deref()),
        Command::Sweep(args) => commands::sweep(&args),
        Command::Study(args) => commands::study(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code)
        }
    }
}

impl From<semf1_core::Error> for CliError {
    fn from(e: semf1_core::Error) -> Self {
        CliError::from_core(e)
    }
}
