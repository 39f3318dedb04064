//! Command-line front end for `vocomp`.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    /// Wrap a library error with the pipeline stage it came from.
    pub fn stage(stage: &str, err: vocomp::Error) -> Self {
        let code = match err {
            vocomp::Error::Config(_) | vocomp::Error::UnknownToken { .. } => EXIT_USAGE,
            _ => EXIT_INTERNAL,
        };
        Self {
            code,
            message: format!("{stage}: {err}"),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "vocomp",
    version,
    about = "Compositional and non-compositional verb-object phrase embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", short = 's', global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Random seed for training, splitting and bootstrap.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress the resolved-config echo on stderr.
    #[arg(long, short = 'q', global = true)]
    pub quiet: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TrainArgs {
    /// Tuple files (`S\tV\tO` or `S\tV\tO\tP\tN` lines).
    #[arg(long, num_args = 1.., value_name = "FILE")]
    pub tuples: Vec<PathBuf>,
    /// Output model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output training log (default: `<model>.log`).
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Hold alpha constant: 0.5 for the fixed-mix baseline, 1.0 for the
    /// purely compositional one.
    #[arg(long, value_name = "ALPHA")]
    pub fix_alpha: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// `comp` (rating dataset) or `disambig` (similarity judgments).
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// `averaged`, `per-rating` or `both` (disambig only).
    #[arg(long)]
    pub mode: Option<String>,
    /// Bootstrap replicates; 0 disables the interval.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Per-item score dump for `ensemble`.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct EnsembleArgs {
    /// Two or more dumps written by `eval --dump`.
    #[arg(required = true, num_args = 2.., value_name = "DUMP")]
    pub dumps: Vec<PathBuf>,
    #[arg(long)]
    pub task: Option<String>,
    /// Gold dataset the averaged scores are evaluated against.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Write the averaged scores as a dump.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Phrases as `"verb object"`.
    #[arg(value_name = "PHRASE")]
    pub phrases: Vec<String>,
    /// File with one `verb object` phrase per line.
    #[arg(long, value_name = "FILE")]
    pub phrase_file: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct NeighborsArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// `"verb object"` or `"subject verb object"`.
    #[arg(value_name = "QUERY")]
    pub query: String,
    #[arg(short, long)]
    pub k: Option<usize>,
    /// Phrases to search instead of the model's candidates.
    #[arg(long, value_name = "FILE")]
    pub pool: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ExportArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Ingest, split, select candidates, train and save a model.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: TrainArgs,
        /// Per-epoch alpha trajectory output.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Train every learning-rate and L2 cell and keep the best dev score.
    Grid {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: TrainArgs,
        /// Per-cell results table.
        #[arg(long)]
        grid_report: Option<PathBuf>,
    },
    /// Correlate a model with human judgments.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: EvalArgs,
    },
    /// Average per-item dumps and evaluate the result.
    Ensemble {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: EnsembleArgs,
    },
    /// Print the compositionality score of phrases.
    Score {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: ScoreArgs,
    },
    /// Print the nearest phrases to a query.
    Neighbors {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: NeighborsArgs,
    },
    /// Dump model parameters as text.
    Export {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: ExportArgs,
    },
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
