#![allow(clippy::result_large_err)]

mod cli;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cli::document::Kind;
use cli::output::Format;
use cli::{ConvertOptions, Destination, GenKind, Method, SplitOutputs};

#[derive(Parser)]
#[command(name = "deskrand", version, about = "Exact finite checks for martingales, Schnorr tests and integral tests")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Store the output in this workspace directory and record it in its manifest
    #[arg(long)]
    workspace: Option<PathBuf>,
}

impl Output {
    fn destination(self) -> Destination {
        Destination { out: self.out, workspace: self.workspace }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic fixture from a seed
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Validate a document, or every document listed in a workspace manifest
    Check { path: PathBuf },
    /// Convert a document to another kind
    Convert {
        input: PathBuf,
        #[arg(long, value_enum)]
        to: Kind,
        /// How an integral test becomes a Schnorr test
        #[arg(long, value_enum, default_value_t = Method::Keylemma)]
        method: Method,
        /// Layering horizon (defaults to the saturation level)
        #[arg(long)]
        horizon: Option<usize>,
        /// Levels emitted from a martingale
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Build and verify the layering plan of a layered function
    Keylemma {
        input: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Bet a martingale against a bit source
    Run {
        input: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long, default_value_t = 16)]
        steps: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Split a martingale on interleaved bits into its two halves
    Split {
        input: PathBuf,
        #[arg(long)]
        oracle: String,
        /// Length of each half (defaults to half the martingale depth)
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        even_out: Option<PathBuf>,
        #[arg(long)]
        odd_out: Option<PathBuf>,
    },
    /// Evaluate a layered function at a bit source through its layering plan
    Evaluate {
        input: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long, default_value_t = 8)]
        budget: usize,
    },
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let format = args.format;
    let result = match args.command {
        Command::Gen { kind, seed, depth, levels, output } => cli::cmd_gen(kind, seed, depth, levels, &output.destination()),
        Command::Check { path } => cli::cmd_check(&path, format),
        Command::Convert { input, to, method, horizon, levels, output } => {
            cli::cmd_convert(&input, &ConvertOptions { to, method, horizon, levels }, &output.destination())
        }
        Command::Keylemma { input, horizon, output } => cli::cmd_keylemma(&input, horizon, format, &output.destination()),
        Command::Run { input, source, steps, output } => cli::cmd_run(&input, &source, steps, format, &output.destination()),
        Command::Split { input, oracle, depth, even_out, odd_out } => {
            cli::cmd_split(&input, &oracle, depth, format, &SplitOutputs { even_out, odd_out })
        }
        Command::Evaluate { input, source, budget } => cli::cmd_evaluate(&input, &source, budget, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("deskrand: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
