//! `polarize`: bounds, suprema and configuration searches for the
//! polarization product of `n` unit vectors in `R^n`.

mod commands;
mod document;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Output, ReportArgs, SearchArgs, VerifyArgs};
use document::Format;
use error::CliError;

#[derive(Parser)]
#[command(version, about, long_about = None)]
struct Cli {
    /// Directory for documents written without an explicit --output, and
    /// for failure dumps
    #[arg(long, global = true, env = "POLARIZE_OUT_DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the document here instead of standard output
    #[arg(short, long)]
    output: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Every bound, witness and (optionally) the supremum for one instance
    Report {
        /// Dimension of a generated instance
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instance file: `n` on the first line, then `n` rows
        #[arg(long, conflicts_with = "ortho")]
        input: Option<PathBuf>,
        /// Use the standard basis instead of a random instance
        #[arg(long)]
        ortho: bool,
        /// Estimate the supremum by multi-start ascent
        #[arg(long)]
        sup: bool,
        /// Random restarts for --sup (default 32 n)
        #[arg(long)]
        restarts: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check the bound properties over seeded random instances
    Verify {
        /// Dimension or inclusive range, e.g. `2..6`
        #[arg(long, value_parser = commands::parse_range)]
        n: std::vec::Vec<usize>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also require the second construction's witness to reach n^{-n/2}
        #[arg(long)]
        thm2_threshold: bool,
        /// Compare the optimizer with the grid oracle (n = 2, 3)
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Search configuration space for a small supremum
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV trace of improvements (iteration,value,gap,seed)
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Read back a saved report document and print its bounds
    Inspect {
        /// JSON report written by `report`
        path: PathBuf,
    },
    /// Monte Carlo estimate of the spherical log-average L(n)
    Lconst {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

fn output(out_dir: &Option<PathBuf>, args: OutputArgs) -> Output {
    Output {
        path: args.output,
        out_dir: out_dir.clone(),
        format: args.format,
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let dir = cli.out_dir;
    match cli.command {
        Command::Report {
            n,
            seed,
            input,
            ortho,
            sup,
            restarts,
            out,
        } => {
            let args = ReportArgs {
                n,
                seed,
                input,
                ortho,
                sup,
                restarts,
            };
            commands::report(&args, &output(&dir, out))?;
        }
        Command::Verify {
            n,
            count,
            seed,
            thm2_threshold,
            oracle,
            out,
        } => {
            let args = VerifyArgs {
                dims: n,
                count,
                seed,
                thm2_threshold,
                oracle,
            };
            let doc = commands::verify(&args, &output(&dir, out))?;
            if doc.failures > 0 {
                return Err(CliError::PropertyFailure { failures: doc.failures });
            }
        }
        Command::Search {
            n,
            budget,
            seed,
            trace,
            out,
        } => {
            let args = SearchArgs { n, budget, seed, trace };
            commands::search(&args, &output(&dir, out))?;
        }
        Command::Inspect { path } => commands::inspect(&path)?,
        Command::Lconst { n, samples, seed, out } => {
            commands::lconst(n, samples, seed, &output(&dir, out))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
