//! `ssnqp`: solve, check, generate and brute-force dense convex QPs.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 non-convergence (or a
//! failed check).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "ssnqp",
    version,
    about = "Semi-smooth Newton solver for dense convex QPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProxArg {
    Zero,
    Recenter,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a problem file.
    Solve {
        file: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        sigma0: Option<f64>,
        #[arg(long = "sigma-shrink")]
        sigma_shrink: Option<f64>,
        #[arg(long = "max-outer")]
        max_outer: Option<usize>,
        #[arg(long = "max-inner")]
        max_inner: Option<usize>,
        #[arg(long, value_enum)]
        prox: Option<ProxArg>,
        /// Write the per-step convergence trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Start from the point stored in this solution file.
        #[arg(long = "warm-start")]
        warm_start: Option<PathBuf>,
        /// Emit a machine-readable result object.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate the KKT certificate of a candidate solution.
    Check {
        file: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Generate a random problem with a planted solution.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        q: usize,
        #[arg(long = "active-frac", default_value_t = 0.5)]
        active_frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100.0)]
        condition: f64,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Solve by active-set enumeration (q <= 16).
    Oracle {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            eprintln!("{}", Cli::command().render_usage());
            ExitCode::from(1)
        }
    }
}
