//! `fjsp-stnu` command line: solve, encode, check, execute and sweep.
//!
//! Exit codes: 0 success, 1 expected negative result (infeasible, not
//! dynamically controllable, every sweep cell failed), 2 usage or I/O
//! error.

mod commands;
mod run;
mod settings;

use clap::{Parser, Subcommand};
use settings::Flags;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// Expected negative outcome; artifacts already written.
    Negative(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "fjsp-stnu", version, about = "Deadline-aware flexible job shop scheduling with STNU execution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an .fjs instance and write solution.json.
    Solve { instance: PathBuf },
    /// Encode a solved schedule as an STNU (network.stnu).
    BuildStnu {
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Check dynamic controllability of a network (verdict.json).
    CheckDc { network: PathBuf },
    /// Execute a network online, either one duration vector or Monte-Carlo.
    Execute {
        network: PathBuf,
        /// Comma-separated durations, one per contingent link.
        #[arg(long)]
        durations: Option<String>,
        /// Comma-separated per-job deadlines; defaults to the network's
        /// deadline arcs.
        #[arg(long)]
        deadlines: Option<String>,
    },
    /// Solve, encode, check and simulate in one run.
    Pipeline { instance: PathBuf },
    /// Parameter sweeps emitting per-figure CSV files.
    Sweep {
        #[command(subcommand)]
        kind: SweepKind,
    },
}

#[derive(Subcommand, Debug)]
enum SweepKind {
    /// Hard-mode feasibility and controllability over (alpha, delta).
    Slack { instance: PathBuf },
    /// Soft-mode weight grid with Monte-Carlo per cell.
    Weights { instance: PathBuf },
    /// One schedule evaluated across the alpha set.
    Robustness { instance: PathBuf },
    /// Pipeline stage timings across instances.
    Scaling {
        #[arg(required = true)]
        instances: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve { instance } => commands::solve(&cli.flags, &instance),
        Command::BuildStnu { instance, solution } => commands::build_stnu(&cli.flags, &instance, &solution),
        Command::CheckDc { network } => commands::check_dc(&cli.flags, &network),
        Command::Execute { network, durations, deadlines } => {
            commands::execute(&cli.flags, &network, durations.as_deref(), deadlines.as_deref())
        }
        Command::Pipeline { instance } => commands::pipeline(&cli.flags, &instance),
        Command::Sweep { kind } => match kind {
            SweepKind::Slack { instance } => commands::sweep_slack(&cli.flags, &instance),
            SweepKind::Weights { instance } => commands::sweep_weights(&cli.flags, &instance),
            SweepKind::Robustness { instance } => commands::sweep_robustness(&cli.flags, &instance),
            SweepKind::Scaling { instances } => commands::sweep_scaling(&cli.flags, &instances),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Negative(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
