//! The `plsb` command-line tool.
//!
//! Every subcommand reads an optional TOML file (`--config`), lets flags override it,
//! validates the merged settings before doing any work, writes machine-readable CSV and
//! prints an aligned table to standard output.
//!
//! Exit codes: `0` success, `1` internal failure, `2` user or input error.

pub mod commands;
pub mod config;
pub mod table;

use std::ffi::OsString;
use std::fmt::Display;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use commands::{fit, generate, report, simulate, solve, sweep};
use config::ConfigFile;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn input(e: impl Display) -> Self {
        CliError::Input(e.to_string())
    }

    pub fn internal(e: impl Display) -> Self {
        CliError::Internal(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "plsb", version, about = "Probabilistic lookahead for strong branching")]
pub struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit gain distributions per series and screen them with the KS test.
    Fit(fit::FitArgs),
    /// Compare stopping rules on a Pandora gain pool over randomized trials.
    Simulate(simulate::SimulateArgs),
    /// Solve one MPS instance with the toy branch-and-bound solver.
    Solve(solve::SolveArgs),
    /// Run a mode × L × K grid over MPS instances or the toy corpus.
    Sweep(sweep::SweepArgs),
    /// Compare exact two-gain tree sizes with the single-gain approximation.
    Report(report::ReportArgs),
    /// Write synthetic gain pools or the toy MIP corpus.
    #[command(subcommand)]
    Generate(generate::GenerateCommand),
}

/// Parses `args` (program name first) and runs the command, returning the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run() -> i32 {
    run_with(
        std::env::args_os(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    )
}

fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Fit(args) => fit::run(&fit::FitPlan::resolve(args, config.fit)?, out),
        Command::Simulate(args) => {
            simulate::run(&simulate::SimulatePlan::resolve(args, config.simulate)?, out)
        }
        Command::Solve(args) => {
            solve::run(&solve::SolvePlan::resolve(args, config.solve, config.branching)?, out)
        }
        Command::Sweep(args) => {
            sweep::run(&sweep::SweepPlan::resolve(args, config.sweep, config.branching)?, out)
        }
        Command::Report(args) => report::run(&report::ReportPlan::resolve(args, config.report)?, out),
        Command::Generate(cmd) => generate::run(cmd, out),
    }
}
