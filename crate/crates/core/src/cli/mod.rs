//! Command line front end.
//!
//! Exit codes: 0 success, 1 I/O, run or validation failure, 2 configuration
//! error, 3 time step underflow, 4 initial datum cannot meet `ε₀`,
//! 5 Newton or refinement safety valve exhausted.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use commands::{compare, run_to_dir, sweep, validate, OracleChoice};
use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("initial datum: {0}")]
    InfeasibleInitialDatum(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::InfeasibleInitialDatum(_) => 4,
            CliError::Validation(_) | CliError::Run(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "parabolic-adapt", version, about = "Adaptive Newton-Galerkin solver for semilinear parabolic problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one configured problem.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Overrides `output.directory`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve for several ε, one directory each.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// Comma separated list, e.g. `1e-1,1e-2`.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        eps: Vec<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-run a result directory and measure its true error.
    Compare {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum, default_value_t = OracleKind::Exact)]
        oracle: OracleKind,
        /// Pointwise truncation bound of the Fourier oracle.
        #[arg(long, default_value_t = 1e-8)]
        fourier_tail: f64,
        #[arg(long, default_value_t = 1024)]
        reference_elements: usize,
        #[arg(long, default_value_t = 4096)]
        reference_steps: usize,
    },
    /// Re-check the step certificates of a result directory from its files.
    Validate {
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Exact,
    Fourier,
    Reference,
    #[value(name = "self")]
    SelfRun,
}

fn load(config: &Path, output: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(dir) = output {
        cfg.output.directory = dir;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, output } => {
            let cfg = load(&config, output)?;
            let report = run_to_dir(&cfg, &cfg.output.directory, None)?;
            if let Some(detail) = &report.outcome.detail {
                eprintln!("stopped: {detail}");
            }
            println!(
                "{:?}: t = {}, {} steps, sqrt(E) = {:.6e}, eps_T = {:.6e}",
                report.outcome.termination,
                report.outcome.time,
                report.outcome.records.len(),
                report.outcome.ledger.sqrt_bound(),
                report.outcome.tolerances.total()
            );
            Ok(report.exit_code())
        }
        Command::Sweep { config, eps, output } => {
            let cfg = load(&config, output)?;
            let report = sweep(&cfg, &eps, &cfg.output.directory)?;
            for (eps, avg) in report.averaged_indices() {
                match avg {
                    Some(v) => println!("eps = {eps:e}: time-averaged efficiency index {v:.4}"),
                    None => println!("eps = {eps:e}: no efficiency index"),
                }
            }
            Ok(report.exit_code())
        }
        Command::Compare {
            run,
            oracle,
            fourier_tail,
            reference_elements,
            reference_steps,
        } => {
            let choice = match oracle {
                OracleKind::Exact => OracleChoice::Exact,
                OracleKind::Fourier => OracleChoice::Fourier { tail: fourier_tail },
                OracleKind::Reference => OracleChoice::Reference {
                    elements: reference_elements,
                    steps: reference_steps,
                },
                OracleKind::SelfRun => OracleChoice::SelfRun,
            };
            let rows = compare(&run, choice)?;
            let defined = rows.iter().filter(|r| r.index.is_some()).count();
            println!("{} steps, {defined} with a defined efficiency index", rows.len());
            Ok(0)
        }
        Command::Validate { run } => {
            let v = validate(&run)?;
            println!(
                "{} steps certified (worst ratio {:.6}), sqrt(E) = {:.6e}, eps_T = {:.6e}{}",
                v.steps,
                v.worst_ratio,
                v.bound_sqrt,
                v.total_tolerance,
                if v.complete { "" } else { " (incomplete run)" }
            );
            Ok(0)
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
