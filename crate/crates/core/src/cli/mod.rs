//! Batch command-line front end.
//!
//! Exit codes: 0 success, 1 I/O, 2 usage, 3 rational capacity exceeded,
//! 4 a cross-check or schema validation failed.

mod commands;
mod record;

pub use commands::{cmd_asymptote, cmd_exact, cmd_series, cmd_simulate, cmd_sweep};
pub use record::{Cell, Format, OutputRecord, SchemaError, SCHEMA_VERSION};

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::model::Lambda;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("cross-check failed: {0}")]
    CrossCheck(String),
    #[error("schema: {0}")]
    Schema(#[from] SchemaError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::CrossCheck(_) | CliError::Schema(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    Rational,
    Float,
}

#[derive(Debug, Parser)]
#[command(
    name = "treewalk",
    version,
    about = "Return probabilities, generating functions and spectral radius of biased walks on regular trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact p^(n) and f^(n) by dynamic programming, cross-checked against
    /// the Catalan formula and the renewal convolution
    Exact(ExactArgs),
    /// Spectral radius and return probability over a lambda grid
    Sweep(SweepArgs),
    /// Exact values against their leading asymptotics
    Asymptote(AsymptoteArgs),
    /// Monte Carlo estimates with exact references and z-scores
    Simulate(SimulateArgs),
    /// Power-series coefficients of U and G
    Series(SeriesArgs),
    /// Check that a previously emitted table parses and satisfies its schema
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock runtime in the metadata (makes output non-reproducible)
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub d: u32,
    /// Bias parameter: p/q, a decimal, or a float literal
    #[arg(long)]
    pub lambda: Lambda,
    #[arg(long = "n-max")]
    pub n_max: usize,
    #[arg(long, value_enum, default_value = "rational")]
    pub precision: Precision,
    /// Corrupt p_exact at this step before the cross-checks run
    #[arg(long, hide = true)]
    pub inject_fault: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub d: u32,
    #[arg(long = "lambda-min")]
    pub lambda_min: Lambda,
    #[arg(long = "lambda-max")]
    pub lambda_max: Lambda,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "float")]
    pub precision: Precision,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AsymptoteArgs {
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub lambda: Lambda,
    /// Comma-separated half step counts n (rows compare p^(2n), f^(2n))
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    #[arg(long, value_enum, default_value = "float")]
    pub precision: Precision,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub lambda: Lambda,
    #[arg(long, default_value_t = 1_000_000)]
    pub paths: u64,
    #[arg(long = "max-steps", default_value_t = 10_000)]
    pub max_steps: u64,
    /// Master seed; a random one is drawn and echoed when omitted
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report first-return and step-return rows for even steps up to this
    #[arg(long = "report-steps", default_value_t = 10)]
    pub report_steps: u64,
    #[arg(long, value_enum, default_value = "float")]
    pub precision: Precision,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SeriesArgs {
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub lambda: Lambda,
    #[arg(long)]
    pub order: usize,
    #[arg(long, value_enum, default_value = "rational")]
    pub precision: Precision,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Table to check, in either format
    #[arg(long)]
    pub input: PathBuf,
}

fn emit(mut record: OutputRecord, output: &OutputArgs, started: Instant) -> Result<(), CliError> {
    if output.timing {
        record.meta("runtime_ms", started.elapsed().as_millis());
    }
    record.validate()?;
    let text = record.emit(output.format);
    match &output.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    match &cli.command {
        Command::Exact(a) => emit(cmd_exact(a)?, &a.output, started),
        Command::Sweep(a) => emit(cmd_sweep(a)?, &a.output, started),
        Command::Asymptote(a) => emit(cmd_asymptote(a)?, &a.output, started),
        Command::Simulate(a) => emit(cmd_simulate(a)?, &a.output, started),
        Command::Series(a) => emit(cmd_series(a)?, &a.output, started),
        Command::Validate(a) => {
            let text = std::fs::read_to_string(&a.input)?;
            let record = OutputRecord::parse(&text)?;
            println!(
                "ok: {} table with {} rows",
                record.command,
                record.rows.len()
            );
            Ok(())
        }
    }
}
