//! Command-line front end: `solve`, `optimize`, `check` and `report`.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 solver failure,
//! 3 optimizer did not converge, 4 at least one enabled check failed.

// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_check, cmd_optimize, cmd_report, cmd_solve};
pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_NONCONVERGED: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }

    /// Solver breakdowns map to exit code 2, everything else to 1.
    pub fn from_core(e: nsoc_core::Error) -> Self {
        use nsoc_core::Error as E;
        let code = match e {
            E::LinearSolver { .. } | E::NotPositiveDefinite { .. } | E::Newton(_) | E::DegenerateSequence => EXIT_SOLVER,
            _ => EXIT_CONFIG,
        };
        Self::new(code, e.to_string())
    }

    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        Self::config(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "nsoc", version, about = "Optimality-condition workbench for -Δy + max(0,y) = u")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed (overrides scan.seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// section.key=value, applied after the config file.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the state and adjoint equations for a control.
    Solve,
    /// Minimise the reduced objective by projected gradients.
    Optimize,
    /// Run the condition checks at a stationary point.
    Check,
    /// Merge the artifacts of earlier runs into one summary.
    Report,
}

impl Cli {
    pub fn config(&self) -> Result<RunConfig, CliError> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("scan.seed={seed}"));
        }
        let mut cfg = RunConfig::load(self.config.as_deref(), &overrides)?;
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        Ok(cfg)
    }
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Solve => cmd_solve(cfg),
        Command::Optimize => cmd_optimize(cfg),
        Command::Check => cmd_check(cfg),
        Command::Report => cmd_report(cfg),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Messages go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.config().and_then(|cfg| execute(cli.command, &cfg)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("nsoc: {e}");
            e.code
        }
    }
}
