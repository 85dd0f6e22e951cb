//! Batch driver behind the `conewave` binary.
//!
//! Exit codes: 0 success, 2 invalid input or a failed precondition, 3 an
//! inconclusive verdict, 4 a numerical failure. Errors are also printed to
//! stderr as one JSON object.

mod commands;
pub mod report;
pub mod scenario;
mod selftest;

pub use report::{RunOutput, Status, REPORT_FILE, SIDECAR_FILE};
pub use scenario::{Experiment, Scenario};

use crate::normal_ops::NormalOpsError;
use crate::norms::NormsError;
use crate::phase_flow::FlowError;
use crate::radial_solver::RadialError;
use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::path::PathBuf;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_FAILURE: i32 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("operator not admissible: {0}")]
    NotAdmissible(String),
    #[error("{0}")]
    Solver(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::NotAdmissible(_) => EXIT_VALIDATION,
            CliError::Solver(_) | CliError::Io(_) => EXIT_FAILURE,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::NotAdmissible(_) => "not_admissible",
            CliError::Solver(_) => "solver",
            CliError::Io(_) => "io",
        }
    }
}

impl From<NormalOpsError> for CliError {
    fn from(e: NormalOpsError) -> Self {
        match e {
            NormalOpsError::MatchRadiusTooSmall { .. } => CliError::Solver(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::InvalidDomain(_) | FlowError::InvalidMetric(_) | FlowError::TimeFn(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<RadialError> for CliError {
    fn from(e: RadialError) -> Self {
        match e {
            RadialError::BlowUp { .. }
            | RadialError::FitDegenerate(_)
            | RadialError::FitPrecondition(_)
            | RadialError::Format(_) => CliError::Solver(e.to_string()),
            RadialError::NotAdmissible(m) => CliError::NotAdmissible(m),
            RadialError::Operator(e) => e.into(),
            RadialError::Flow(e) => e.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<NormsError> for CliError {
    fn from(e: NormsError) -> Self {
        CliError::Solver(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "conewave", version, about = "Wave propagation near curves of cone points")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory.
    #[arg(long, global = true, default_value = "conewave-out")]
    pub out: PathBuf,
    /// Run `solve` without the spectral admissibility gate.
    #[arg(long, global = true)]
    pub force: bool,
    /// Seed for randomized sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weight window, indicial roots, thresholds, orders and the spectral scan.
    Analyze { config: PathBuf },
    /// Null-geodesic fan, refocusing witnesses and the photon orbit.
    Flow { config: PathBuf },
    /// Spectral admissibility scan with the per-frequency table.
    Modes { config: PathBuf },
    /// Time-domain solve with norms, b-regularity and exponent fits.
    Solve { config: PathBuf },
    /// Invariant checks of every module.
    Selftest,
    /// Wronskian and recurrence checks of the Bessel and Hankel functions.
    SpecfunSelftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze { .. } => "analyze",
            Command::Flow { .. } => "flow",
            Command::Modes { .. } => "modes",
            Command::Solve { .. } => "solve",
            Command::Selftest => "selftest",
            Command::SpecfunSelftest => "specfun-selftest",
        }
    }
}

/// Runs the command and returns the finished, not yet written, output.
pub fn execute(cli: &Cli) -> Result<RunOutput, CliError> {
    let load = |p: &PathBuf| Scenario::load(p);
    match &cli.command {
        Command::Analyze { config } => commands::analyze(&load(config)?, cli.seed),
        Command::Flow { config } => commands::flow(&load(config)?, cli.seed),
        Command::Modes { config } => commands::modes(&load(config)?, cli.seed),
        Command::Solve { config } => commands::solve(&load(config)?, cli.seed, cli.force),
        Command::Selftest => Ok(selftest::all(cli.seed)),
        Command::SpecfunSelftest => Ok(selftest::specfun_only(cli.seed)),
    }
}

fn diagnostic(command: &str, err: &CliError) -> String {
    serde_json::json!({
        "status": "error",
        "command": command,
        "exit_code": err.exit_code(),
        "kind": err.kind(),
        "message": err.to_string(),
    })
    .to_string()
}

/// Parses `args`, runs, writes the outputs and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let err = CliError::Validation(e.to_string().trim().to_string());
            eprintln!("{}", diagnostic("", &err));
            return err.exit_code();
        }
    };
    let name = cli.command.name();
    let result = execute(&cli).and_then(|out| {
        for line in &out.console {
            println!("{line}");
        }
        out.write(&cli.out).map(|(path, hash)| (out.status, path, hash))
    });
    match result {
        Ok((status, path, hash)) => {
            let code = match status {
                Status::Ok => EXIT_OK,
                Status::Inconclusive => EXIT_INCONCLUSIVE,
                Status::Failed => EXIT_FAILURE,
            };
            println!(
                "{}",
                serde_json::json!({
                    "status": status,
                    "command": name,
                    "exit_code": code,
                    "report": path.display().to_string(),
                    "content_hash": hash,
                })
            );
            code
        }
        Err(err) => {
            eprintln!("{}", diagnostic(name, &err));
            err.exit_code()
        }
    }
}
