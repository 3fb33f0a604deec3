//! `sympl`: batch front end for the symplectic toolkit.
//!
//! Every subcommand reads an optional JSON config, computes everything in
//! memory and only then writes its output, so a failing run leaves no
//! partial files behind. Exit codes: 0 ok, 1 usage, 2 domain error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sympl::error::SymplError;

use crate::output::Rendered;

#[derive(Debug, Parser)]
#[command(
    name = "sympl",
    version,
    about = "Symplectic methods for bosonic and qudit systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// JSON config file; subcommand defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for randomized runs; mandatory whenever one is requested.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override of the subcommand's pass/fail tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Average transduction fidelity over a (t², μ, ν) grid.
    FidelitySweep,
    /// Fisher information of a probe across a θ grid, with a log-log fit.
    EpFisher,
    /// Sixteen-copy swap plan for a three-or-more-mode transformation.
    PermutePlan,
    /// Two-mode scattering matrix of a passive or active coupler.
    Scatter,
    /// Qudit teleportation analysis of a Clifford circuit.
    DvTeleport,
    /// Symplectic dilation of a Gaussian channel, with a round-trip report.
    Dilate,
}

/// Failure classes, mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(SymplError),
}

impl From<SymplError> for CliError {
    fn from(e: SymplError) -> Self {
        CliError::Domain(e)
    }
}

fn run(cli: Cli) -> Result<Rendered, CliError> {
    let c = &cli.common;
    if let Some(t) = c.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--tol must be positive, got {t}")));
        }
    }
    let out = match cli.command {
        Command::FidelitySweep => commands::fidelity_sweep(c)?,
        Command::EpFisher => commands::ep_fisher(c)?,
        Command::PermutePlan => commands::permute_plan(c)?,
        Command::Scatter => commands::scatter(c)?,
        Command::DvTeleport => commands::dv_teleport(c)?,
        Command::Dilate => commands::dilate(c)?,
    };
    output::render(out, c.format)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SYMPL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let out_path = cli.common.out.clone();
    match run(cli).and_then(|r| output::write(&r, out_path.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Domain(e)) => {
            log::debug!("domain error: {e:?}");
            let body =
                serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::from(2)
        }
    }
}
