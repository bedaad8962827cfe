//! `ymvac`: command-line driver for the principal-functional toolkit.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or input error,
//! 3 the minimizer did not converge.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use output::{CliError, Exit};

#[derive(Parser, Debug)]
#[command(name = "ymvac", version, about = "Zero-energy ground-state functional: oracles, lattice minimizer, checks")]
pub struct Cli {
    /// Run configuration (`key = value` lines under `[section]` headers).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every random draw (data, fields, suite).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for the data-parallel kernels.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Leave the timestamp out of JSON outputs.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Treat warnings (delocalized fields) as failures.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One-dimensional oracle: ordered Hamiltonian applied to exp(-S).
    Qm(QmArgs),
    /// Abelian functional: spectral form against the position-space kernel.
    Maxwell(MaxwellArgs),
    /// Minimize the lattice action for a boundary datum.
    Minimize(MinimizeArgs),
    /// Run a battery of invariance and identity checks.
    Verify(VerifyArgs),
    /// Diagnostics of a stored field.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct QmArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    /// Stencil order, 2 or 4.
    #[arg(long)]
    pub order: Option<u32>,
    /// Skip the runs at 2h and 4h.
    #[arg(long)]
    pub no_study: bool,
    /// CSV table of x, V, S, psi, residual.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// JSON summary (also printed to stdout).
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MaxwellArgs {
    /// Grid points per axis.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub fields: Option<usize>,
    /// Bump width as a fraction of the box.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// bumps or gradient.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub no_kernel: bool,
    #[arg(long)]
    pub no_boost: bool,
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MinimizeArgs {
    /// u1 or su2.
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    /// Final field, binary field format.
    #[arg(long, value_name = "PATH")]
    pub field_out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Comma-separated checks (gauge, symmetry, gauss, hje, deriv) or `default`.
    #[arg(long)]
    pub battery: Option<String>,
    /// Check a stored field instead of minimizing the configured datum.
    #[arg(long, value_name = "PATH")]
    pub field: Option<PathBuf>,
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long, value_name = "PATH")]
    pub field: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

/// Settings shared by every subcommand.
pub struct Globals {
    pub config: RunConfig,
    pub timestamp: bool,
    pub strict: bool,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_text(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.suite.seed = cfg.seed;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Exit, CliError> {
    let config = load_config(&cli)?;
    if let Some(n) = cli.threads {
        ymvac::par::set_threads(n).map_err(|e| CliError::usage(e.to_string()))?;
    }
    let g = Globals { config, timestamp: !cli.no_timestamp, strict: cli.strict };
    match cli.command {
        Command::Qm(a) => commands::qm::run(&g, a),
        Command::Maxwell(a) => commands::maxwell::run(&g, a),
        Command::Minimize(a) => commands::lattice::minimize_cmd(&g, a),
        Command::Verify(a) => commands::lattice::verify(&g, a),
        Command::Report(a) => commands::lattice::report(&g, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(Exit::Usage as u8),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
