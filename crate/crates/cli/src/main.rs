//! `circle-transfer`: run transfer-operator experiments from a TOML config.
//!
//! Exit status: 0 on success, 1 on I/O failure, 2 on an invalid config,
//! 3 on a numerical failure. Errors go to stderr, prefixed by their name.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, Sink};
use config::{ConfigError, Experiment};

#[derive(Parser)]
#[command(name = "circle-transfer", version, about = "Transfer operators of expanding circle maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true, default_value = "experiment.toml")]
    config: PathBuf,
    /// Output directory; overrides `[output].directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress messages on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Spectrum, lead eigenfunction and grid-refinement reliability.
    Spectrum,
    /// Analytic parameter derivatives of the resolvent and spectral projector
    /// against finite differences.
    Response,
    /// Operator-norm differences of resolvent and projector along a ray.
    HolderScan,
    /// Lasota–Yorke constants for orders 1 to `n_max`.
    Ly,
    /// Contour-integral spectral projector and its idempotence.
    Projector,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&cli.config).map_err(|e| {
        CliError::Config(ConfigError(format!("cannot read {}: {e}", cli.config.display())))
    })?;
    let exp = Experiment::parse(&text)?;
    for w in &exp.warnings {
        eprintln!("{w}");
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| exp.directory.clone())
        .unwrap_or_else(|| PathBuf::from("output"));
    let sink = Sink::new(dir, &exp, cli.quiet)?;
    match cli.command {
        Command::Spectrum => commands::spectrum(&exp, &sink),
        Command::Response => commands::response(&exp, &sink),
        Command::HolderScan => commands::holder_scan(&exp, &sink),
        Command::Ly => commands::ly(&exp, &sink),
        Command::Projector => commands::projector(&exp, &sink),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
