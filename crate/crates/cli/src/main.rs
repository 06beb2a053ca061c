//! `ionmod`: seeded scenarios for the modulator, gate and tomography models.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric or I/O failure,
//! 4 tomography fit did not converge.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ionmod_core::Error;

#[derive(Parser)]
#[command(name = "ionmod", version, about = "Modulator, gate-noise and GST scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transmission map of the two-stage modulator over both drive voltages.
    Map(Common),
    /// On and off Rabi flopping curves.
    Rabi(Common),
    /// Pulse-energy samples with jitter and drift.
    Hist(Common),
    /// Simulate a GST dataset and fit it.
    Gst(Common),
}

#[derive(Args)]
struct Common {
    /// TOML scenario file, applied on top of the preset.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// One of perfect, imperfect, ideal, mzm, aom.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Parse { .. } | Error::Unimplemented(_) => Failure::Config(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl Failure {
    /// Like `From`, but non-convergence gets its own exit code.
    fn fit(e: Error) -> Self {
        match e {
            Error::NotConverged { .. } => Failure::NotConverged(e.to_string()),
            e => e.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Numeric(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::NotConverged(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numeric(m) => write!(f, "{m}"),
            Failure::NotConverged(m) => write!(f, "fit failed: {m}"),
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    let (name, common) = match &command {
        Command::Map(c) => ("map", c),
        Command::Rabi(c) => ("rabi", c),
        Command::Hist(c) => ("hist", c),
        Command::Gst(c) => ("gst", c),
    };
    let text = match &common.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let cfg = config::resolve(
        common.preset.as_deref(),
        text.as_deref(),
        common.seed,
        common.out.clone(),
    )
    .map_err(Failure::Config)?;
    commands::prepare(&cfg, name)?;
    match command {
        Command::Map(_) => commands::map(&cfg),
        Command::Rabi(_) => commands::rabi(&cfg),
        Command::Hist(_) => commands::hist(&cfg),
        Command::Gst(_) => commands::gst(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ionmod: {f}");
            ExitCode::from(f.code())
        }
    }
}
