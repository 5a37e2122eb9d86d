//! `mfeit`: command-line driver for the multifrequency EIT pipeline.
//!
//! Exit codes: 0 success, 1 output failure, 2 invalid configuration,
//! 3 numerical failure, 4 missing input file.

mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mfeit_core::Error;
use thiserror::Error as ThisError;

use crate::commands::Outcome;
use crate::config::ExperimentConfig;
use crate::manifest::{sha256_hex, FileHash, Manifest};

#[derive(Parser, Debug)]
#[command(name = "mfeit", version, about = "Multifrequency impedance tomography in the unit disk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Poincaré spectrum and plasmonic resonances of the configured inclusion.
    Spectrum(Args),
    /// Direct and spectral boundary voltages at the configured contrasts.
    Forward(Args),
    /// Noisy multifrequency dataset over the configured frequency sweep.
    Synth(Args),
    /// Rational fit of a dataset and the perfect-conductor trace it implies.
    Extract(Args),
    /// Shape reconstruction from perfect-conductor Cauchy data.
    Invert(Args),
    /// Noise-level sweep of the whole pipeline.
    Sweep(Args),
}

#[derive(clap::Args, Debug)]
struct Args {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if needed.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, env = "MFEIT_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Output(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::MissingInput(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match &e {
            Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => CliError::MissingInput(e.to_string()),
            Error::Io(_) => CliError::Output(e.to_string()),
            Error::InsufficientFrequencies { .. }
            | Error::MissingRho
            | Error::DomainViolation { .. }
            | Error::TargetTooClose { .. } => CliError::Config(e.to_string()),
            _ if e.is_validation() => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

fn run(name: &str, args: &Args, cmd: fn(&ExperimentConfig, &Path) -> Result<Outcome, CliError>) -> Result<String, CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Output(e.to_string()))?;
    }
    let raw = std::fs::read(&args.config).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingInput(format!("{} not found", args.config.display())),
        _ => CliError::Output(format!("{}: {e}", args.config.display())),
    })?;
    let text = String::from_utf8(raw.clone())
        .map_err(|_| CliError::Config(format!("{} is not UTF-8", args.config.display())))?;
    let cfg = ExperimentConfig::parse(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    std::fs::create_dir_all(&args.out)?;

    let outcome = cmd(&cfg, &args.out)?;

    let label = |p: &Path| -> String {
        p.strip_prefix(&args.out)
            .map(|r| r.display().to_string())
            .unwrap_or_else(|_| p.display().to_string())
    };
    let hash_all = |paths: &[PathBuf]| -> std::io::Result<Vec<FileHash>> {
        paths.iter().map(|p| FileHash::of(p, label(p))).collect()
    };
    let manifest = Manifest {
        command: name.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        core_version: mfeit_core::VERSION.to_string(),
        config: FileHash {
            path: args.config.display().to_string(),
            sha256: sha256_hex(&raw),
        },
        inputs: hash_all(&outcome.inputs)?,
        outputs: hash_all(&outcome.outputs)?,
        seeds: outcome.seeds.clone(),
    };
    mfeit_core::io::write_json(&args.out.join(format!("manifest_{name}.json")), &manifest)?;
    Ok(outcome.summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum(a) => run("spectrum", a, commands::spectrum),
        Command::Forward(a) => run("forward", a, commands::forward),
        Command::Synth(a) => run("synth", a, commands::synth),
        Command::Extract(a) => run("extract", a, commands::extract),
        Command::Invert(a) => run("invert", a, commands::invert_cmd),
        Command::Sweep(a) => run("sweep", a, commands::sweep),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mfeit: {e}");
            ExitCode::from(e.code())
        }
    }
}
