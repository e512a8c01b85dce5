//! Command-line front end: simulation, tomography, topology, and symmetry
//! analysis for non-unitary polarization walks.
//!
//! Every subcommand takes one JSON configuration file; `--seed` overrides
//! the configured noise and solver seeds, `--out` picks the artifact
//! directory (falling back to `$BLOCHTOMO_OUT`, then the working
//! directory).  Artifacts embed the SHA-256 of the configuration file and
//! the effective seed, so any output is reproducible bit-for-bit from
//! (config, seed).  Failures print a machine-readable JSON object to
//! stderr and exit nonzero.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

/// Simulation and inverse-problem toolkit for non-unitary polarization
/// walks (angles in radians, gain/loss strength dimensionless).
#[derive(Parser)]
#[command(name = "blochtomo", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a measurement dataset (and camera frames when an image
    /// geometry is configured).
    Simulate(RunArgs),
    /// Recover step operators from a measured dataset.
    Reconstruct(RunArgs),
    /// Derive bands, winding, exceptional points, and the symmetry report
    /// from a reconstruction.
    Analyze(RunArgs),
    /// Sweep the parameter plane and export the winding map as CSV.
    PhaseDiagram(RunArgs),
    /// Convert raw calibration intensities into walk parameters.
    Calibrate(RunArgs),
    /// Run simulate, reconstruct, and analyze back to back with one seed.
    Pipeline(RunArgs),
}

/// Flags shared by every subcommand.
#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured noise and solver seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $BLOCHTOMO_OUT, then the working
    /// directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Anything a subcommand can fail with, tagged for the error JSON.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("configuration rejected: {reason}")]
    Config { reason: String },
    #[error("malformed input file {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error(transparent)]
    Spectral(#[from] blochtomo::spectral::SpectralError),
    #[error(transparent)]
    Polarimetry(#[from] blochtomo::polarimetry::PolarimetryError),
    #[error(transparent)]
    Image(#[from] blochtomo::image::ImageError),
    #[error(transparent)]
    Tomography(#[from] blochtomo::tomography::TomographyError),
    #[error(transparent)]
    Topology(#[from] blochtomo::topology::TopologyError),
    #[error(transparent)]
    PtSymmetry(#[from] blochtomo::ptsym::PtError),
    #[error(transparent)]
    Calibration(#[from] blochtomo::calibration::CalibrationError),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Config { .. } => "config",
            CliError::Parse { .. } => "parse",
            CliError::Spectral(_) => "spectral",
            CliError::Polarimetry(_) => "polarimetry",
            CliError::Image(_) => "image",
            CliError::Tomography(_) => "tomography",
            CliError::Topology(_) => "topology",
            CliError::PtSymmetry(_) => "pt_symmetry",
            CliError::Calibration(_) => "calibration",
        }
    }

    fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind(), "message": self.to_string() }
        })
        .to_string()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => run(&args, "simulate"),
        Command::Reconstruct(args) => run(&args, "reconstruct"),
        Command::Analyze(args) => run(&args, "analyze"),
        Command::PhaseDiagram(args) => run(&args, "phase-diagram"),
        Command::Calibrate(args) => run(&args, "calibrate"),
        Command::Pipeline(args) => run(&args, "pipeline"),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::FAILURE
        }
    }
}

fn run(args: &RunArgs, command: &'static str) -> Result<(), CliError> {
    let ctx = commands::RunContext::prepare(args, command)?;
    match command {
        "simulate" => commands::simulate(&ctx),
        "reconstruct" => commands::reconstruct(&ctx),
        "analyze" => commands::analyze(&ctx),
        "phase-diagram" => commands::phase_diagram(&ctx),
        "calibrate" => commands::calibrate(&ctx),
        "pipeline" => commands::pipeline(&ctx),
        _ => unreachable!("subcommands are exhaustive"),
    }
}
