//! `toolkit`: compute conformal perception-error bounds and verify reach
//! tubes for the perception-driven mountain-car benchmark.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conreach_cli::error::CliError;
use conreach_cli::stages;
use conreach_cli::PipelineConfig;

#[derive(Parser)]
#[command(
    name = "toolkit",
    version,
    about = "State-dependent conformal perception bounds and sound reach tubes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to a JSON pipeline configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Use the full experiment scale (4,000 trajectories, 200 sub-intervals,
    /// M up to 7) instead of the quick desk-scale defaults.
    #[arg(long, global = true)]
    paper_scale: bool,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the trajectory dataset and its calibration/test splits.
    Generate,
    /// Fit conformal bounds for every configured method.
    Calibrate,
    /// Compute a verified reach tube for every fitted bound.
    Verify,
    /// Emit the cross-method comparison report (JSON, CSV, text).
    Report,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| CliError::Io(format!("read {}: {e}", path.display())))?;
            serde_json::from_slice(&bytes)
                .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    if cli.paper_scale {
        config.apply_paper_scale();
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    match cli.command {
        Command::Generate => stages::cmd_generate(&config),
        Command::Calibrate => stages::cmd_calibrate(&config),
        Command::Verify => stages::cmd_verify(&config),
        Command::Report => stages::cmd_report(&config),
    }
}

fn main() -> ExitCode {
    // clap handles usage errors itself with exit code 2 by default; remap
    // them to the documented usage/config code 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("toolkit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
