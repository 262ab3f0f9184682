//! `lav`: audio to per-layer style trajectories.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 input parse/format
//! error, 3 numeric failure. The machine-readable summary goes to stdout,
//! diagnostics to stderr.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::LevelFilter;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "lav",
    version,
    about = "Map audio to style-latent trajectories"
)]
struct Cli {
    /// Diagnostic verbosity on stderr.
    #[arg(long, global = true, default_value = "warn")]
    log_level: LevelFilter,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write a LAVT trajectory.
    Map(MapArgs),
    /// Compute target-space statistics from w samples and write LAVS.
    Stats(StatsArgs),
    /// Encode audio with the built-in log-mel stand-in and write LAVE.
    MockEncode(MockEncodeArgs),
    /// Print the header of a LAVE, LAVS, LAVT or WAV file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Input WAV (16-bit PCM or 32-bit float, mono or stereo).
    #[arg(long)]
    pub audio: PathBuf,
    /// Precomputed LAVE embeddings; the mock encoder is used when absent.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// LAVS statistics of the target style space.
    #[arg(long)]
    pub stats: PathBuf,
    /// Output LAVT path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Scale on the target std in the affine normalization.
    #[arg(long, default_value_t = 1.0)]
    pub y: f64,
    /// Linear-tail slope of the leaky tanh.
    #[arg(long, default_value_t = 0.02)]
    pub c: f64,
    /// Strength of the chroma anchor mix in the mean term, in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub lambda_chroma: f64,
    /// Output frame rate.
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    #[arg(long, default_value_t = 25)]
    pub win_coarse: usize,
    #[arg(long, default_value_t = 13)]
    pub win_middle: usize,
    #[arg(long, default_value_t = 5)]
    pub win_fine: usize,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// LAVE file holding N x latent_dim w samples (rate field ignored).
    #[arg(long)]
    pub w_samples: PathBuf,
    /// Number of style inputs of the target generator.
    #[arg(long)]
    pub num_layers: u32,
    #[arg(long, default_value_t = 0)]
    pub anchor_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MockEncodeArgs {
    #[arg(long)]
    pub audio: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub path: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();

    let result: Result<(), CliError> = match cli.command {
        Command::Map(a) => commands::map(&a),
        Command::Stats(a) => commands::stats(&a),
        Command::MockEncode(a) => commands::mock_encode(&a),
        Command::Inspect(a) => commands::inspect(&a.path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
