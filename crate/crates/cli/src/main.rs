//! `landscaper`: simulate, fit, derive and run experiments from the shell.

mod commands;
mod error;
mod manifest;
mod model_spec;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use error::{CliError, CliResult, Failure};

#[derive(Debug, Parser)]
#[command(name = "landscaper", version, about = "Stability landscapes from collections of short time series")]
struct Cli {
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true, env = "LANDSCAPER_THREADS")]
    threads: Option<usize>,
    /// Seed for every random stream of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Simulate short series from a reference model.
    Simulate(SimulateArgs),
    /// Sample the drift/diffusion posterior of a dataset.
    Fit(FitArgs),
    /// Compute derived quantities from a posterior.
    Derive(DeriveArgs),
    /// Run a simulation study.
    Experiment(ExperimentArgs),
    /// Re-execute a run from its manifest and check the outputs match.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// `cusp`, `cusp:alpha=..,beta=..,lambda=..,r=..,epsilon=..` or `bimodal-unistable`.
    #[arg(long, default_value = model_spec::DEFAULT_MODEL)]
    pub model: String,
    #[arg(long)]
    pub series: usize,
    #[arg(long, default_value_t = 5)]
    pub points: usize,
    /// Observation step; a whole multiple of the 0.01 integration step.
    #[arg(long)]
    pub dt: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Long-format CSV `unit_id,time,value`, or a wide abundance table with `--clr`.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON fit configuration; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Split series at gaps longer than this.
    #[arg(long)]
    pub max_dt: Option<f64>,
    /// Read an abundance table and fit the CLR-transformed series of this taxon.
    #[arg(long)]
    pub clr: Option<String>,
    /// Fixed pseudocount for zero abundances; default is half the smallest positive entry.
    #[arg(long, requires = "clr")]
    pub pseudocount: Option<f64>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Exit successfully even when R-hat exceeds the threshold.
    #[arg(long)]
    pub allow_nonconverged: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandModeArg {
    Pointwise,
    CurveWise,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DeriveArgs {
    /// `posterior.json` written by `fit`.
    #[arg(long)]
    pub posterior: PathBuf,
    #[arg(long, value_enum, default_value_t = BandModeArg::Pointwise)]
    pub band_mode: BandModeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    Coverage,
    TprGrid,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub name: ExperimentName,
    /// JSON experiment configuration; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Use the full replicate count of 100 per cell (tpr-grid).
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Output directory; defaults to the one recorded in the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::parse("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new(Failure::Precondition, format!("thread pool: {e}")))?;
    }
    commands::dispatch(&cli.command, cli.seed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
