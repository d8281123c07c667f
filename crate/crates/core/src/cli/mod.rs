//! Experiment runners behind the `sepent` binary.
//!
//! Each subcommand turns an [`ExperimentConfig`] into a [`RunReport`] holding
//! one record per trial plus a summary of named checks. Records carry their
//! trial index and random stream id. Reports are deterministic for a given
//! config and seed, regardless of thread count.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails (the report
//! is still written), 2 for usage and domain errors, 3 for I/O errors.

mod commands;
mod inputs;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};

pub use commands::{cmd_breaking, cmd_decay, cmd_erf, cmd_roof, cmd_sweep, cmd_verify, run};
pub use output::{render, Check, RunReport, Summary};

/// Environment variable holding the worker-thread count; unset means serial.
pub const THREADS_ENV: &str = "SEPENT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Channel JSON file, or a built-in name (bitflip, identity, depolarizing,
    /// amplitude-damping, random-separable, random-unitary-separable).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    /// State JSON file, or a built-in name (bell, ghz, w, werner).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    /// Local dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    /// concurrence, g_concurrence[:d] or sqrt_three_tangle.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<String>,
    /// Parameter of a built-in channel or state.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance for the command's checks.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Include wall-clock duration (makes reports differ between runs).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Draw a fresh random separable channel per trial.
    #[arg(long)]
    pub random_channel: bool,
    /// Kraus count of random channels (default: random in 2..=6).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kraus: Option<usize>,
    /// Random channels act on a single random party.
    #[arg(long)]
    pub one_sided: bool,
    /// Random inputs are mixed states of rank drawn uniformly from 1..=N
    /// instead of pure states. Unentangled draws are redrawn.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixed_rank: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DecayArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kraus: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ErfArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kraus: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// Extra rows of the mixing isometry.
    #[arg(long, default_value_t = 0)]
    pub extra: usize,
    #[arg(long, default_value_t = 400)]
    pub max_iterations: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RoofArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    /// Ensemble size (default rank²).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<usize>,
    /// Rank of random input states when no state is given.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BreakingArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Local channel family: depolarizing, amplitude-damping or identity.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    /// Scan the family parameter and bisect the breaking threshold.
    #[arg(long)]
    pub bisect: bool,
    #[arg(long, default_value_t = 20)]
    pub probes: usize,
    #[arg(long, default_value_t = 21)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// amplitude-damping, depolarizing or bitflip.
    #[arg(long)]
    pub family: String,
    /// Parameter grid `start:stop:step`.
    #[arg(long = "range", alias = "gamma")]
    pub range: String,
    /// decay, ratio, erf or breaking.
    #[arg(long, default_value = "decay")]
    pub emit: String,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum ExperimentConfig {
    /// Check the evolution law on random or given channels and states.
    Verify(VerifyArgs),
    /// Decay factor and random-unitary test of a channel.
    Decay(DecayArgs),
    /// Resilience-factor search over Kraus mixings.
    Erf(ErfArgs),
    /// Convex-roof estimate of a mixed-state measure.
    Roof(RoofArgs),
    /// Entanglement-breaking test or threshold scan.
    Breaking(BreakingArgs),
    /// Parameter sweep emitting (x, y) pairs.
    Sweep(SweepArgs),
}

impl ExperimentConfig {
    pub fn common(&self) -> &CommonArgs {
        match self {
            ExperimentConfig::Verify(a) => &a.common,
            ExperimentConfig::Decay(a) => &a.common,
            ExperimentConfig::Erf(a) => &a.common,
            ExperimentConfig::Roof(a) => &a.common,
            ExperimentConfig::Breaking(a) => &a.common,
            ExperimentConfig::Sweep(a) => &a.common,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sepent", version, about = "Entanglement evolution under separable operations")]
struct Cli {
    #[command(subcommand)]
    config: ExperimentConfig,
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 3,
        _ => 2,
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| Error::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
        Err(_) => 1,
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::Internal(e.to_string()))
}

/// Parses a full argument list (program name first) into a config.
pub fn parse_config<I, T>(args: I) -> Result<ExperimentConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args).map(|c| c.config).map_err(|e| Error::Usage(e.to_string()))
}

/// Parses arguments, runs the command, writes the report, and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = thread_pool().and_then(|pool| pool.install(|| run(&cli.config))).and_then(|report| {
        let text = render(&report, cli.config.common().format)?;
        match &cli.config.common().out {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(report)
    });
    match outcome {
        Ok(report) if report.passed => 0,
        Ok(report) => {
            for c in report.summary.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {} (value {}, tolerance {})", c.name, c.value, c.tolerance);
            }
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
