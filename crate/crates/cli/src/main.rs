//! `fastrates`: run learners, sweep experiments, verify the theory checks
//! and report rate fits.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fastrates::environments::{EnvSpec, Setting};
use fastrates::harness::{AlgoSpec, KPolicy, Statistic};

/// Exit code for usage and configuration errors.
const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "fastrates", version, about = "Second-order adaptive online learning experiments")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Play one learner on one environment and write its trace.
    Run(RunArgs),
    /// Run a grid of (environment, algorithm, horizon, seed) cells.
    Sweep(SweepArgs),
    /// Run the numerical theory checks.
    Verify(VerifyArgs),
    /// Print an environment's oracle.
    EnvInfo(EnvInfoArgs),
    /// Fit rates, compare with bounds and chart a results file.
    Report(ReportArgs),
}

fn parse_env(text: &str) -> Result<EnvSpec, String> {
    EnvSpec::parse(text).map_err(|e| e.to_string())
}

fn parse_algo(text: &str) -> Result<AlgoSpec, String> {
    text.parse().map_err(|e: fastrates::Error| e.to_string())
}

fn parse_setting(text: &str) -> Result<Setting, String> {
    match text {
        "hedge" => Ok(Setting::Hedge),
        "oco" => Ok(Setting::Oco),
        _ => Err(format!("unknown setting `{text}` (hedge or oco)")),
    }
}

fn parse_statistic(text: &str) -> Result<Statistic, String> {
    text.parse().map_err(|e: fastrates::Error| e.to_string())
}

fn parse_policy(text: &str) -> Result<KPolicy, String> {
    text.parse().map_err(|e: fastrates::Error| e.to_string())
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Environment, e.g. `gap:alpha=0.2,K=8` or a JSON object.
    #[arg(long, value_parser = parse_env)]
    env: EnvSpec,
    /// Learner: squint, squint:prior=harmonic, metagrad, ftl, hedge:eta=<rate>.
    #[arg(long, value_parser = parse_algo)]
    algo: AlgoSpec,
    /// Horizon.
    #[arg(long = "T", default_value_t = 4096)]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace file.
    #[arg(long, default_value = "trace.csv")]
    out: PathBuf,
    /// Store every round instead of powers of two.
    #[arg(long)]
    every_round: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Sweep configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override a top-level config key, e.g. `--set seeds=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Results file; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit 1 when any cell fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Suites to run: squeezer, esi, central, admissible_c.
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
    /// Sample count for the selected randomized suites.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the full report (checks and profiles) as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Flip one inequality, for testing the failure path.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Debug, Args)]
struct EnvInfoArgs {
    #[arg(long, value_parser = parse_env)]
    env: EnvSpec,
    /// Restrict to one setting (hedge or oco).
    #[arg(long, value_parser = parse_setting)]
    setting: Option<Setting>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Results CSV written by `sweep` or `run`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Statistic to fit: `mean` or `quantile:<q>`; repeatable.
    #[arg(long = "fit", value_parser = parse_statistic)]
    fits: Vec<Statistic>,
    /// Complexity used in the bounds: squint-certified or nominal.
    #[arg(long, value_parser = parse_policy, default_value = "squint-certified")]
    policy: KPolicy,
    /// Directory for report.json and the charts; defaults to the input's.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// An error that maps to exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Verify(a) => commands::verify(a),
        Command::EnvInfo(a) => commands::env_info(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
