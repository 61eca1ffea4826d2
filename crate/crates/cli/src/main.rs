use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

#[derive(Debug, Parser)]
#[command(name = "patternlab", version, about = "Pattern-learning model of grokking and double descent")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "PATTERNLAB_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate train/test curves for a preset or scenario file.
    Simulate(SimulateArgs),
    /// Vary one pattern parameter and evaluate a curve per value.
    Sweep(SweepArgs),
    /// Curves between the double-descent (lambda = 0) and grokking (lambda = 1) presets.
    Interpolate(InterpolateArgs),
    /// Fit pattern parameters to an observed curve.
    Fit(FitArgs),
    /// Generate and export the modular-division dataset.
    Dataset(DatasetArgs),
    /// Compare exact test accuracy against both Monte Carlo estimators.
    McCheck(McCheckArgs),
    /// Serve the JSON API for the explorer.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    Grokking,
    DoubleDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    Time,
    Capacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Param {
    Gamma,
    Alpha,
    B,
    G,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ScenarioSource {
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Scenario JSON file.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CurveOptions {
    /// `log:start:end:count` or `lin:start:end:count`.
    #[arg(long, default_value = patternlab::grid::DEFAULT_GRID)]
    grid: String,
    #[arg(long, value_enum, default_value_t = AxisArg::Time)]
    axis: AxisArg,
    /// Monte Carlo samples per grid point for scenarios too large to enumerate.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: ScenarioSource,
    #[command(flatten)]
    curve: CurveOptions,
    /// Output file; stdout when omitted (CSV only, no metadata).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    source: ScenarioSource,
    /// Index of the pattern to vary.
    #[arg(long)]
    pattern: usize,
    #[arg(long, value_enum)]
    param: Param,
    /// Parameter values, as a grid spec.
    #[arg(long)]
    values: String,
    #[arg(long, default_value = patternlab::grid::DEFAULT_GRID)]
    grid: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[group(id = "target", required = true, multiple = false)]
struct InterpolateTarget {
    /// Evaluate a single lambda in [0, 1]; requires --out.
    #[arg(long, requires = "out")]
    lambda: Option<f64>,
    /// Evenly spaced lambdas from 0 to 1; requires --out-dir.
    #[arg(long, requires = "out_dir")]
    steps: Option<usize>,
}

#[derive(Debug, Args)]
struct InterpolateArgs {
    #[command(flatten)]
    target: InterpolateTarget,
    #[arg(long, default_value = patternlab::grid::DEFAULT_GRID)]
    grid: String,
    #[arg(long, value_enum, default_value_t = AxisArg::Time)]
    axis: AxisArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, conflicts_with = "out_dir")]
    out: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Observed curve CSV: `t,train_acc,test_acc[,weight]`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    n_patterns: usize,
    #[arg(long)]
    preferred: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    baseline: f64,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    /// Objective evaluations per restart.
    #[arg(long, default_value_t = 20_000)]
    max_evals: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Result JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DatasetArgs {
    #[arg(long, default_value_t = patternlab::moddiv::DEFAULT_MODULUS)]
    p: u64,
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
    /// Token file; the sidecar goes to `<out>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct McCheckArgs {
    /// Patterns per random scenario.
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Draws per estimator (domain simulation: points times trials).
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 10)]
    scenarios: usize,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = patternlab_service::DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // help and version exit 0, usage errors exit 2
        Err(e) => e.exit(),
    };
    eprintln!("seed: {}", cli.seed);
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
