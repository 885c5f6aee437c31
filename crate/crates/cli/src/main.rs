mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Overrides;

#[derive(Parser)]
#[command(name = "perimean", version, about = "Periodic mean-reversion toolkit")]
struct Cli {
    /// Flat TOML file with run settings; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate per-river discharge CSVs into one (log) system series.
    Ingest(IngestArgs),
    /// Run the diagnostic battery on one or more periods.
    Test(TestArgs),
    /// Fit the two-phase model to a series.
    Fit(FitArgs),
    /// Simulate an antithetic ensemble from a fitted model.
    Simulate(SimulateArgs),
    /// Forecast bands, envelope and coverage table from a fitted model.
    Forecast(ForecastArgs),
    /// Write a synthetic series drawn from a known model.
    Fixture(FixtureArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Input CSV files with one row per river and day.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Output series CSV (`date,value`); a JSON summary is written beside it.
    #[arg(long)]
    output: PathBuf,
    /// Keep the aggregate discharge instead of its natural log.
    #[arg(long)]
    no_log: bool,
    /// Linearly fill runs of at most this many missing days.
    #[arg(long)]
    max_gap_days: Option<usize>,
    #[arg(long, default_value = "date")]
    date_column: String,
    #[arg(long, default_value = "region")]
    region_column: String,
    #[arg(long, default_value = "reservoir")]
    reservoir_column: String,
    #[arg(long, default_value = "river")]
    river_column: String,
    #[arg(long, default_value = "discharge")]
    discharge_column: String,
}

#[derive(Args)]
struct TestArgs {
    /// Series CSV (`date,value`).
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated `start..end` ranges; the whole series when absent.
    #[arg(long, value_delimiter = ',')]
    periods: Option<Vec<String>>,
    /// Largest ADF lag considered; `⌊12 (n/100)^{1/4}⌋` when absent.
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    /// `start..end` slice to fit; the whole series when absent.
    #[arg(long)]
    period: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, conflicts_with = "fixed_count")]
    rms_tol: Option<f64>,
    #[arg(long)]
    fixed_count: Option<usize>,
    /// Also write the truncation trace as `rms.csv`.
    #[arg(long)]
    dump_rms: bool,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args)]
struct EnsembleArgs {
    /// `fit.json` written by the fit command.
    #[arg(long)]
    fit: PathBuf,
    /// Days after the fitted period.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    /// Also write every path as `paths.csv`.
    #[arg(long)]
    dump_paths: bool,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long)]
    multipliers: Option<String>,
    /// Observed series covering the days after the fitted period.
    #[arg(long)]
    holdout: Option<PathBuf>,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Three harmonics, α = 112, σ = 3.
    ThreeYear,
    /// Twenty-four harmonics, same dynamics.
    MultiHarmonic,
}

#[derive(Args)]
struct FixtureArgs {
    #[arg(long, value_enum, default_value = "three-year")]
    preset: Preset,
    #[arg(long)]
    seed: Option<u64>,
    /// Euler steps; the series has one more value.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    output_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

impl EnsembleArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            n_paths: self.paths,
            seed: self.seed,
            horizon: self.horizon,
            ..Overrides::default()
        }
    }
}
