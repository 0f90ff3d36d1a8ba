mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ouexact", version, about = "Exact simulation, pricing and calibration for OU stochastic volatility models")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Root seed; every trial draws from its own split stream.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Number of Monte Carlo trials (command-specific default).
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "ENGINE_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample Dirichlet means and report moments and sampler cost.
    Dmean(DmeanArgs),
    /// Simulate one-step log-returns and report their moments.
    Returns(ReturnsArgs),
    /// Price a European or forward-start call with both estimators.
    Price(PriceArgs),
    /// Export simulated price paths as CSV.
    Paths(PathsArgs),
    /// Fit model parameters to call quotes.
    Calibrate(CalibrateArgs),
    /// Run validation suites.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DmeanSampler {
    Cftp,
    Fixed,
    Stopping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Unit,
    Decay,
    OneMinusDecay,
}

#[derive(Debug, Args)]
pub struct DmeanArgs {
    /// Shape parameters, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.5,1,2,5,10")]
    pub delta: Vec<f64>,
    #[arg(long, value_enum, default_value_t = DmeanSampler::Cftp)]
    pub sampler: DmeanSampler,
    /// Stick count for the fixed sampler.
    #[arg(long, default_value_t = 100)]
    pub n: u64,
    /// Tolerance for the stopping sampler.
    #[arg(long, default_value_t = 2.22e-16)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::OneMinusDecay)]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    /// Scale bound c; R = c * Beta(a, b), or R = c with --constant.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long)]
    pub constant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    UnitOuGamma,
    UnitGl,
    CalibratedOuGamma1,
    CalibratedOuGamma2,
    CalibratedGl1,
    CalibratedGl2,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model parameters as JSON.
    #[arg(long, conflicts_with = "preset")]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::UnitOuGamma)]
    pub preset: Preset,
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// Beta shape alpha for the unit-gl preset.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Beta shape beta for the unit-gl preset.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Exact,
    Fixed,
    Stopping,
}

#[derive(Debug, Args)]
pub struct SamplerArgs {
    #[arg(long, value_enum, default_value_t = SamplerArg::Exact)]
    pub sampler: SamplerArg,
    /// Stick count for the fixed sampler.
    #[arg(long, default_value_t = 100)]
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CouplingArg {
    Shared,
    Independent,
}

#[derive(Debug, Args)]
pub struct ReturnsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// Leverage coupling; `independent` is a diagnostic only.
    #[arg(long, value_enum, default_value_t = CouplingArg::Shared)]
    pub coupling: CouplingArg,
    /// Write a histogram of the returns to this CSV file.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Payoff {
    European,
    ForwardStart,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long, value_enum, default_value_t = Payoff::European)]
    pub payoff: Payoff,
    #[arg(long, default_value_t = 100.0)]
    pub s0: f64,
    #[arg(long, default_value_t = 100.0)]
    pub strike: f64,
    #[arg(long, default_value_t = 1.0)]
    pub maturity: f64,
    /// Strike multiple of a forward-start call.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t1: f64,
    #[arg(long, default_value_t = 2.0)]
    pub t2: f64,
}

#[derive(Debug, Args)]
pub struct PathsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Observation times, comma separated and increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    pub times: Vec<f64>,
    #[arg(long, default_value_t = 100.0)]
    pub s0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    OuGamma,
    GlOuGgc,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Quotes CSV with header `strike,maturity_years,price`.
    #[arg(long)]
    pub quotes: PathBuf,
    #[arg(long)]
    pub s0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub r: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub q: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::OuGamma)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 1)]
    pub factors: usize,
    /// Fit the deterministic-volatility limit only.
    #[arg(long)]
    pub jump_free: bool,
    /// Starting parameters as JSON; defaults to a built-in start for the template.
    #[arg(long)]
    pub start: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Suite name, criterion number, `dmean` or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Multiplier on every stated trial count.
    #[arg(long, default_value_t = 1.0)]
    pub trial_scale: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

fn report(e: &CliError) -> ExitCode {
    let body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
    eprintln!("{body}");
    e.exit_code()
}
