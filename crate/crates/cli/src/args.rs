use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "qgame", version, about = "Quantum game simulator and verifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub output: OutputFormat,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Add wall-clock time to the report (makes output run-dependent).
    #[arg(long, global = true)]
    pub timing: bool,

    /// Run engines on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Measurement-based universality ledger.
    Verify(VerifyArgs),
    /// Newcomb circuit with an optional breaker.
    Newcomb(NewcombArgs),
    /// GVW quantum gambling: exact and Monte-Carlo payoffs.
    Gamble(GambleArgs),
    /// Demand/supply distributions and Wigner grid of a strategy file.
    Market(MarketArgs),
    /// Survival curve of the Pauli random-walk corrector.
    Walk(WalkArgs),
    /// Acceptance probabilities of a quantum finite automaton.
    Qfa(QfaArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify(_) => "verify",
            Command::Newcomb(_) => "newcomb",
            Command::Gamble(_) => "gamble",
            Command::Market(_) => "market",
            Command::Walk(_) => "walk",
            Command::Qfa(_) => "qfa",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    /// Run only the named check (repeatable).
    #[arg(long)]
    pub only: Vec<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BreakerArg {
    None,
    Identity,
    Not,
    /// I or NOT, drawn per trial.
    Random,
    Qutrojan,
}

#[derive(Args, Debug, Serialize)]
pub struct NewcombArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub control: u8,
    #[arg(long, value_enum, default_value_t = BreakerArg::None)]
    pub breaker: BreakerArg,
    /// Trials for the random breaker.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct GambleArgs {
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p_verify: f64,
    #[arg(long, default_value_t = 1.0)]
    pub reward: f64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add a 101-point θ sweep over [0, π/2].
    #[arg(long)]
    pub sweep: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct MarketArgs {
    /// Strategy file (JSON).
    pub file: PathBuf,
    /// Override the number of grid points.
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct WalkArgs {
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_max: u64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QfaPreset {
    /// One qubit; `n` = NOT, `h` = H, accepts |1⟩.
    Flip,
}

#[derive(Args, Debug, Serialize)]
pub struct QfaArgs {
    /// Automaton file (JSON).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub file: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<QfaPreset>,
    /// Input words; defaults to every word of length ≤ 3.
    pub words: Vec<String>,
}
