use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "steer",
    about = "Steering criteria for two-qubit Werner states under measurement misalignment",
    disable_version_flag = true,
    args_override_self = true
)]
pub struct Cli {
    /// TOML file supplying default flag values; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Print version information as JSON.
    #[arg(long)]
    pub version: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate criteria over a grid of rotation angles.
    Sweep(SweepArgs),
    /// Violation probability of the dimension-bounded criterion under random measurements.
    Mc(McArgs),
    /// Critical rotation angle below which a criterion detects steering.
    Threshold(ThresholdArgs),
    /// Evaluate criteria with error bars from coincidence counts.
    Analyze(AnalyzeArgs),
    /// Classical bound of a criterion.
    Bound(BoundArgs),
    /// Write coincidence counts of a Werner state in the counts CSV format.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Mub,
    Nom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Class {
    Rom,
    Crm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Dihedral,
    Haar,
    Isotropic,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; relative paths resolve against $STEERING_OUT_DIR when set.
    /// Defaults to standard output.
    #[arg(long, short = 'o', value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Number of measurement settings per party.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub m: u8,
    /// Plane tilt Φ in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    /// Werner mixing probability μ.
    #[arg(long)]
    pub mu: f64,
    /// Rotation angles α in degrees, as START:STOP:STEP (inclusive), a comma list or one value.
    #[arg(long, default_value = "0:90:10", allow_hyphen_values = true)]
    pub alpha_grid: String,
    /// Comma-separated criteria: shannon, tsallis<q>, renyi, renyi<r>:<s>, db.
    #[arg(long)]
    pub criteria: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Mub)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub m: u8,
    #[arg(long, value_enum, default_value_t = Class::Rom)]
    pub class: Class,
    /// Sampling measure; defaults to dihedral for rom and isotropic for crm.
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    /// Mixing probabilities, as START:STOP:STEP (inclusive), a comma list or one value.
    #[arg(long)]
    pub mu_grid: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Multiplier on the classical threshold; a comma list evaluates every factor on the same samples.
    #[arg(long, default_value = "1.0")]
    pub bound_factor: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also histogram the violation amount into this many bins (single μ and factor only).
    #[arg(long, value_name = "BINS", requires = "hist_output")]
    pub hist: Option<usize>,
    /// Histogram CSV destination.
    #[arg(long, value_name = "PATH", requires = "hist")]
    pub hist_output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// shannon, tsallis, renyi or db; full names such as tsallis2 or renyi0.5:inf are accepted too.
    #[arg(long)]
    pub criterion: String,
    /// Tsallis order.
    #[arg(long, conflicts_with = "rs")]
    pub q: Option<f64>,
    /// Rényi orders as R,S (use "inf" for infinity).
    #[arg(long)]
    pub rs: Option<String>,
    #[arg(long)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub m: u8,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Counts CSV with header setting,a,b,counts.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub criteria: Option<String>,
    /// Poisson bootstrap replicates.
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    /// Angular jitter on Bob's directions for the systematic error, degrees.
    #[arg(long, default_value_t = 0.1)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Measurement directions behind the counts.
    #[arg(long, value_enum, default_value_t = Mode::Mub)]
    pub mode: Mode,
    /// Rotation angle α of Alice's directions (mub mode), degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Plane tilt Φ (mub mode), degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub m: u8,
    /// Dimension of Alice's system (dimension-bounded bound).
    #[arg(long, default_value_t = 2)]
    pub da: usize,
    /// Tsallis uncertainty bound of this order for m settings.
    #[arg(long, alias = "tsallis-m", conflicts_with = "renyi2")]
    pub q: Option<f64>,
    /// Two-setting Rényi uncertainty bound.
    #[arg(long)]
    pub renyi2: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub m: u8,
    #[arg(long)]
    pub mu: f64,
    #[arg(long, value_enum, default_value_t = Mode::Mub)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    /// Coincidences per setting.
    #[arg(long, default_value_t = 10_000)]
    pub counts: u64,
    /// Draw Poisson counts with this seed instead of rounding the expectation.
    #[arg(long)]
    pub poisson_seed: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}
