use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use lacunary::generators::DEFAULT_GUARD;
use lacunary::Method;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_OUT_DIR: &str = "lacunary-out";

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

/// Single-observation lacunary uniformity test and its experiments.
#[derive(Parser, Debug, Clone, Serialize, Deserialize)]
#[command(name = "lacunary", version, args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct Global {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Directory for result files and manifest.json [default: lacunary-out].
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Format of the main result file; defaults depend on the command.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (0: one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Key-value file whose entries act as flags (`m_values = 15,50`);
    /// flags on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Significance level for reject decisions.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub alpha: f64,
    /// Exit with status 1 when a reported test rejects at --alpha.
    #[arg(long, global = true)]
    pub reject_exit: bool,
}

impl Global {
    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    /// Test one digit stream.
    Test(TestArgs),
    /// Write digit streams from a generator.
    Generate(GenerateArgs),
    /// Simulate the null law of T.
    Nulldist(NullArgs),
    /// Rejection rates of all tests under tilted alternatives.
    Power(PowerArgs),
    /// Compare T under a tilt with its noncentral limit.
    Noncentrality(NoncentralityArgs),
    /// Score the mantissas of a CSV of amounts.
    Scan(ScanArgs),
    /// Cumulative-imbalance trajectories of scanned amounts.
    Trajectory(TrajectoryArgs),
    /// Re-execute a run from its manifest.json.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Test(_) => "test",
            Command::Generate(_) => "generate",
            Command::Nulldist(_) => "nulldist",
            Command::Power(_) => "power",
            Command::Noncentrality(_) => "noncentrality",
            Command::Scan(_) => "scan",
            Command::Trajectory(_) => "trajectory",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[command(group(ArgGroup::new("input").required(true).args(["digits", "value", "file", "constant"])))]
pub struct TestArgs {
    /// Digit characters, most significant first (0-9 then a-z).
    #[arg(long)]
    pub digits: Option<String>,
    /// Decimal literal in [0, 1), taken exactly.
    #[arg(long)]
    pub value: Option<String>,
    /// File of digit characters; whitespace is ignored.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Embedded constant: pi, e, sqrt2, gamma, zeta3.
    #[arg(long)]
    pub constant: Option<String>,
    /// Use the rotation x_t = x0 + t·c (mod 1) instead of the expansion of c,
    /// and write the p-value curve over m.
    #[arg(long, requires = "constant")]
    pub rotation: bool,
    /// Rotation start point.
    #[arg(long, default_value = "0")]
    pub x0: String,
    /// Orbit index of the first digit (1: x_1, 0: the seed point).
    #[arg(long, default_value_t = 1)]
    pub first_index: u64,
    #[arg(long, default_value_t = 10)]
    pub base: u32,
    /// Digits to test [default: all given digits, or 50].
    #[arg(short = 'm', long = "m")]
    pub m: Option<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = Method::ALL, value_parser = parse_method)]
    pub tests: Vec<Method>,
    /// Calibrate the lacunary p-value by this many null simulations.
    #[arg(long)]
    pub mc: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Uniform,
    Rotation,
    Logistic,
    Gauss,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub source: Source,
    #[arg(short = 'm', long = "m", default_value_t = 100)]
    pub m: usize,
    /// Base (uniform source only; the others emit decimal digits).
    #[arg(long, default_value_t = 10)]
    pub base: u32,
    /// Number of uniform streams.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Rotation angle: constant name or decimal literal.
    #[arg(long, default_value = "pi")]
    pub xi: String,
    /// Start point [default: 0 for rotations, 0.1 for the logistic map, gamma for the Gauss map].
    #[arg(long)]
    pub x0: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub first_index: u64,
    /// Rotation guard digits.
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    pub guard: usize,
    /// Map working precision in decimal digits [default: 4m].
    #[arg(long)]
    pub precision: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct NullArgs {
    #[arg(long, default_value_t = 10)]
    pub base: u32,
    #[arg(long, value_delimiter = ',', default_values_t = [15usize, 50, 100])]
    pub m_values: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    pub replicates: usize,
}

/// Model family options shared by `power` and `noncentrality`.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct ModelExtras {
    /// Target digits of the cyclic-phase model.
    #[arg(long)]
    pub targets: Option<String>,
    /// Regime path of the regime-switch model.
    #[arg(long)]
    pub path: Option<String>,
    /// Add the baseline harmonic to the regime-switch model.
    #[arg(long)]
    pub baseline: Option<bool>,
    /// Harmonic weights of the smooth model.
    #[arg(long)]
    pub weights: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct PowerArgs {
    /// Starting configuration: table, quick or figure.
    #[arg(long, default_value = "quick")]
    pub preset: String,
    #[arg(long)]
    pub base: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    pub m_values: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
    /// Model names or table labels (i, ii, iii, iv).
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub tests: Option<Vec<Method>>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[command(flatten)]
    pub extras: ModelExtras,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct NoncentralityArgs {
    #[arg(long, default_value = "phase_shift", conflicts_with = "coefficient")]
    pub model: String,
    #[arg(long, default_value_t = 2.0)]
    pub tau: f64,
    /// Constant tilt `j,c,s`: cosine c and sine s on harmonic j at every scale.
    #[arg(long, value_delimiter = ',')]
    pub coefficient: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10)]
    pub base: u32,
    #[arg(short = 'm', long = "m", default_value_t = 100)]
    pub m: usize,
    #[arg(long, default_value_t = 2000)]
    pub draws: usize,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[command(flatten)]
    pub extras: ModelExtras,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ScanInput {
    /// CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "id")]
    pub id_column: String,
    #[arg(long, default_value = "amount")]
    pub amount_column: String,
    /// Mantissa digits per amount.
    #[arg(short = 'm', long = "m", default_value_t = lacunary::mantissa::DEFAULT_MANTISSA_DIGITS)]
    pub m: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.01])]
    pub alphas: Vec<f64>,
    /// Decimal digits for the logarithm [default: m + 30].
    #[arg(long)]
    pub working_precision: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ScanArgs {
    #[command(flatten)]
    pub scan: ScanInput,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub scan: ScanInput,
    /// Record ids [default: discordant records at the first alpha].
    #[arg(long, value_delimiter = ',')]
    pub ids: Option<Vec<String>>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RerunArgs {
    /// manifest.json of an earlier run.
    pub manifest: PathBuf,
}
