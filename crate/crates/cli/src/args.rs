use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use minipatch::{Scheme, SelectorSpec, ThresholdMode};

#[derive(Debug, Parser)]
#[command(name = "minipatch", version, about = "Minipatch ensemble feature selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select stable features from a data file.
    Select(SelectArgs),
    /// Run selection on synthetic Toeplitz-design data and score it with F1.
    Simulate(SimulateArgs),
    /// Estimate the familywise error rate on pure-noise data.
    Fwer(FwerArgs),
    /// Write a synthetic dataset to disk.
    Generate(GenerateArgs),
}

/// Parses `ols` or `uni:K`; the OLS level comes from `--alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectorKind {
    Ols,
    Univariate(usize),
}

impl std::str::FromStr for SelectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ols" {
            return Ok(SelectorKind::Ols);
        }
        match s.strip_prefix("uni:").map(str::parse::<usize>) {
            Some(Ok(k)) if k > 0 => Ok(SelectorKind::Univariate(k)),
            _ => Err(format!("unknown selector `{s}` (expected ols or uni:K with K >= 1)")),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// Feature sampling scheme: uniform, ee or prob.
    #[arg(long, default_value = "ee")]
    pub sampler: Scheme,
    /// Observations per minipatch.
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// Features per minipatch.
    #[arg(long = "m")]
    pub m: Option<usize>,
    #[arg(long = "pi-thr", default_value_t = 0.5)]
    pub pi_thr: f64,
    /// fixed, kde or oracle:K.
    #[arg(long, default_value = "fixed")]
    pub threshold: ThresholdMode,
    /// Burn-in epochs for the adaptive samplers.
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long = "pi-active", default_value_t = 0.1)]
    pub pi_active: f64,
    /// Iterations after burn-in for the exploitation weight to reach 1 (default 5 * ceil(M / m)).
    #[arg(long = "gamma-ramp-iters")]
    pub gamma_ramp_iters: Option<usize>,
    #[arg(long = "tau-l", default_value_t = 30)]
    pub tau_l: usize,
    #[arg(long = "tau-u", default_value_t = 90)]
    pub tau_u: usize,
    #[arg(long, default_value_t = 100)]
    pub patience: usize,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// ols or uni:K.
    #[arg(long, default_value = "ols")]
    pub selector: SelectorKind,
    /// Familywise level of the thresholded-OLS selector within each minipatch.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-iteration progress on stderr.
    #[arg(long)]
    pub verbose: bool,
}

impl EngineArgs {
    pub fn selector_spec(&self) -> SelectorSpec {
        match self.selector {
            SelectorKind::Ols => SelectorSpec::ThresholdedOls { alpha_sel: self.alpha },
            SelectorKind::Univariate(top_k) => SelectorSpec::UnivariateTopk { top_k },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    /// CSV (with header) or MPFSMAT1 binary matrix.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the response column in a CSV file (default: first column).
    #[arg(long, conflicts_with = "binary")]
    pub response: Option<String>,
    /// Read `--data` as an MPFSMAT1 binary file.
    #[arg(long)]
    pub binary: bool,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[arg(long = "N", default_value_t = 1000)]
    pub n_obs: usize,
    #[arg(long = "M", default_value_t = 2000)]
    pub n_features: usize,
    /// Number of true features.
    #[arg(long, default_value_t = 20)]
    pub support: usize,
    #[arg(long, default_value_t = 0.95)]
    pub rho: f64,
    #[arg(long, default_value_t = 5.0)]
    pub snr: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// Sweep minipatch sizes instead of a single run per replicate.
    #[arg(long)]
    pub sweep: bool,
    /// Sweep values of m as multiples of the support size.
    #[arg(long = "sweep-m-mult", value_delimiter = ',', default_value = "3,5,8,10")]
    pub sweep_m_mult: Vec<usize>,
    /// Sweep values of n as multiples of m.
    #[arg(long = "sweep-n-mult", value_delimiter = ',', default_value = "2,5,10")]
    pub sweep_n_mult: Vec<usize>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FwerArgs {
    #[arg(long = "M", default_value_t = 100)]
    pub n_features: usize,
    #[arg(long = "N", default_value_t = 400)]
    pub n_obs: usize,
    #[arg(long = "n", default_value_t = 200)]
    pub n: usize,
    #[arg(long = "m", default_value_t = 10)]
    pub m: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long = "pi-thr", default_value_t = 0.5)]
    pub pi_thr: f64,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    /// Minipatches per replicate (default 20 * ceil(M / m)).
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FileFormat,
    /// Also write the ground truth (support, coefficients) as JSON.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}
