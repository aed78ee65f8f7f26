use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "focal", version, about = "Focal-value survey response estimators")]
pub struct Cli {
    /// Run every estimator on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model and write its result document.
    Fit(FitArgs),
    /// Binary logits for every adjacent response pair.
    Stepwise(CommonArgs),
    /// Ordered logit and OLS on the full sample and on focal-free subsets.
    Subsets(CommonArgs),
    /// Simulation-based focal-value bias of OLS coefficients.
    Debias(DebiasArgs),
    /// Draw responses from fitted multinomial profiles and re-estimate.
    Simulate(SimulateArgs),
    /// Generate a synthetic dataset from the two-type model.
    Dgp(DgpArgs),
    /// Tabulate result documents side by side.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input data; overrides `[data] path`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Result document; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated model covariates; overrides `[model] covariates`.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Ignore observation weights.
    #[arg(long)]
    pub no_weights: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Ols,
    Ologit,
    Mlogit,
    Mixture,
}

impl Model {
    pub fn label(self) -> &'static str {
        match self {
            Model::Ols => "ols",
            Model::Ologit => "ologit",
            Model::Mlogit => "mlogit",
            Model::Mixture => "mixture",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Free,
    Tied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EffectsMethodArg {
    Bootstrap,
    AnalyticDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Bottom,
    Middle,
    Top,
}

#[derive(Debug, Clone, Args)]
pub struct EffectsArgs {
    /// Plot-ready marginal-effect table (covariate, response value, effect, CI).
    #[arg(long)]
    pub effects_out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub effects_method: Option<EffectsMethodArg>,
    #[arg(long)]
    pub effect_replicates: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub model: Model,
    #[command(flatten)]
    pub effects: EffectsArgs,
    /// Mixture bootstrap replicates (0 for the full sample only).
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub hops: Option<usize>,
    #[arg(long)]
    pub replicate_hops: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Args)]
pub struct RuleArgs {
    /// Comma-separated focal rules; overrides `[debias] rules`.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub rules: Vec<RuleArg>,
    /// Simulated draws per observation.
    #[arg(long)]
    pub replication: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DebiasArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub rules: RuleArgs,
    /// Covariate defining the group-mean table.
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub group_replicates: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub rules: RuleArgs,
    #[command(flatten)]
    pub effects: EffectsArgs,
    /// Apply the focal rules before drawing.
    #[arg(long)]
    pub modified: bool,
    /// Write the simulated responses as delimited text.
    #[arg(long)]
    pub data_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DgpArgs {
    /// JSON generator parameters; a survey-like default when absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-row latent truth.
    #[arg(long)]
    pub latent: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
