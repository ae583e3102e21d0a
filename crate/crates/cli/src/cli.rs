//! Command-line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const SUBCOMMANDS: [&str; 10] = [
    "fit-signatures",
    "score",
    "augment",
    "fit-factors",
    "evolve",
    "project",
    "surv-search",
    "surv-predict",
    "km",
    "simulate",
];

#[derive(Debug, Parser)]
#[command(name = "sigfactor", version, about = "Signature scoring, sparse factor models and survival model search")]
pub struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "SIGFACTOR_THREADS")]
    pub threads: Option<usize>,
    /// key=value file with flag defaults for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sparse multivariate regression of expression on a design.
    FitSignatures(FitSignaturesArgs),
    /// Signature scores for samples of a dataset.
    Score(ScoreArgs),
    /// Prepend score rows to a dataset as metagenes.
    Augment(AugmentArgs),
    /// Sparse latent factor model with fixed founders.
    FitFactors(FitFactorsArgs),
    /// Evolutionary growth of a factor model.
    Evolve(EvolveArgs),
    /// Latent factor scores for new samples.
    Project(ProjectArgs),
    /// Weibull shotgun stochastic search.
    SurvSearch(SurvSearchArgs),
    /// Model-averaged median survival.
    SurvPredict(SurvPredictArgs),
    /// Kaplan-Meier curves, optionally split at a covariate median.
    Km(KmArgs),
    /// Synthetic datasets with planted truth.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::FitSignatures(_) => "fit-signatures",
            Command::Score(_) => "score",
            Command::Augment(_) => "augment",
            Command::FitFactors(_) => "fit-factors",
            Command::Evolve(_) => "evolve",
            Command::Project(_) => "project",
            Command::SurvSearch(_) => "surv-search",
            Command::SurvPredict(_) => "surv-predict",
            Command::Km(_) => "km",
            Command::Simulate(_) => "simulate",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McmcArgs {
    #[arg(long, default_value_t = 5000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 2000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Sparsity prior shared by regression effects and factor loadings.
#[derive(Debug, Clone, Args, Serialize)]
pub struct PriorArgs {
    #[arg(long, default_value_t = 1.0)]
    pub inclusion_a: f64,
    #[arg(long, default_value_t = 99.0)]
    pub inclusion_b: f64,
    #[arg(long, default_value_t = 2.0)]
    pub slab_shape: f64,
    #[arg(long, default_value_t = 1.0)]
    pub slab_scale: f64,
    #[arg(long, default_value_t = 2.0)]
    pub noise_shape: f64,
    #[arg(long, default_value_t = 0.2)]
    pub noise_scale: f64,
    #[arg(long, default_value_t = 100.0)]
    pub intercept_var: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ControlArgs {
    /// Variables with this id prefix are artefact-control probes.
    #[arg(long, default_value = "AFFX")]
    pub control_prefix: String,
    /// Number of artefact-control components to use.
    #[arg(long, default_value_t = 0)]
    pub controls: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct FitSignaturesArgs {
    #[arg(long)]
    pub expression: PathBuf,
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub control: ControlArgs,
    #[arg(long, default_value_t = 5.5)]
    pub min_median: f64,
    #[arg(long, default_value_t = 0.5)]
    pub min_range: f64,
    /// Model every non-control variable.
    #[arg(long)]
    pub no_filter: bool,
    /// Inclusion probability threshold for the skeleton summary.
    #[arg(long, default_value_t = 0.99)]
    pub threshold: f64,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ScoreArgs {
    /// Output directory of fit-signatures.
    #[arg(long)]
    pub signatures: PathBuf,
    #[arg(long)]
    pub expression: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Rescale scores to the average gene moments of this dataset.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Rescale scores to the scored dataset's own gene moments.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, default_value = "AFFX")]
    pub control_prefix: String,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct AugmentArgs {
    #[arg(long)]
    pub expression: PathBuf,
    /// Score table (effects x samples).
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "AFFX")]
    pub control_prefix: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FactorArgs {
    /// Founder ids, comma separated, in factor order.
    #[arg(long, value_delimiter = ',')]
    pub founders: Vec<String>,
    /// File with one founder id per line, appended after `--founders`.
    #[arg(long)]
    pub founders_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub dp_concentration: f64,
    #[arg(long, default_value_t = 0.99)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct FitFactorsArgs {
    #[arg(long)]
    pub expression: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Variables to model besides the founders (one id per line); default all non-control variables.
    #[arg(long)]
    pub variables: Option<PathBuf>,
    #[command(flatten)]
    pub factor: FactorArgs,
    #[command(flatten)]
    pub control: ControlArgs,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EvolveArgs {
    #[arg(long)]
    pub expression: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub factor: FactorArgs,
    #[command(flatten)]
    pub control: ControlArgs,
    #[arg(long, default_value_t = 500)]
    pub max_variables: usize,
    #[arg(long, default_value_t = 30)]
    pub max_factors: usize,
    #[arg(long, default_value_t = 25)]
    pub genes_per_iteration: usize,
    #[arg(long, default_value_t = 0.75)]
    pub inclusion_threshold: f64,
    /// Reconstructed control: fraction of modeled variables with shared residual structure.
    #[arg(long, default_value_t = 0.15)]
    pub factor_add_threshold: f64,
    #[arg(long, default_value_t = 40)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 300)]
    pub impute_sweeps: usize,
    #[arg(long, default_value_t = 100)]
    pub impute_burnin: usize,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ProjectArgs {
    /// Output directory of fit-factors or evolve.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub expression: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Recompute artefact controls from the new dataset's control probes.
    #[arg(long)]
    pub with_controls: bool,
    #[arg(long, default_value = "AFFX")]
    pub control_prefix: String,
    /// Flat score prior (generalized least squares).
    #[arg(long)]
    pub gls: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SurvivalInput {
    /// Table `id, time, event, covariates...`.
    #[arg(long)]
    pub survival: PathBuf,
    /// Extra covariates: rows are covariates, columns are record ids.
    #[arg(long)]
    pub covariates: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SurvSearchArgs {
    #[command(flatten)]
    pub input: SurvivalInput,
    #[arg(long)]
    pub out: PathBuf,
    /// Candidate covariates, comma separated; default all.
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<String>,
    #[arg(long, default_value_t = 12)]
    pub max_subset_size: usize,
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub log_index_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub log_index_sd: f64,
    #[arg(long, default_value_t = 4.0)]
    pub coef_var: f64,
    /// Proper normal prior variance for the intercept; flat when absent.
    #[arg(long)]
    pub intercept_var: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SurvPredictArgs {
    /// Output directory of surv-search.
    #[arg(long)]
    pub ledger: PathBuf,
    #[command(flatten)]
    pub input: SurvivalInput,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub top_m: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct KmArgs {
    #[command(flatten)]
    pub input: SurvivalInput,
    #[arg(long)]
    pub out: PathBuf,
    /// Covariate whose median splits records into low and high risk.
    #[arg(long)]
    pub stratify_by: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulateKind {
    Regression,
    Factor,
    Survival,
    Pipeline,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: SimulateKind,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub variables: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Planted regression coefficients.
    #[arg(long, default_value_t = 50)]
    pub planted: usize,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub noise_var: f64,
    #[arg(long, default_value_t = 3)]
    pub factors: usize,
    /// Non-anchor members per planted factor.
    #[arg(long, default_value_t = 30)]
    pub members: usize,
    #[arg(long, default_value_t = 1.0)]
    pub loading_scale: f64,
    /// Artefact-control probes added to expression outputs.
    #[arg(long, default_value_t = 0)]
    pub control_probes: usize,
    #[arg(long, default_value_t = 6)]
    pub covariates: usize,
    #[arg(long, default_value_t = 1.5)]
    pub weibull_index: f64,
    #[arg(long, default_value_t = 0.3)]
    pub censoring_rate: f64,
}
