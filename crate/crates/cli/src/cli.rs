//! Clap argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

const SCHEMA_HELP: &str = "\
Output CSV schemas (column sets are stable and never reordered):
  simulate : entity,time,variable,lower,upper
  predict  : entity,time,lower,upper
  evaluate : model,case,replicate,amse_lower,amse_upper,cp_lower,cp_upper
  mc-study : model,case,replicate,amse_lower,amse_upper,cp_lower,cp_upper

evaluate and mc-study also write a JSON summary (same path, .json extension)
with keys {model, case, metric, median, q1, q3, n_replicates}.

Settings resolve as: defaults < --config file < flags < IFR_SEED (seed only).
The config file is one flat JSON object whose keys match the long flag names
(for example {\"basis-k\": 10, \"models\": \"cm,mcm\"}). evaluate additionally
accepts \"train-ids\"/\"test-ids\" as comma-separated entity lists.";

#[derive(Parser)]
#[command(
    name = "ifr",
    version,
    about = "Function-on-function regression for interval-valued functional data",
    after_long_help = SCHEMA_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic interval-valued panel for one simulation case
    Simulate(SimulateArgs),
    /// Fit one model to a panel and persist it as JSON
    Fit(FitArgs),
    /// Apply a persisted fit to a panel and write predicted limits
    Predict(PredictArgs),
    /// Repeated random-split evaluation of models on an observed panel
    Evaluate(EvaluateArgs),
    /// Full Monte Carlo simulation study over cases and models
    McStudy(McStudyArgs),
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Simulation case (1-4)
    #[arg(long)]
    pub case: Option<u8>,
    /// Number of generated curves
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of basis functions used when the panel is refit downstream
    #[arg(long = "basis-k")]
    pub basis_k: Option<usize>,
    /// Spline order (degree + 1)
    #[arg(long)]
    pub order: Option<usize>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Config file (flat JSON object)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct FitArgs {
    /// Model kind: flm, cm, crm, bcrm, or mcm
    #[arg(long)]
    pub model: Option<String>,
    /// Response variable name (all other variables become predictors)
    #[arg(long)]
    pub response: Option<String>,
    /// Number of basis functions
    #[arg(long = "basis-k")]
    pub basis_k: Option<usize>,
    /// Spline order (degree + 1)
    #[arg(long)]
    pub order: Option<usize>,
    /// Monte Carlo method refits
    #[arg(long = "mcm-b")]
    pub mcm_b: Option<usize>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Config file (flat JSON object)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input panel CSV
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output fit JSON path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PredictArgs {
    /// Persisted fit JSON from `ifr fit`
    #[arg(long)]
    pub fit: PathBuf,
    /// Input panel CSV with the predictor variables
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Comma-separated model kinds
    #[arg(long)]
    pub models: Option<String>,
    /// Response variable name
    #[arg(long)]
    pub response: Option<String>,
    /// Number of basis functions
    #[arg(long = "basis-k")]
    pub basis_k: Option<usize>,
    /// Spline order (degree + 1)
    #[arg(long)]
    pub order: Option<usize>,
    /// Significance level for Monte Carlo method bands
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Monte Carlo method refits
    #[arg(long = "mcm-b")]
    pub mcm_b: Option<usize>,
    /// Fraction of entities used for training in each repeat
    #[arg(long = "train-frac")]
    pub train_frac: Option<f64>,
    /// Number of random-split repeats
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Config file (flat JSON object)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input panel CSV
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output CSV path (JSON summary written alongside)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct McStudyArgs {
    /// Comma-separated model kinds
    #[arg(long)]
    pub models: Option<String>,
    /// Comma-separated simulation cases (1-4)
    #[arg(long)]
    pub cases: Option<String>,
    /// Monte Carlo replicates per case
    #[arg(long)]
    pub mc: Option<usize>,
    /// Number of generated curves per replicate
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of basis functions
    #[arg(long = "basis-k")]
    pub basis_k: Option<usize>,
    /// Spline order (degree + 1)
    #[arg(long)]
    pub order: Option<usize>,
    /// Significance level for Monte Carlo method bands
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Monte Carlo method refits
    #[arg(long = "mcm-b")]
    pub mcm_b: Option<usize>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Config file (flat JSON object)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path (JSON summary written alongside)
    #[arg(long)]
    pub out: PathBuf,
}
