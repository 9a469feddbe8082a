use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use floodxai::dataset::ImputeStrategy;
use floodxai::shap::CoalitionBudget;
use floodxai::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "floodxai", version, about = "Flood classifiers and their explanations from monthly rainfall")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Record count, imputation log and monthly rainfall means.
    Summary(SummaryArgs),
    /// Train one classifier and write it as JSON.
    Train(TrainArgs),
    /// Score trained models on the split recorded in their metadata.
    Evaluate(EvaluateArgs),
    /// Explain a trained model with Kernel SHAP and/or LIME.
    Explain(ExplainArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Impute {
    Mean,
    Zero,
}

impl From<Impute> for ImputeStrategy {
    fn from(value: Impute) -> Self {
        match value {
            Impute::Mean => ImputeStrategy::ColumnMean,
            Impute::Zero => ImputeStrategy::Zero,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Rainfall CSV with YEAR, JAN..DEC and a flood-label column.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the flood-label column [default: FLOODS, or the model's].
    #[arg(long)]
    pub label_column: Option<String>,
    /// How missing rainfall cells are filled [default: mean, or the model's].
    #[arg(long, value_enum)]
    pub impute: Option<Impute>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Print the JSON report instead of text.
    #[arg(long)]
    pub json: bool,
    /// Also write a static SVG chart to this path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SummaryArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Write the JSON report to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the imputation log (year,month,value,strategy) to this path.
    #[arg(long)]
    pub provenance: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model kind: logistic, knn, tree or svm.
    #[arg(long)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Training fraction of the shuffled split.
    #[arg(long, default_value_t = 0.7)]
    pub split: f64,
    /// Where to write the model JSON. A manifest is written next to it.
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_samples_leaf: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Learning rate of the logistic or SVM optimiser.
    #[arg(long, allow_negative_numbers = true)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// L2 penalty of logistic regression.
    #[arg(long, allow_negative_numbers = true)]
    pub l2: Option<f64>,
    /// Print the JSON training report instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Partition {
    Test,
    Train,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model JSON files; repeat the flag for several models.
    #[arg(long, required = true, num_args = 1..)]
    pub model: Vec<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Override the split seed stored with the models.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the training fraction stored with the models.
    #[arg(long)]
    pub split: Option<f64>,
    /// Which partition to score.
    #[arg(long, value_enum, default_value_t = Partition::Test)]
    pub partition: Partition,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Write the JSON report to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    GlobalShap,
    LocalShap,
    LocalLime,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackgroundChoice {
    Trainset,
    Mean,
}

pub fn parse_budget(raw: &str) -> Result<CoalitionBudget, String> {
    if raw.eq_ignore_ascii_case("exhaustive") {
        return Ok(CoalitionBudget::Exhaustive);
    }
    raw.parse::<usize>()
        .map(CoalitionBudget::Samples)
        .map_err(|_| format!("expected a positive integer or \"exhaustive\", got {raw:?}"))
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Year to explain (local-shap, local-lime, compare).
    #[arg(long)]
    pub year: Option<i32>,
    /// Seed for coalition sampling and perturbations.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Background for absent features.
    #[arg(long, value_enum, default_value_t = BackgroundChoice::Trainset)]
    pub background: BackgroundChoice,
    /// Kernel SHAP coalition budget, or "exhaustive".
    #[arg(long, default_value = "2048", value_parser = parse_budget)]
    pub samples: CoalitionBudget,
    /// Number of LIME perturbation samples.
    #[arg(long, default_value_t = 2000)]
    pub perturbations: usize,
    /// Quantile bins per feature for LIME.
    #[arg(long, default_value_t = 4)]
    pub bins: usize,
    /// LIME proximity kernel width (standardised units); default 0.75·√M.
    #[arg(long, allow_negative_numbers = true)]
    pub kernel_width: Option<f64>,
    /// Number of conditions LIME may use.
    #[arg(long, default_value_t = 6)]
    pub top_features: usize,
    /// Size of the SHAP top set in compare mode.
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Write the JSON report to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
