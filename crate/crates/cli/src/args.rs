use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pagexplain::fci::{FciConfig, TestKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "pagexplain", version, about = "Causal explanations of black-box predictors with FCI")]
pub struct Cli {
    /// Worker threads for parallel stages (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    /// Simulate shape-indicator data with a surrogate prediction column.
    Simulate(SimulateArgs),
    /// Learn a PAG from a CSV dataset.
    Discover(DiscoverArgs),
    /// Bootstrap stability of feature-to-target relations.
    Stability(StabilityArgs),
    /// Population-limit FCI using d-separation in a known DAG.
    Oracle(OracleArgs),
    /// Re-run a command from its manifest and check the outputs match.
    Replay(ReplayArgs),
}

impl Command {
    pub fn label(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Discover(_) => "discover",
            Command::Stability(_) => "stability",
            Command::Oracle(_) => "oracle",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorArg {
    Perfect,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    #[arg(long, env = "PAGEXPLAIN_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Keep the hidden shape C in the output.
    #[arg(long)]
    pub include_c: bool,
    #[arg(long, value_enum, default_value_t = PredictorArg::Logistic)]
    pub predictor: PredictorArg,
    /// Name of the prediction column.
    #[arg(long, default_value = "Yhat")]
    pub target: String,
    /// CSV path; the schema goes to `<out>.schema`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestArg {
    ChiSquare,
    GSquare,
    FisherZ,
}

impl From<TestArg> for TestKind {
    fn from(t: TestArg) -> Self {
        match t {
            TestArg::ChiSquare => TestKind::ChiSquare,
            TestArg::GSquare => TestKind::GSquare,
            TestArg::FisherZ => TestKind::FisherZ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFormat {
    Dot,
    Json,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FciArgs {
    #[arg(long, env = "PAGEXPLAIN_ALPHA", default_value_t = 0.05)]
    pub alpha: f64,
    /// Largest conditioning set tried; unlimited when absent.
    #[arg(long)]
    pub max_cond_size: Option<usize>,
    #[arg(long, value_enum, default_value_t = TestArg::ChiSquare)]
    pub test: TestArg,
    /// Skip the Possible-D-SEP stage.
    #[arg(long)]
    pub no_possible_dsep: bool,
}

impl FciArgs {
    pub fn config(&self) -> FciConfig {
        FciConfig {
            alpha: self.alpha,
            max_cond_size: self.max_cond_size,
            enable_possible_dsep: !self.no_possible_dsep,
            test: self.test.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Column types; defaults to `<data>.schema`.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Background knowledge file.
    #[arg(long)]
    pub knowledge: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DiscoverArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// Declare this column a non-ancestor of every other column.
    #[arg(long)]
    pub target: Option<String>,
    #[command(flatten)]
    pub fci: FciArgs,
    #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
    pub format: GraphFormat,
    /// Graph path; diagnostics go to `<out>.diagnostics.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[arg(long)]
    pub target: String,
    #[command(flatten)]
    pub fci: FciArgs,
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
    #[arg(long, env = "PAGEXPLAIN_SEED", default_value_t = 1)]
    pub base_seed: u64,
    /// Draw this fraction of rows without replacement instead of bootstrapping.
    #[arg(long)]
    pub subsample: Option<f64>,
    /// Writes `<prefix>.json` and `<prefix>.csv`.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OracleArgs {
    /// `fig4a` for the built-in shapes DAG, or a JSON DAG file.
    #[arg(long)]
    pub truth: String,
    /// Observed nodes; all nodes when absent.
    #[arg(long, value_delimiter = ',')]
    pub observe: Option<Vec<String>>,
    #[arg(long)]
    pub knowledge: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value_t = false)]
    pub no_possible_dsep: bool,
    #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
    pub format: GraphFormat,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
