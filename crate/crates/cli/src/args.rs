//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use stdcoder::corpus::StreamMode;

#[derive(Debug, Parser)]
#[command(
    name = "stdcoder",
    version,
    about = "Coding-time inference and standard-coder effort analysis"
)]
pub struct Cli {
    /// Root seed; every stage derives its own stream from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a commit corpus from git repositories or NDJSON exports.
    Ingest(IngestArgs),
    /// Simulate developers with known coding ground truth.
    Simulate(SimulateArgs),
    /// Fit the coding-time HMM for one author or for every author.
    TrainHmm(TrainHmmArgs),
    /// Posterior coding time for every commit interval.
    CodingTimes(CodingTimesArgs),
    /// Build a token dictionary for one language.
    BuildDict(BuildDictArgs),
    /// Turn commits into bag-of-token feature vectors.
    Featurize(FeaturizeArgs),
    /// Train the standard coder on features and coding-time samples.
    TrainMdn(TrainMdnArgs),
    /// Standard coding time of a patch or of a feature file.
    Predict(PredictArgs),
    /// Validation and counterfactual analyses.
    Analyze(AnalyzeArgs),
    /// Run every stage from a config file, reusing unchanged outputs.
    Pipeline(PipelineArgs),
}

/// How commits are grouped into streams.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Streams {
    #[default]
    AuthorProject,
    AuthorGlobal,
}

impl From<Streams> for StreamMode {
    fn from(s: Streams) -> Self {
        match s {
            Streams::AuthorProject => StreamMode::AuthorProject,
            Streams::AuthorGlobal => StreamMode::AuthorGlobal,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct IngestArgs {
    /// Git working copies or NDJSON commit exports.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Filter rules as JSON; defaults apply when omitted.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub mode: Streams,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    #[default]
    Default,
    Regime,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t)]
    pub scenario: ScenarioKind,
    /// Total weeks, or weeks per regime for `regime`.
    #[arg(long)]
    pub weeks: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub developers: usize,
    /// Scenario as TOML or JSON, replacing the named preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the commits as a corpus with empty diffs.
    #[arg(long)]
    pub corpus_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct HmmFlags {
    /// Training config as TOML or JSON; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub min_commits: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainHmmArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, conflicts_with = "all")]
    pub author: Option<String>,
    /// Train every author in the corpus.
    #[arg(long)]
    pub all: bool,
    /// Model file for `--author`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Model directory for `--all`.
    #[arg(long)]
    pub models_dir: Option<PathBuf>,
    /// Per-author status report for `--all`.
    #[arg(long)]
    pub status: Option<PathBuf>,
    #[command(flatten)]
    pub train: HmmFlags,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CodingTimesArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub models_dir: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t)]
    pub mode: Streams,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BuildDictArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long = "lang", alias = "language")]
    pub language: String,
    /// Frequent words beyond separators and keywords.
    #[arg(long)]
    pub top_n: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct MdnFlags {
    /// Training config as TOML or JSON; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub components: Option<usize>,
    /// Hidden widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub holdout_fraction: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainMdnArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub coding_times: PathBuf,
    /// Dictionary the features were built with; its hash is stored in the model.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    #[command(flatten)]
    pub train: MdnFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, Args, Serialize, Deserialize)]
pub struct BoundsArgs {
    /// Lower truncation bound in hours.
    #[arg(long, default_value_t = 0.0)]
    pub lower: f64,
    /// Upper truncation bound in hours.
    #[arg(long, default_value_t = 1.0)]
    pub upper: f64,
}

impl Default for BoundsArgs {
    fn default() -> Self {
        BoundsArgs { lower: 0.0, upper: 1.0 }
    }
}

impl BoundsArgs {
    pub fn pair(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Unified diff to score; the result goes to standard output.
    #[arg(long, conflicts_with = "features")]
    pub patch: Option<PathBuf>,
    /// Feature NDJSON to score in batch.
    #[arg(long, requires = "out")]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub bounds: BoundsArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(subcommand)]
    pub analysis: Analysis,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReportOut {
    /// JSON report.
    #[arg(long)]
    pub out: PathBuf,
    /// Plot-data CSV; defaults to the report path with a `.csv` extension.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

impl ReportOut {
    pub fn plot_path(&self) -> PathBuf {
        self.plot_data.clone().unwrap_or_else(|| self.out.with_extension("csv"))
    }
}

#[derive(Debug, Subcommand)]
pub enum Analysis {
    /// Binned predicted vs actual coding time on short holdout intervals.
    Yy(YyArgs),
    /// Hindsight-minus-live probability correction per live-probability decile.
    Correction(CorrectionArgs),
    /// Per-project expected coding time against standard coding time.
    ProjectCorr(ProjectCorrArgs),
    /// Spearman of surface criteria against coding time and prediction.
    Table1(Table1Args),
    /// Best deleted-line weight for added + β·deleted.
    Beta(BetaArgs),
    /// Standard coding time of changes spread across more files.
    FileSpread(FileSpreadArgs),
    /// Cost of using one token instead of another.
    TokenSwap(TokenSwapArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct YyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub coding_times: PathBuf,
    #[arg(long, default_value_t = 250)]
    pub bins: usize,
    /// Only intervals shorter than this count as ground truth.
    #[arg(long, default_value_t = 60)]
    pub max_interval_minutes: usize,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    #[command(flatten)]
    pub report: ReportOut,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CorrectionArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub models_dir: PathBuf,
    /// Restrict to one author.
    #[arg(long)]
    pub author: Option<String>,
    /// Skip authors with fewer commits.
    #[arg(long, default_value_t = 0)]
    pub min_commits: usize,
    #[command(flatten)]
    pub report: ReportOut,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ProjectCorrArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub coding_times: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Projects need this many commits from main contributors.
    #[arg(long, default_value_t = 50)]
    pub min_commits: usize,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    #[command(flatten)]
    pub report: ReportOut,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Table1Args {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub coding_times: PathBuf,
    /// Use every commit instead of the model's holdout.
    #[arg(long)]
    pub all_commits: bool,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    #[command(flatten)]
    pub report: ReportOut,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BetaArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub coding_times: PathBuf,
    #[command(flatten)]
    pub report: ReportOut,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FileSpreadArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub max_files: u32,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    #[command(flatten)]
    pub report: ReportOut,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TokenSwapArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long = "from")]
    pub token_a: String,
    #[arg(long = "to")]
    pub token_b: String,
    #[arg(long, default_value_t = 10_000)]
    pub resamples: usize,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    #[command(flatten)]
    pub report: ReportOut,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PipelineArgs {
    /// Pipeline config as TOML or JSON.
    #[arg(long)]
    pub config: PathBuf,
}
