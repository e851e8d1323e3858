use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Inject, detect and quantify hallucinations in relation-extraction datasets.
#[derive(Debug, Parser)]
#[command(name = "hallu-audit", version)]
pub struct Cli {
    /// Print errors as one JSON object on standard error.
    #[arg(long, global = true)]
    pub json_errors: bool,

    /// Worker threads for parallel steps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a WebNLG XML or DocRED JSON file to canonical JSONL.
    Ingest(IngestArgs),
    /// Corpus statistics of a canonical dataset.
    Stats(StatsArgs),
    #[command(subcommand)]
    Corrupt(CorruptCommand),
    /// Rewrite every text with a generative backend.
    Augment(AugmentArgs),
    #[command(subcommand)]
    Build(BuildCommand),
    /// Classify texts as clean or hallucinated.
    Detect(DetectArgs),
    /// NER detection over a threshold grid.
    Sweep(SweepArgs),
    #[command(subcommand)]
    Quantify(QuantifyCommand),
    #[command(subcommand)]
    Evaluate(EvaluateCommand),
    /// Run an ordered list of steps from a JSON file.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SourceFormat {
    Webnlg,
    Docred,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, value_enum)]
    pub format: SourceFormat,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset name; defaults to the input file stem.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, value_enum, default_value = "train")]
    pub split: SplitArg,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Write the JSON here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeededIo {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum CorruptCommand {
    /// Remove one triple from every point with at least two.
    MissingTriples(SeededIo),
    /// Append an unrelated point's text to every text.
    LongerTexts(SeededIo),
    /// Merge random pairs of test points.
    FuseTest(SeededIo),
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    /// Base URL of an inference service.
    #[arg(long, env = "HALLU_BACKEND_URL")]
    pub backend_url: Option<String>,
    /// Use table-driven backends built from this canonical dataset, whose
    /// annotations plus missing triples are taken as everything its texts say.
    #[arg(long, conflicts_with = "mock")]
    pub oracle: Option<PathBuf>,
    /// Use the built-in heuristic backends.
    #[arg(long)]
    pub mock: bool,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub io: SeededIo,
    /// Prompt template id.
    #[arg(long)]
    pub prompt: String,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Subcommand)]
pub enum BuildCommand {
    /// Group texts by annotation into clean and hallucinated sets.
    DetectionSet {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Delete annotated triples and record them as missing.
    QuantSet {
        #[command(flatten)]
        io: SeededIo,
        /// Delete this share of each annotation instead of one triple.
        #[arg(long)]
        fraction: Option<f64>,
    },
    /// Draw samples with one clean and one hallucinated text each.
    BalancedSet {
        #[command(flatten)]
        io: SeededIo,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ner,
    Nli,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long, required_if_eq("method", "ner"))]
    pub threshold: Option<f64>,
    /// Canonical dataset or detection set.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Detection set.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.95)]
    pub hi: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: ReportFormat,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Subcommand)]
pub enum QuantifyCommand {
    /// Count entailed, unannotated triples between extracted entities.
    Ener {
        /// Comma-separated relation names.
        #[arg(long, value_delimiter = ',', required = true)]
        relations: Vec<String>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchArg {
    Exact,
    Similar,
}

#[derive(Debug, Subcommand)]
pub enum EvaluateCommand {
    /// Clean-as-positive precision, recall and F1 of a verdict file.
    Detection {
        /// Detection set the verdicts were produced from.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        verdicts: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Triple-level scores of a quantification report.
    Quant {
        /// Canonical dataset with recorded missing triples.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        r#match: MatchArg,
        /// Similarity threshold for `--match similar`.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
    },
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    pub config: PathBuf,
}
