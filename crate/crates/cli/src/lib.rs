//! One binary, subcommand style. All paths are explicit, progress goes
//! to stderr, and stdout is reserved for machine-readable results.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 remote/LLM
//! error.

pub mod report;

mod commands;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use relkit::dedup::DedupError;
use relkit::judge::JudgeError;
use relkit::llm::LlmError;
use relkit::metrics::MetricsError;
use relkit::prompt::PromptError;
use relkit::trec::{DupPolicy, TrecError};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Llm(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Llm(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Llm(m) => f.write_str(m),
        }
    }
}

impl From<TrecError> for CliError {
    fn from(e: TrecError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DedupError> for CliError {
    fn from(e: DedupError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PromptError> for CliError {
    fn from(e: PromptError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Llm(other.to_string()),
        }
    }
}

impl From<JudgeError> for CliError {
    fn from(e: JudgeError) -> Self {
        match e {
            JudgeError::Llm(inner) => CliError::from(inner),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DupPolicyArg {
    /// Duplicate (topic, passage) judgments are an error.
    Error,
    /// The last judgment of a duplicated pair wins.
    Last,
}

impl From<DupPolicyArg> for DupPolicy {
    fn from(value: DupPolicyArg) -> Self {
        match value {
            DupPolicyArg::Error => DupPolicy::Error,
            DupPolicyArg::Last => DupPolicy::LastWins,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Four,
    Binary,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GainArg {
    /// Gain equals the grade (the DL-track leaderboard convention).
    Linear,
    /// Gain is 2^grade - 1.
    Exp,
}

impl From<GainArg> for relkit::metrics::GainScheme {
    fn from(value: GainArg) -> Self {
        match value {
            GainArg::Linear => relkit::metrics::GainScheme::Linear,
            GainArg::Exp => relkit::metrics::GainScheme::Exponential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    /// OpenAI-compatible HTTP endpoint.
    Remote,
    /// Deterministic offline term-overlap grader.
    Mock,
}

#[derive(Debug, Parser)]
#[command(
    name = "relkit",
    version,
    about = "Judge query-passage relevance with an LLM and compare judgment sets",
    after_help = "File formats are documented in FORMATS.md. Exit codes: \
                  0 success, 1 usage error, 2 data error, 3 remote/LLM error."
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Grade a pool of (topic, passage) pairs and write predicted qrels
    Judge(JudgeArgs),
    /// Print the label histogram and topic count of a qrels file
    Stats(StatsArgs),
    /// Drop near-duplicate passages from qrels (and runs), keeping cluster canonicals
    Dedup(DedupArgs),
    /// Cohen's kappa and confusion matrix between two qrels files
    Agreement(AgreementArgs),
    /// Rank correlation between leaderboards under two qrels files
    Correlate(CorrelateArgs),
}

#[derive(Debug, Args)]
pub struct JudgeArgs {
    /// Topics TSV: `topic_id<TAB>query text`
    #[arg(long)]
    pub topics: PathBuf,
    /// Passage corpus, JSON lines with "id" and "text" members
    #[arg(long)]
    pub corpus: PathBuf,
    /// Corpus member holding the passage id
    #[arg(long, default_value = "id")]
    pub corpus_id_field: String,
    /// Corpus member holding the passage text
    #[arg(long, default_value = "text")]
    pub corpus_text_field: String,
    /// Index the corpus on disk instead of loading it into memory
    #[arg(long)]
    pub indexed_corpus: bool,
    /// Judge the pairs of this qrels file (grades ignored)
    #[arg(long, conflicts_with_all = ["pool_runs", "depth"])]
    pub pool_qrels: Option<PathBuf>,
    /// Judge the union of top --depth passages over the runs in this directory
    #[arg(long, requires = "depth")]
    pub pool_runs: Option<PathBuf>,
    /// Pool depth for --pool-runs
    #[arg(long)]
    pub depth: Option<usize>,
    /// Where the predicted qrels go
    #[arg(long)]
    pub out: PathBuf,
    /// JSON-lines audit log; re-running with the same log resumes the job
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BackendArg::Remote)]
    pub backend: BackendArg,
    #[arg(long, default_value = "gpt-4o")]
    pub model: String,
    #[arg(long, default_value = "https://api.openai.com/v1/chat/completions")]
    pub endpoint: String,
    /// Environment variable holding the API key (never passed directly)
    #[arg(long, default_value = "OPENAI_API_KEY")]
    pub api_key_env: String,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 1.0)]
    pub top_p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub frequency_penalty: f64,
    #[arg(long, default_value_t = 0.0)]
    pub presence_penalty: f64,
    #[arg(long, default_value_t = 100)]
    pub max_output_tokens: u32,
    #[arg(long, default_value_t = 60)]
    pub timeout_secs: u64,
    #[arg(long, default_value_t = 5)]
    pub max_retries: u32,
    /// Concurrent in-flight requests
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    /// Response cache directory; hits skip the network and the bill
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Alternative prompt template with {query} and {passage} placeholders
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// Minimum milliseconds between request dispatches
    #[arg(long)]
    pub throttle_ms: Option<u64>,
    /// Duplicate policy when parsing --pool-qrels
    #[arg(long, value_enum, default_value_t = DupPolicyArg::Error)]
    pub dedup_policy: DupPolicyArg,
    /// Print a JSON summary on stdout
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Qrels file
    pub qrels: PathBuf,
    #[arg(long, value_enum, default_value_t = DupPolicyArg::Error)]
    pub dedup_policy: DupPolicyArg,
    /// Print the report as JSON instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct DedupArgs {
    /// Qrels file to deduplicate
    #[arg(long)]
    pub qrels: PathBuf,
    /// Cluster file: `canonical_id<TAB>member_id[,member_id...]`
    #[arg(long)]
    pub clusters: PathBuf,
    /// Also deduplicate every run file in this directory
    #[arg(long)]
    pub runs_dir: Option<PathBuf>,
    /// Output directory (deduped qrels keeps its file name; runs go to `<out-dir>/runs/`)
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = DupPolicyArg::Error)]
    pub dedup_policy: DupPolicyArg,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    /// Reference qrels (confusion-matrix rows)
    pub qrels_a: PathBuf,
    /// Candidate qrels (confusion-matrix columns)
    pub qrels_b: PathBuf,
    #[arg(long, value_enum, default_value_t = ScaleArg::Both)]
    pub scale: ScaleArg,
    /// Write the confusion matrix as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DupPolicyArg::Error)]
    pub dedup_policy: DupPolicyArg,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Directory of run files (unparseable files are skipped with a warning)
    #[arg(long)]
    pub runs_dir: PathBuf,
    #[arg(long)]
    pub qrels_a: PathBuf,
    #[arg(long)]
    pub qrels_b: PathBuf,
    /// nDCG cutoff
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = GainArg::Linear)]
    pub gain: GainArg,
    /// Write per-run paired scores as CSV (header: run,score_a,score_b)
    #[arg(long)]
    pub scatter: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DupPolicyArg::Error)]
    pub dedup_policy: DupPolicyArg,
    #[arg(long)]
    pub json: bool,
}

/// Parses arguments from the process environment, runs the requested
/// command, and returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Judge(args) => commands::judge::run(args),
        Command::Stats(args) => commands::stats::run(args),
        Command::Dedup(args) => commands::dedup::run(args),
        Command::Agreement(args) => commands::agreement::run(args),
        Command::Correlate(args) => commands::correlate::run(args),
    }
}
