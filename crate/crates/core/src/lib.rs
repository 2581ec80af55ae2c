//! relkit: grade query-passage relevance with an LLM judge and quantify
//! how the resulting judgments compare to a reference set.
//!
//! The pieces, bottom to top:
//!
//! - [`trec`]: qrels, runs, topics, and passage-corpus file formats.
//! - [`dedup`]: near-duplicate cluster filtering for qrels and runs.
//! - [`prompt`]: the assessment prompt and reply parsing.
//! - [`llm`]: an OpenAI-compatible completion client with caching,
//!   retries, and a deterministic mock backend.
//! - [`judge`]: the end-to-end judging pipeline with a resumable audit
//!   log.
//! - [`metrics`]: Cohen's kappa, confusion matrices, nDCG@k, Kendall
//!   tau-b, and Spearman's rho over system leaderboards.

pub mod dedup;
pub mod judge;
pub mod llm;
pub mod metrics;
pub mod prompt;
pub mod trec;

pub use trec::{Grade, PassageCorpus, Qrels, RunList, Topics};
