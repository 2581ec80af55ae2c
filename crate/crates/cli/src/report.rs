//! Machine-readable report shapes for `--json` output. Everything here
//! deserializes back, so downstream scripts can rely on the schema.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Label histogram plus topic count for one qrels set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QrelsCounts {
    pub labels: BTreeMap<String, u64>,
    pub topics: usize,
    pub entries: u64,
}

impl QrelsCounts {
    pub fn from_qrels(qrels: &relkit::Qrels) -> Self {
        let stats = qrels.stats();
        Self {
            labels: stats
                .histogram
                .iter()
                .map(|(g, c)| (g.to_string(), c))
                .collect(),
            topics: stats.topic_count,
            entries: stats.histogram.total(),
        }
    }
}

/// `stats` output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    #[serde(flatten)]
    pub counts: QrelsCounts,
}

/// `dedup` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupReport {
    pub before: QrelsCounts,
    pub after: QrelsCounts,
    pub runs: Vec<RunDedupRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDedupRow {
    pub file: String,
    pub tag: String,
    pub entries_before: usize,
    pub entries_after: usize,
}

/// `agreement` output. Qrels A plays the reference (human) role, qrels B
/// the candidate (LLM) role: confusion rows are A's grades, columns B's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub aligned_pairs: usize,
    pub a_only: usize,
    pub b_only: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_four: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_binary: Option<f64>,
    pub confusion: [[u64; 4]; 4],
    /// Each confusion row scaled to sum to 1 (all-zero rows stay zero).
    pub confusion_row_normalized: [[f64; 4]; 4],
}

/// `correlate` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelateReport {
    pub runs: usize,
    pub k: usize,
    pub kendall_tau: f64,
    pub spearman_rho: f64,
    pub scores: Vec<RunScoreRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScoreRow {
    pub run: String,
    pub score_a: f64,
    pub score_b: f64,
}

/// `judge` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeReport {
    pub pool: usize,
    pub resumed: usize,
    pub judged: usize,
    pub failures: usize,
    pub cache_hits: usize,
    pub out: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<String>,
}
