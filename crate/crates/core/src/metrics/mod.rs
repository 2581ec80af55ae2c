//! Agreement and leaderboard-correlation statistics: Cohen's kappa (four
//! grade and binary scales), confusion matrices, nDCG@k, Kendall tau-b,
//! and Spearman's rho.
//!
//! Everything here is a pure function over immutable inputs, computed in
//! double precision.

mod agreement;
mod correlation;
mod ndcg;

pub use agreement::{align, cohen_kappa, confusion, AlignedLabels, ConfusionMatrix, KappaScale};
pub use correlation::{
    correlate_systems, kendall_tau_b, leaderboard, spearman_rho, CorrelationReport, Leaderboard,
    LeaderboardEntry, RunScores,
};
pub use ndcg::{evaluate_run, ndcg_at_k, GainScheme, RunEvaluation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("the two qrels sets share no (topic, passage) pair")]
    EmptyIntersection,
    #[error("no aligned label pairs to compare")]
    EmptyLabels,
    #[error("chance agreement is 1 with imperfect observed agreement; kappa is undefined")]
    DegenerateAgreement,
    #[error("vectors differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 paired values, found {found}")]
    TooFewPoints { found: usize },
    #[error("all values tied in one vector; rank correlation is undefined")]
    AllTied,
    #[error("zero rank variance; correlation is undefined")]
    ZeroVariance,
    #[error("vectors must contain only finite values")]
    NonFinite,
    #[error("run {tag:?} has no topic in common with the qrels")]
    NoOverlap { tag: String },
    #[error("need at least 2 runs to correlate leaderboards, found {found}")]
    TooFewRuns { found: usize },
    #[error("run tag {tag:?} appears more than once")]
    DuplicateRunTag { tag: String },
}
