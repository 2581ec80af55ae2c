//! Graded-relevance ranking quality: nDCG@k per topic and per run.

use std::collections::BTreeMap;

use crate::trec::{Grade, Qrels, RunList};

use super::MetricsError;

/// How a grade turns into gain. Linear matches the standard
/// trec-evaluation nDCG used for the DL track leaderboards and is the
/// default everywhere in this toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainScheme {
    #[default]
    Linear,
    /// 2^grade - 1.
    Exponential,
}

impl GainScheme {
    fn gain(self, grade: u8) -> f64 {
        match self {
            GainScheme::Linear => f64::from(grade),
            GainScheme::Exponential => f64::from(grade).exp2() - 1.0,
        }
    }
}

/// nDCG@k of one ranked list against one topic's judgments.
///
/// Unjudged passages gain 0 (the pooled-evaluation convention). The ideal
/// DCG comes from the topic's judged grades sorted descending; a topic
/// whose judged grades are all 0 scores 0 by definition.
pub fn ndcg_at_k<S: AsRef<str>>(
    ranked: &[S],
    judgments: &BTreeMap<String, Grade>,
    k: usize,
    scheme: GainScheme,
) -> f64 {
    assert!(k >= 1, "ndcg cutoff must be at least 1");
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, passage)| {
            let grade = judgments
                .get(passage.as_ref())
                .map(|g| g.value())
                .unwrap_or(0);
            scheme.gain(grade) / ((i + 2) as f64).log2()
        })
        .sum();

    let mut ideal: Vec<u8> = judgments.values().map(|g| g.value()).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &grade)| scheme.gain(grade) / ((i + 2) as f64).log2())
        .sum();

    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Per-topic nDCG@k scores and their unweighted mean.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEvaluation {
    pub per_topic: BTreeMap<String, f64>,
    pub mean: f64,
}

/// Evaluates every run topic that has judgments; topics absent from the
/// qrels are skipped, matching standard trec-evaluation behavior. Topics
/// with only grade-0 judgments score 0 and still count in the mean.
pub fn evaluate_run(
    run: &RunList,
    qrels: &Qrels,
    k: usize,
    scheme: GainScheme,
) -> Result<RunEvaluation, MetricsError> {
    let mut per_topic = BTreeMap::new();
    for (topic, entries) in run.rankings() {
        let Some(judgments) = qrels.topic(topic) else {
            continue;
        };
        let ranked: Vec<&str> = entries.iter().map(|e| e.passage_id.as_str()).collect();
        per_topic.insert(topic.to_string(), ndcg_at_k(&ranked, judgments, k, scheme));
    }
    if per_topic.is_empty() {
        return Err(MetricsError::NoOverlap {
            tag: run.tag().to_string(),
        });
    }
    let mean = per_topic.values().sum::<f64>() / per_topic.len() as f64;
    Ok(RunEvaluation { per_topic, mean })
}
