//! Agreement between two judgment sets: label alignment, Cohen's kappa,
//! and the 4x4 confusion matrix.

use crate::trec::{Grade, Qrels};

use super::MetricsError;

/// Grade pairs over the key intersection of two qrels sets, human side
/// first. Keys present in only one set are counted, never included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedLabels {
    pairs: Vec<(Grade, Grade)>,
    pub human_only: usize,
    pub llm_only: usize,
}

impl AlignedLabels {
    pub fn from_pairs(pairs: Vec<(Grade, Grade)>) -> Result<Self, MetricsError> {
        if pairs.is_empty() {
            return Err(MetricsError::EmptyLabels);
        }
        Ok(Self {
            pairs,
            human_only: 0,
            llm_only: 0,
        })
    }

    pub fn pairs(&self) -> &[(Grade, Grade)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Pairs up grades for every (topic, passage) judged in both sets.
/// An empty intersection is an error: agreement over nothing is
/// meaningless.
pub fn align(human: &Qrels, llm: &Qrels) -> Result<AlignedLabels, MetricsError> {
    let mut pairs = Vec::new();
    let mut human_only = 0;
    for (topic, passage, human_grade) in human.iter() {
        match llm.get(topic, passage) {
            Some(llm_grade) => pairs.push((human_grade, llm_grade)),
            None => human_only += 1,
        }
    }
    if pairs.is_empty() {
        return Err(MetricsError::EmptyIntersection);
    }
    let llm_only = llm.entry_count() - pairs.len();
    Ok(AlignedLabels {
        pairs,
        human_only,
        llm_only,
    })
}

/// Which label scale kappa is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaScale {
    /// All four relevance grades.
    Four,
    /// Grades collapsed to binary relevance before comparison.
    Binary,
}

/// Cohen's kappa: (p_o - p_e) / (1 - p_e), with p_o the observed
/// agreement fraction and p_e the chance agreement from the marginals.
///
/// Perfect agreement is 1.0 by definition, which also covers the
/// degenerate case of both raters constant on the same label (p_e = 1
/// there, and it can only arise together with p_o = 1).
pub fn cohen_kappa(labels: &AlignedLabels, scale: KappaScale) -> Result<f64, MetricsError> {
    if labels.is_empty() {
        return Err(MetricsError::EmptyLabels);
    }
    let mut counts = [[0u64; 4]; 4];
    for &(human, llm) in labels.pairs() {
        let (h, l) = match scale {
            KappaScale::Four => (human, llm),
            KappaScale::Binary => (human.binarized(), llm.binarized()),
        };
        counts[h.index()][l.index()] += 1;
    }
    kappa_from_counts(&counts)
}

fn kappa_from_counts(counts: &[[u64; 4]; 4]) -> Result<f64, MetricsError> {
    let n: u64 = counts.iter().flatten().sum();
    let agree: u64 = (0..4).map(|g| counts[g][g]).sum();
    if agree == n {
        return Ok(1.0);
    }
    let n = n as f64;
    let p_o = agree as f64 / n;
    let mut p_e = 0.0;
    for (g, row_counts) in counts.iter().enumerate() {
        let row: u64 = row_counts.iter().sum();
        let col: u64 = counts.iter().map(|r| r[g]).sum();
        p_e += (row as f64) * (col as f64) / (n * n);
    }
    let denom = 1.0 - p_e;
    if denom <= f64::EPSILON {
        // Unreachable when agreement is imperfect; guards float dust.
        return Err(MetricsError::DegenerateAgreement);
    }
    Ok((p_o - p_e) / denom)
}

/// Raw label-vs-label counts: rows are the human grade, columns the LLM
/// grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: [[u64; 4]; 4],
}

impl ConfusionMatrix {
    pub fn count(&self, human: Grade, llm: Grade) -> u64 {
        self.counts[human.index()][llm.index()]
    }

    pub fn row(&self, human: Grade) -> [u64; 4] {
        self.counts[human.index()]
    }

    pub fn counts(&self) -> &[[u64; 4]; 4] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Diagonal sum; `trace() / total()` is kappa's observed agreement.
    pub fn trace(&self) -> u64 {
        (0..4).map(|g| self.counts[g][g]).sum()
    }

    /// Each row scaled to sum to 1; all-zero rows stay all-zero.
    pub fn row_normalized(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (h, row) in self.counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            if total > 0 {
                for (l, &count) in row.iter().enumerate() {
                    out[h][l] = count as f64 / total as f64;
                }
            }
        }
        out
    }
}

/// Counts every aligned pair into the 4x4 matrix.
pub fn confusion(labels: &AlignedLabels) -> ConfusionMatrix {
    let mut counts = [[0u64; 4]; 4];
    for &(human, llm) in labels.pairs() {
        counts[human.index()][llm.index()] += 1;
    }
    ConfusionMatrix { counts }
}
