//! Near-duplicate passage filtering for qrels and runs.
//!
//! Qrels for the 2022 and 2023 Deep Learning Tracks propagate labels to
//! near-duplicate passages; evaluation on them is meaningful only after
//! keeping one "canonical" passage per duplicate cluster and dropping the
//! rest, from both the judgments and the retrieved runs. The cluster file
//! itself is always an input; this module never detects duplicates.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use crate::trec::{validate_id, Qrels, RunEntry, RunList, TrecError};

/// One near-duplicate cluster. The canonical passage is a member of its
/// own cluster; every other member is eliminated during dedup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub canonical_id: String,
    pub members: BTreeSet<String>,
}

/// Errors raised while reading or building duplicate clusters.
#[derive(Debug, thiserror::Error)]
pub enum DedupError {
    #[error("line {line}: passage {id:?} already belongs to another cluster")]
    OverlappingClusters { line: usize, id: String },
    #[error("line {line}: cluster {canonical:?} has an empty member list")]
    EmptyMembers { line: usize, canonical: String },
    #[error("line {line}: cluster {canonical:?} has no members besides its canonical passage")]
    SingletonCluster { line: usize, canonical: String },
    #[error("line {line}: missing tab separator after canonical id")]
    MissingTab { line: usize },
    #[error("line {line}: empty member id")]
    EmptyMemberId { line: usize },
    #[error(transparent)]
    Id(#[from] TrecError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Near-duplicate clusters with constant-time membership lookup.
///
/// Every passage id appears in at most one cluster, each canonical id is a
/// member of its own cluster, and clusters have at least two members.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DupClusters {
    clusters: Vec<Cluster>,
    membership: HashMap<String, usize>,
}

impl DupClusters {
    /// No clusters at all; dedup against this is the identity.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Parses the toolkit's own cluster format: one cluster per line,
    /// `canonical_id<TAB>member_id[,member_id...]`. The canonical id is
    /// inserted into the member set if the line omits it.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, DedupError> {
        let mut raw = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            let (canonical, members) = line
                .split_once('\t')
                .ok_or(DedupError::MissingTab { line: lineno })?;
            if members.trim().is_empty() {
                return Err(DedupError::EmptyMembers {
                    line: lineno,
                    canonical: canonical.to_string(),
                });
            }
            let mut ids = Vec::new();
            for token in members.split(',') {
                let token = token.trim();
                if token.is_empty() {
                    return Err(DedupError::EmptyMemberId { line: lineno });
                }
                ids.push(token.to_string());
            }
            raw.push((lineno, canonical.to_string(), ids));
        }
        Self::build(raw)
    }

    /// Programmatic entry point for converted cluster lists, e.g. when a
    /// foreign duplicate file has been mapped to (canonical, members)
    /// pairs. Enforces the same invariants as [`DupClusters::parse`].
    pub fn from_clusters<I, M>(clusters: I) -> Result<Self, DedupError>
    where
        I: IntoIterator<Item = (String, M)>,
        M: IntoIterator<Item = String>,
    {
        let raw = clusters
            .into_iter()
            .enumerate()
            .map(|(idx, (canonical, members))| (idx + 1, canonical, members.into_iter().collect()))
            .collect();
        Self::build(raw)
    }

    fn build(raw: Vec<(usize, String, Vec<String>)>) -> Result<Self, DedupError> {
        let mut clusters = Vec::new();
        let mut membership = HashMap::new();
        for (line, canonical, ids) in raw {
            validate_id("passage", &canonical)?;
            if ids.is_empty() {
                return Err(DedupError::EmptyMembers { line, canonical });
            }
            let mut members: BTreeSet<String> = BTreeSet::new();
            members.insert(canonical.clone());
            for id in ids {
                validate_id("passage", &id)?;
                members.insert(id);
            }
            if members.len() < 2 {
                return Err(DedupError::SingletonCluster { line, canonical });
            }
            let index = clusters.len();
            for id in &members {
                if membership.insert(id.clone(), index).is_some() {
                    return Err(DedupError::OverlappingClusters {
                        line,
                        id: id.clone(),
                    });
                }
            }
            clusters.push(Cluster {
                canonical_id: canonical,
                members,
            });
        }
        Ok(Self {
            clusters,
            membership,
        })
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter()
    }

    /// The cluster containing `passage_id`, if any.
    pub fn cluster_of(&self, passage_id: &str) -> Option<&Cluster> {
        self.membership
            .get(passage_id)
            .map(|&idx| &self.clusters[idx])
    }

    /// True when the passage is a non-canonical member of some cluster,
    /// i.e. it must be dropped during dedup.
    pub fn is_eliminated(&self, passage_id: &str) -> bool {
        self.cluster_of(passage_id)
            .is_some_and(|c| c.canonical_id != passage_id)
    }
}

/// Removes every judgment whose passage is a non-canonical cluster member.
/// Canonical and unclustered passages keep their grades untouched; nothing
/// is merged or remapped.
pub fn dedup_qrels(qrels: &Qrels, clusters: &DupClusters) -> Qrels {
    let mut out = Qrels::new();
    for (topic, passage, grade) in qrels.iter() {
        if !clusters.is_eliminated(passage) {
            out.insert(topic, passage, grade)
                .expect("ids validated by the source qrels");
        }
    }
    out
}

/// Removes non-canonical cluster members from every topic's ranked list.
/// Survivors keep their relative order and scores; ranks are re-numbered
/// densely from 1 so that an evaluation depth of k means k surviving
/// passages.
pub fn dedup_run(run: &RunList, clusters: &DupClusters) -> RunList {
    let mut rankings: BTreeMap<String, Vec<RunEntry>> = BTreeMap::new();
    for (topic, entries) in run.rankings() {
        let kept: Vec<RunEntry> = entries
            .iter()
            .filter(|e| !clusters.is_eliminated(&e.passage_id))
            .enumerate()
            .map(|(i, e)| RunEntry {
                passage_id: e.passage_id.clone(),
                rank: (i + 1) as u32,
                score: e.score,
            })
            .collect();
        match rankings.entry(topic.to_string()) {
            Entry::Vacant(slot) => {
                slot.insert(kept);
            }
            Entry::Occupied(_) => unreachable!("run topics are unique"),
        }
    }
    RunList::from_rankings(run.tag(), rankings)
        .expect("filtering and dense re-ranking preserve run invariants")
}
