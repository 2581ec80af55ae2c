//! Graded relevance judgments keyed by (topic, passage).

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use super::{validate_id, Grade, TrecError};

/// What to do when the same (topic, passage) pair is judged twice in one
/// qrels file. Silent overwrites corrupt evaluations, so the default is a
/// hard error; `LastWins` must be asked for explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DupPolicy {
    #[default]
    Error,
    LastWins,
}

/// A set of relevance judgments: topic id -> passage id -> grade.
///
/// At most one grade per (topic, passage) pair; ids are non-empty and
/// whitespace-free. Iteration order is lexicographic on both levels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    entries: BTreeMap<String, BTreeMap<String, Grade>>,
}

/// Per-grade entry counts over a qrels set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelHistogram {
    counts: [u64; 4],
}

impl LabelHistogram {
    /// Number of entries carrying `grade`.
    pub fn count(&self, grade: Grade) -> u64 {
        self.counts[grade.index()]
    }

    /// Sum over all four grades; equals the entry count of the source qrels.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// (grade, count) in ascending grade order.
    pub fn iter(&self) -> impl Iterator<Item = (Grade, u64)> + '_ {
        Grade::ALL.iter().map(|g| (*g, self.counts[g.index()]))
    }
}

/// Label histogram plus topic count, as reported by [`Qrels::stats`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QrelsStats {
    pub histogram: LabelHistogram,
    pub topic_count: usize,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a judgment, returning the previous grade if the pair was
    /// already present. Ids are validated; grades are valid by type.
    pub fn insert(
        &mut self,
        topic_id: &str,
        passage_id: &str,
        grade: Grade,
    ) -> Result<Option<Grade>, TrecError> {
        validate_id("topic", topic_id)?;
        validate_id("passage", passage_id)?;
        Ok(self
            .entries
            .entry(topic_id.to_string())
            .or_default()
            .insert(passage_id.to_string(), grade))
    }

    pub fn get(&self, topic_id: &str, passage_id: &str) -> Option<Grade> {
        self.entries.get(topic_id)?.get(passage_id).copied()
    }

    /// The judgments for one topic, if any.
    pub fn topic(&self, topic_id: &str) -> Option<&BTreeMap<String, Grade>> {
        self.entries.get(topic_id)
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Every (topic, passage, grade) triple in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, Grade)> {
        self.entries
            .iter()
            .flat_map(|(t, row)| row.iter().map(move |(p, g)| (t.as_str(), p.as_str(), *g)))
    }

    pub fn topic_count(&self) -> usize {
        self.entries.len()
    }

    pub fn entry_count(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses the standard TREC qrels format: one judgment per non-blank
    /// line, `topic_id iteration passage_id grade` with at least four
    /// whitespace-separated fields (extra fields are ignored, as is the
    /// iteration column).
    pub fn parse<R: BufRead>(reader: R, policy: DupPolicy) -> Result<Self, TrecError> {
        let mut qrels = Qrels::new();
        let mut first_seen: HashMap<(String, String), usize> = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() < 4 {
                return Err(TrecError::FieldCount {
                    line: lineno,
                    expected: "at least 4",
                    found: fields.len(),
                });
            }
            let (topic, passage, grade_tok) = (fields[0], fields[2], fields[3]);
            let raw: i64 = grade_tok.parse().map_err(|_| TrecError::GradeNotInteger {
                line: lineno,
                token: grade_tok.to_string(),
            })?;
            let grade = Grade::new(raw).map_err(|source| TrecError::GradeRange {
                line: lineno,
                source,
            })?;
            match first_seen.entry((topic.to_string(), passage.to_string())) {
                Entry::Occupied(seen) => {
                    if policy == DupPolicy::Error {
                        return Err(TrecError::DuplicateJudgment {
                            line: lineno,
                            first_line: *seen.get(),
                            topic: topic.to_string(),
                            passage: passage.to_string(),
                        });
                    }
                }
                Entry::Vacant(slot) => {
                    slot.insert(lineno);
                }
            }
            qrels.insert(topic, passage, grade)?;
        }
        Ok(qrels)
    }

    /// Writes `topic Q0 passage grade` lines sorted by (topic, passage),
    /// with `\n` endings. `parse(write(q))` reproduces `q` exactly.
    pub fn write<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for (topic, passage, grade) in self.iter() {
            writeln!(writer, "{topic} Q0 {passage} {grade}")?;
        }
        Ok(())
    }

    /// [`Qrels::write`] into a `String`.
    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("qrels text is UTF-8")
    }

    /// Label histogram and topic count.
    pub fn stats(&self) -> QrelsStats {
        let mut histogram = LabelHistogram::default();
        for (_, _, grade) in self.iter() {
            histogram.counts[grade.index()] += 1;
        }
        QrelsStats {
            histogram,
            topic_count: self.topic_count(),
        }
    }
}
