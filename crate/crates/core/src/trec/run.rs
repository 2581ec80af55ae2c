//! One retrieval system's ranked results in the 6-column TREC run format.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use super::{validate_id, TrecError};

/// A single ranked result within one topic.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub passage_id: String,
    pub rank: u32,
    pub score: f64,
}

/// Parsing knobs for [`RunList::parse_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct RunParseOptions {
    /// Treat a score that rises with rank as an error instead of a warning.
    /// Real TREC submissions occasionally violate score monotonicity, so
    /// the default is lenient.
    pub strict_score_order: bool,
}

/// A parsed run plus any non-fatal findings.
#[derive(Debug, Clone)]
pub struct RunParse {
    pub run: RunList,
    pub warnings: Vec<String>,
}

/// One system's ranked retrieval results per topic, tagged with the run
/// name from the submission's last column.
///
/// Within a topic, ranks are strictly increasing in list order and passage
/// ids are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct RunList {
    tag: String,
    rankings: BTreeMap<String, Vec<RunEntry>>,
}

impl RunList {
    /// Builds a run from already-ordered per-topic lists, enforcing the
    /// rank and uniqueness invariants.
    pub fn from_rankings(
        tag: &str,
        rankings: BTreeMap<String, Vec<RunEntry>>,
    ) -> Result<Self, TrecError> {
        validate_id("run tag", tag)?;
        for (topic, entries) in &rankings {
            let mut seen = HashSet::new();
            let mut prev_rank: Option<u32> = None;
            for entry in entries {
                validate_id("passage", &entry.passage_id)?;
                if entry.rank == 0 {
                    return Err(TrecError::InvalidRank {
                        line: 0,
                        token: "0".to_string(),
                    });
                }
                if !seen.insert(entry.passage_id.as_str()) {
                    return Err(TrecError::DuplicateRunPassage {
                        line: 0,
                        topic: topic.clone(),
                        passage: entry.passage_id.clone(),
                    });
                }
                if let Some(prev) = prev_rank {
                    if entry.rank <= prev {
                        return Err(TrecError::DuplicateRank {
                            topic: topic.clone(),
                            rank: entry.rank,
                        });
                    }
                }
                prev_rank = Some(entry.rank);
            }
        }
        Ok(Self {
            tag: tag.to_string(),
            rankings,
        })
    }

    /// Parses the 6-column TREC run format with default options.
    pub fn parse<R: BufRead>(reader: R) -> Result<RunParse, TrecError> {
        Self::parse_with(reader, RunParseOptions::default())
    }

    /// Parses `topic_id Q0 passage_id rank score tag` lines. Lines may
    /// appear out of rank order; each topic's list is re-sorted by rank.
    pub fn parse_with<R: BufRead>(
        reader: R,
        options: RunParseOptions,
    ) -> Result<RunParse, TrecError> {
        let mut tag: Option<String> = None;
        let mut rankings: BTreeMap<String, Vec<(RunEntry, usize)>> = BTreeMap::new();
        let mut seen: HashSet<(String, String)> = HashSet::new();

        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 6 {
                return Err(TrecError::FieldCount {
                    line: lineno,
                    expected: "exactly 6",
                    found: fields.len(),
                });
            }
            let (topic, passage, rank_tok, score_tok, line_tag) =
                (fields[0], fields[2], fields[3], fields[4], fields[5]);
            let rank: u32 = match rank_tok.parse() {
                Ok(r) if r >= 1 => r,
                _ => {
                    return Err(TrecError::InvalidRank {
                        line: lineno,
                        token: rank_tok.to_string(),
                    })
                }
            };
            let score: f64 = score_tok.parse().map_err(|_| TrecError::InvalidScore {
                line: lineno,
                token: score_tok.to_string(),
            })?;
            match &tag {
                None => tag = Some(line_tag.to_string()),
                Some(expected) if expected != line_tag => {
                    return Err(TrecError::MixedTags {
                        line: lineno,
                        expected: expected.clone(),
                        found: line_tag.to_string(),
                    })
                }
                Some(_) => {}
            }
            if !seen.insert((topic.to_string(), passage.to_string())) {
                return Err(TrecError::DuplicateRunPassage {
                    line: lineno,
                    topic: topic.to_string(),
                    passage: passage.to_string(),
                });
            }
            rankings.entry(topic.to_string()).or_default().push((
                RunEntry {
                    passage_id: passage.to_string(),
                    rank,
                    score,
                },
                lineno,
            ));
        }

        let tag = tag.unwrap_or_else(|| "unnamed".to_string());
        let mut warnings = Vec::new();
        let mut sorted: BTreeMap<String, Vec<RunEntry>> = BTreeMap::new();
        for (topic, mut entries) in rankings {
            entries.sort_by_key(|(e, _)| e.rank);
            for pair in entries.windows(2) {
                let (prev, next) = (&pair[0].0, &pair[1].0);
                if next.rank == prev.rank {
                    return Err(TrecError::DuplicateRank {
                        topic: topic.clone(),
                        rank: next.rank,
                    });
                }
                if next.score > prev.score {
                    if options.strict_score_order {
                        return Err(TrecError::ScoreOrder {
                            topic: topic.clone(),
                            prev_rank: prev.rank,
                            next_rank: next.rank,
                            prev: prev.score,
                            next: next.score,
                        });
                    }
                    warnings.push(format!(
                        "topic {topic}: score rises from {} to {} between ranks {} and {}",
                        prev.score, next.score, prev.rank, next.rank
                    ));
                }
            }
            sorted.insert(topic, entries.into_iter().map(|(e, _)| e).collect());
        }

        Ok(RunParse {
            run: RunList {
                tag,
                rankings: sorted,
            },
            warnings,
        })
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.rankings.keys().map(String::as_str)
    }

    /// The ranked list for one topic, in rank order.
    pub fn ranking(&self, topic_id: &str) -> Option<&[RunEntry]> {
        self.rankings.get(topic_id).map(Vec::as_slice)
    }

    pub fn rankings(&self) -> impl Iterator<Item = (&str, &[RunEntry])> {
        self.rankings
            .iter()
            .map(|(t, v)| (t.as_str(), v.as_slice()))
    }

    pub fn topic_count(&self) -> usize {
        self.rankings.len()
    }

    pub fn entry_count(&self) -> usize {
        self.rankings.values().map(Vec::len).sum()
    }

    /// Writes the run back out in the 6-column format, topics sorted.
    pub fn write<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for (topic, entries) in &self.rankings {
            for e in entries {
                writeln!(
                    writer,
                    "{topic} Q0 {} {} {} {}",
                    e.passage_id, e.rank, e.score, self.tag
                )?;
            }
        }
        Ok(())
    }
}
