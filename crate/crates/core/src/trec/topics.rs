//! Topic (query) files: tab-separated `topic_id<TAB>query text`.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use super::{validate_id, TrecError};

/// Topic id -> query text. Query text is stored trimmed and non-empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Topics {
    queries: BTreeMap<String, String>,
}

impl Topics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, topic_id: &str, query: &str) -> Result<(), TrecError> {
        validate_id("topic", topic_id)?;
        let query = query.trim();
        if query.is_empty() {
            return Err(TrecError::EmptyQuery {
                line: 0,
                topic: topic_id.to_string(),
            });
        }
        self.queries.insert(topic_id.to_string(), query.to_string());
        Ok(())
    }

    pub fn get(&self, topic_id: &str) -> Option<&str> {
        self.queries.get(topic_id).map(String::as_str)
    }

    pub fn contains(&self, topic_id: &str) -> bool {
        self.queries.contains_key(topic_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.queries.iter().map(|(t, q)| (t.as_str(), q.as_str()))
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Parses TSV lines. Duplicate topic ids are an error that names both
    /// offending lines.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, TrecError> {
        let mut topics = Topics::new();
        let mut first_seen: HashMap<String, usize> = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            let (topic, query) = line
                .split_once('\t')
                .ok_or(TrecError::MissingTab { line: lineno })?;
            validate_id("topic", topic)?;
            if query.trim().is_empty() {
                return Err(TrecError::EmptyQuery {
                    line: lineno,
                    topic: topic.to_string(),
                });
            }
            match first_seen.entry(topic.to_string()) {
                Entry::Occupied(seen) => {
                    return Err(TrecError::DuplicateTopic {
                        line: lineno,
                        first_line: *seen.get(),
                        topic: topic.to_string(),
                    })
                }
                Entry::Vacant(slot) => {
                    slot.insert(lineno);
                }
            }
            topics.insert(topic, query)?;
        }
        Ok(topics)
    }
}
