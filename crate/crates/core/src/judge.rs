//! End-to-end assessment: build the (topic, passage) pool, render
//! prompts, call the model, parse grades, and emit predicted qrels plus a
//! resumable JSON-lines audit log.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::llm::{LlmClient, LlmError};
use crate::prompt::{parse_judgment, PromptTemplate};
use crate::trec::{Grade, PassageCorpus, Qrels, RunList, Topics, TrecError};

/// The ordered, duplicate-free list of (topic, passage) pairs to judge.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pool {
    pairs: Vec<(String, String)>,
}

#[derive(Debug, thiserror::Error)]
pub enum JudgeError {
    #[error("pool contains duplicate pair (topic {topic:?}, passage {passage:?})")]
    DuplicatePair { topic: String, passage: String },
    #[error("pool references unknown topic {topic:?}")]
    UnknownTopic { topic: String },
    #[error("pool pair (topic {topic:?}, passage {passage:?}) references a passage missing from the corpus")]
    UnknownPassage { topic: String, passage: String },
    #[error("audit log line {line}: {reason}")]
    LogRecord { line: usize, reason: String },
    #[error("audit log i/o: {0}")]
    LogIo(#[from] std::io::Error),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Trec(#[from] TrecError),
}

impl Pool {
    /// Validates uniqueness and keeps the given order.
    pub fn new(pairs: Vec<(String, String)>) -> Result<Self, JudgeError> {
        let mut seen = HashSet::new();
        for (topic, passage) in &pairs {
            if !seen.insert((topic.as_str(), passage.as_str())) {
                return Err(JudgeError::DuplicatePair {
                    topic: topic.clone(),
                    passage: passage.clone(),
                });
            }
        }
        Ok(Self { pairs })
    }

    /// One pair per qrels entry, ordered by (topic, passage); the grades
    /// are discarded. This is the re-assessment pool: judge exactly what
    /// the human assessors judged.
    pub fn from_qrels(qrels: &Qrels) -> Self {
        Self {
            pairs: qrels
                .iter()
                .map(|(t, p, _)| (t.to_string(), p.to_string()))
                .collect(),
        }
    }

    /// Union of each run's top-`depth` passages per topic, ordered by
    /// (topic, passage). This is the hole-filling pool for judging
    /// passages that humans never saw.
    pub fn from_runs<'a, I>(runs: I, depth: usize) -> Self
    where
        I: IntoIterator<Item = &'a RunList>,
    {
        let mut set: BTreeSet<(String, String)> = BTreeSet::new();
        for run in runs {
            for (topic, entries) in run.rankings() {
                for entry in entries.iter().take(depth) {
                    set.insert((topic.to_string(), entry.passage_id.clone()));
                }
            }
        }
        Self {
            pairs: set.into_iter().collect(),
        }
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Full provenance for one judged pair. Exactly one of `grade`/`error`
/// is set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub topic_id: String,
    pub passage_id: String,
    pub prompt_hash: String,
    pub raw_response: String,
    pub grade: Option<Grade>,
    pub error: Option<String>,
    pub latency_ms: u64,
    pub attempt_count: u32,
    pub from_cache: bool,
}

impl JudgmentRecord {
    fn check(&self) -> Result<(), String> {
        match (&self.grade, &self.error) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err("record must carry exactly one of grade/error".to_string()),
        }
    }
}

/// Pipeline knobs beyond the client configuration.
#[derive(Debug, Clone, Default)]
pub struct JudgeOptions {
    /// JSON-lines audit log, flushed per record. If the file already has
    /// records, their pairs are skipped; a crashed job resumes here.
    pub log_path: Option<PathBuf>,
    /// Minimum spacing between request dispatches, for rate politeness.
    pub throttle: Option<Duration>,
}

/// What a judging run produced.
#[derive(Debug)]
pub struct JudgeOutcome {
    /// Grades for every successfully judged pair. Failed pairs are
    /// omitted rather than defaulted; fabricated grades would bias
    /// agreement statistics downstream.
    pub qrels: Qrels,
    /// One record per pool pair, in pool order.
    pub records: Vec<JudgmentRecord>,
    /// Pairs satisfied from the existing audit log.
    pub resumed: usize,
    /// Pairs judged by this invocation.
    pub judged: usize,
    /// Records (resumed or new) that ended in an error.
    pub failures: usize,
    /// Newly judged pairs served from the response cache.
    pub cache_hits: usize,
}

struct LogScan {
    records: Vec<JudgmentRecord>,
    /// Byte length of the valid prefix; anything beyond is a torn tail.
    valid_len: u64,
    /// The valid prefix ends without a newline (hand-edited log).
    needs_newline: bool,
}

/// Scans a JSON-lines audit log at byte level. A killed writer can leave
/// a torn final line (possibly splitting a multi-byte character); that
/// tail parses as nothing and its pair counts as not judged. A malformed
/// line anywhere else is corruption and an error.
fn scan_log(bytes: &[u8]) -> Result<LogScan, JudgeError> {
    let mut records = Vec::new();
    let mut valid_len = 0usize;
    let mut pos = 0usize;
    let mut lineno = 0usize;
    while pos < bytes.len() {
        lineno += 1;
        let (line_end, next) = match bytes[pos..].iter().position(|&b| b == b'\n') {
            Some(i) => (pos + i, pos + i + 1),
            None => (bytes.len(), bytes.len()),
        };
        let line = bytes[pos..line_end].trim_ascii();
        if line.is_empty() {
            pos = next;
            valid_len = next;
            continue;
        }
        match serde_json::from_slice::<JudgmentRecord>(line) {
            Ok(record) => {
                record.check().map_err(|reason| JudgeError::LogRecord {
                    line: lineno,
                    reason,
                })?;
                records.push(record);
                valid_len = next;
            }
            Err(e) => {
                if next >= bytes.len() {
                    break; // torn final line
                }
                return Err(JudgeError::LogRecord {
                    line: lineno,
                    reason: e.to_string(),
                });
            }
        }
        pos = next;
    }
    let needs_newline = valid_len > 0 && bytes[valid_len - 1] != b'\n';
    Ok(LogScan {
        records,
        valid_len: valid_len as u64,
        needs_newline,
    })
}

/// Reads the records of an audit log, tolerating a torn final line from a
/// killed writer.
pub fn load_log(path: &Path) -> Result<Vec<JudgmentRecord>, JudgeError> {
    Ok(scan_log(&std::fs::read(path)?)?.records)
}

struct WorkQueue<'a> {
    items: Mutex<std::slice::Iter<'a, (String, String)>>,
    throttle: Option<Duration>,
}

impl<'a> WorkQueue<'a> {
    fn next(&self) -> Option<&'a (String, String)> {
        let mut items = self.items.lock().expect("work queue poisoned");
        let item = items.next()?;
        if let Some(delay) = self.throttle {
            // Spacing is enforced by sleeping while holding the lock.
            std::thread::sleep(delay);
        }
        Some(item)
    }
}

/// Judges every pool pair: render prompt, complete, parse the grade.
///
/// Resolvability of all pairs is checked before any request goes out.
/// Successes populate the returned qrels; failures become error records
/// and are excluded. An all-failures run yields empty qrels and a full
/// error log, not an `Err`. With the mock backend the returned qrels are
/// identical across runs and pool orderings.
pub fn judge_pool(
    pool: &Pool,
    topics: &Topics,
    corpus: &PassageCorpus,
    client: &LlmClient,
    template: &PromptTemplate,
    options: &JudgeOptions,
) -> Result<JudgeOutcome, JudgeError> {
    for (topic, passage) in pool.pairs() {
        if !topics.contains(topic) {
            return Err(JudgeError::UnknownTopic {
                topic: topic.clone(),
            });
        }
        if !corpus.contains(passage) {
            return Err(JudgeError::UnknownPassage {
                topic: topic.clone(),
                passage: passage.clone(),
            });
        }
    }

    let mut done: BTreeMap<(String, String), JudgmentRecord> = BTreeMap::new();
    let mut resumed = 0;
    let mut needs_newline = false;
    if let Some(path) = &options.log_path {
        if path.exists() {
            let bytes = std::fs::read(path)?;
            let scan = scan_log(&bytes)?;
            if scan.valid_len < bytes.len() as u64 {
                // Repair a torn tail so appended records start on a fresh
                // line; its pair is simply judged again.
                OpenOptions::new()
                    .write(true)
                    .open(path)?
                    .set_len(scan.valid_len)?;
            }
            needs_newline = scan.needs_newline;
            for record in scan.records {
                let key = (record.topic_id.clone(), record.passage_id.clone());
                done.insert(key, record);
            }
        }
    }

    let todo: Vec<&(String, String)> = pool
        .pairs()
        .iter()
        .filter(|(t, p)| {
            let known = done.contains_key(&(t.clone(), p.clone()));
            if known {
                resumed += 1;
            }
            !known
        })
        .collect();

    let mut log_file = match &options.log_path {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            Some(OpenOptions::new().create(true).append(true).open(path)?)
        }
        None => None,
    };

    let mut judged = 0;
    let mut cache_hits = 0;
    if !todo.is_empty() {
        let todo_owned: Vec<(String, String)> =
            todo.iter().map(|&(t, p)| (t.clone(), p.clone())).collect();
        let queue = WorkQueue {
            items: Mutex::new(todo_owned.iter()),
            throttle: options.throttle,
        };
        let workers = client.max_in_flight().min(todo_owned.len()).max(1);
        let (sender, receiver) = mpsc::channel::<JudgmentRecord>();

        std::thread::scope(|scope| -> Result<(), JudgeError> {
            for _ in 0..workers {
                let sender = sender.clone();
                let queue = &queue;
                scope.spawn(move || {
                    while let Some((topic, passage)) = queue.next() {
                        let record = judge_one(topic, passage, topics, corpus, client, template);
                        if sender.send(record).is_err() {
                            break;
                        }
                    }
                });
            }
            drop(sender);

            // Single writer: serialize, append, flush per record.
            for record in receiver {
                if let Some(file) = log_file.as_mut() {
                    let mut line = serde_json::to_vec(&record).expect("record serializes");
                    line.push(b'\n');
                    if std::mem::take(&mut needs_newline) {
                        file.write_all(b"\n")?;
                    }
                    file.write_all(&line)?;
                    file.flush()?;
                }
                judged += 1;
                if record.from_cache {
                    cache_hits += 1;
                }
                done.insert((record.topic_id.clone(), record.passage_id.clone()), record);
            }
            Ok(())
        })?;
    }

    // Assemble deterministically from the pool order, whatever order the
    // records completed in.
    let mut qrels = Qrels::new();
    let mut records = Vec::with_capacity(pool.len());
    let mut failures = 0;
    for (topic, passage) in pool.pairs() {
        let record = done
            .get(&(topic.clone(), passage.clone()))
            .expect("every pool pair was judged or resumed")
            .clone();
        match record.grade {
            Some(grade) => {
                qrels.insert(topic, passage, grade)?;
            }
            None => failures += 1,
        }
        records.push(record);
    }

    Ok(JudgeOutcome {
        qrels,
        records,
        resumed,
        judged,
        failures,
        cache_hits,
    })
}

fn judge_one(
    topic: &str,
    passage: &str,
    topics: &Topics,
    corpus: &PassageCorpus,
    client: &LlmClient,
    template: &PromptTemplate,
) -> JudgmentRecord {
    let mut record = JudgmentRecord {
        topic_id: topic.to_string(),
        passage_id: passage.to_string(),
        prompt_hash: String::new(),
        raw_response: String::new(),
        grade: None,
        error: None,
        latency_ms: 0,
        attempt_count: 0,
        from_cache: false,
    };

    let query = topics.get(topic).expect("pool pre-flight checked topics");
    let text = match corpus.get(passage) {
        Ok(text) => text,
        Err(e) => {
            record.error = Some(format!("corpus lookup failed: {e}"));
            return record;
        }
    };
    let prompt = match template.render(query, &text) {
        Ok(prompt) => prompt,
        Err(e) => {
            record.error = Some(format!("prompt rendering failed: {e}"));
            return record;
        }
    };
    record.prompt_hash = client.prompt_key(&prompt);

    match client.complete(&prompt) {
        Ok(result) => {
            record.raw_response = result.text.clone();
            record.latency_ms = result.latency.as_millis() as u64;
            record.attempt_count = result.attempt_count;
            record.from_cache = result.from_cache;
            match parse_judgment(&result.text) {
                Ok(judgment) => record.grade = Some(judgment.grade),
                Err(e) => record.error = Some(format!("response parsing failed: {e}")),
            }
        }
        Err(e) => {
            record.error = Some(format!("completion failed: {e}"));
        }
    }
    record
}
