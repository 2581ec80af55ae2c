//! JSON-lines passage corpus, with an in-memory and an indexed on-disk mode.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{validate_id, TrecError};

/// Field names for the two required members of each corpus record. The
/// canonical internal contract is `{"id": ..., "text": ...}`; foreign
/// corpora with different member names are mapped through this.
#[derive(Debug, Clone)]
pub struct CorpusFields {
    pub id: String,
    pub text: String,
}

impl Default for CorpusFields {
    fn default() -> Self {
        Self {
            id: "id".to_string(),
            text: "text".to_string(),
        }
    }
}

enum Inner {
    Memory(HashMap<String, String>),
    /// Byte offsets into the corpus file, one per record; passage text is
    /// re-read on lookup so DL-scale corpora need not fit in memory.
    Indexed {
        path: PathBuf,
        offsets: HashMap<String, u64>,
        reader: Mutex<BufReader<File>>,
        fields: CorpusFields,
    },
}

/// Passage id -> passage text. Lookup of a missing id is always
/// [`TrecError::PassageNotFound`], never a silent empty string.
pub struct PassageCorpus {
    inner: Inner,
}

fn record_fields(
    value: &serde_json::Value,
    fields: &CorpusFields,
    lineno: usize,
) -> Result<(String, String), TrecError> {
    let obj = value.as_object().ok_or_else(|| TrecError::CorpusRecord {
        line: lineno,
        reason: "record is not a JSON object".to_string(),
    })?;
    let id = obj
        .get(&fields.id)
        .and_then(|v| v.as_str())
        .ok_or_else(|| TrecError::CorpusRecord {
            line: lineno,
            reason: format!("missing or non-string field {:?}", fields.id),
        })?;
    let text = obj
        .get(&fields.text)
        .and_then(|v| v.as_str())
        .ok_or_else(|| TrecError::CorpusRecord {
            line: lineno,
            reason: format!("missing or non-string field {:?}", fields.text),
        })?;
    validate_id("passage", id)?;
    Ok((id.to_string(), text.to_string()))
}

fn parse_record(
    line: &str,
    fields: &CorpusFields,
    lineno: usize,
) -> Result<Option<(String, String)>, TrecError> {
    if line.trim().is_empty() {
        return Ok(None);
    }
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| TrecError::CorpusRecord {
            line: lineno,
            reason: e.to_string(),
        })?;
    record_fields(&value, fields, lineno).map(Some)
}

impl PassageCorpus {
    /// Reads the whole corpus into memory with the default `id`/`text`
    /// field names.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, TrecError> {
        Self::load_with_fields(reader, &CorpusFields::default())
    }

    pub fn load_with_fields<R: BufRead>(
        reader: R,
        fields: &CorpusFields,
    ) -> Result<Self, TrecError> {
        let mut passages = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if let Some((id, text)) = parse_record(&line, fields, lineno)? {
                if passages.insert(id.clone(), text).is_some() {
                    return Err(TrecError::DuplicateCorpusId { line: lineno, id });
                }
            }
        }
        Ok(Self {
            inner: Inner::Memory(passages),
        })
    }

    /// Opens a corpus file in indexed mode: one full scan builds a
    /// passage-id -> byte-offset index, and texts are read back on demand.
    pub fn open_indexed(path: &Path) -> Result<Self, TrecError> {
        Self::open_indexed_with_fields(path, CorpusFields::default())
    }

    pub fn open_indexed_with_fields(path: &Path, fields: CorpusFields) -> Result<Self, TrecError> {
        let file = File::open(path)?;
        let mut reader = BufReader::new(file);
        let mut offsets = HashMap::new();
        let mut offset: u64 = 0;
        let mut line = String::new();
        let mut lineno = 0;
        loop {
            line.clear();
            let read = reader.read_line(&mut line)?;
            if read == 0 {
                break;
            }
            lineno += 1;
            if let Some((id, _)) = parse_record(&line, &fields, lineno)? {
                if offsets.insert(id.clone(), offset).is_some() {
                    return Err(TrecError::DuplicateCorpusId { line: lineno, id });
                }
            }
            offset += read as u64;
        }
        Ok(Self {
            inner: Inner::Indexed {
                path: path.to_path_buf(),
                offsets,
                reader: Mutex::new(reader),
                fields,
            },
        })
    }

    /// Fetches the text of one passage.
    pub fn get(&self, passage_id: &str) -> Result<String, TrecError> {
        match &self.inner {
            Inner::Memory(map) => {
                map.get(passage_id)
                    .cloned()
                    .ok_or_else(|| TrecError::PassageNotFound {
                        id: passage_id.to_string(),
                    })
            }
            Inner::Indexed {
                offsets,
                reader,
                fields,
                ..
            } => {
                let offset =
                    *offsets
                        .get(passage_id)
                        .ok_or_else(|| TrecError::PassageNotFound {
                            id: passage_id.to_string(),
                        })?;
                let mut reader = reader.lock().expect("corpus reader poisoned");
                reader.seek(SeekFrom::Start(offset))?;
                let mut line = String::new();
                reader.read_line(&mut line)?;
                let (_, text) =
                    parse_record(&line, fields, 0)?.ok_or_else(|| TrecError::CorpusRecord {
                        line: 0,
                        reason: format!("empty record at offset {offset}"),
                    })?;
                Ok(text)
            }
        }
    }

    pub fn contains(&self, passage_id: &str) -> bool {
        match &self.inner {
            Inner::Memory(map) => map.contains_key(passage_id),
            Inner::Indexed { offsets, .. } => offsets.contains_key(passage_id),
        }
    }

    pub fn len(&self) -> usize {
        match &self.inner {
            Inner::Memory(map) => map.len(),
            Inner::Indexed { offsets, .. } => offsets.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The backing file, if this corpus is in indexed mode.
    pub fn path(&self) -> Option<&Path> {
        match &self.inner {
            Inner::Memory(_) => None,
            Inner::Indexed { path, .. } => Some(path),
        }
    }
}

impl std::fmt::Debug for PassageCorpus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.inner {
            Inner::Memory(map) => f
                .debug_struct("PassageCorpus")
                .field("mode", &"memory")
                .field("passages", &map.len())
                .finish(),
            Inner::Indexed { path, offsets, .. } => f
                .debug_struct("PassageCorpus")
                .field("mode", &"indexed")
                .field("path", path)
                .field("passages", &offsets.len())
                .finish(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;
    use std::io::Write;

    const SAMPLE: &str = concat!(
        r#"{"id":"d1","text":"Thai Flag Meaning: The red stripes represent the blood."}"#,
        "\n",
        r#"{"id":"d2","text":"CPAP is a treatment in which a mask is worn."}"#,
        "\n",
    );

    #[test]
    fn loads_records_and_looks_up_text() {
        let corpus = PassageCorpus::load(Cursor::new(SAMPLE)).unwrap();
        assert_eq!(corpus.len(), 2);
        assert!(corpus.get("d1").unwrap().starts_with("Thai Flag Meaning"));
    }

    #[test]
    fn duplicate_id_is_an_error() {
        let text = "{\"id\":\"d1\",\"text\":\"a\"}\n{\"id\":\"d1\",\"text\":\"b\"}\n";
        let err = PassageCorpus::load(Cursor::new(text)).unwrap_err();
        assert!(matches!(err, TrecError::DuplicateCorpusId { line: 2, .. }));
    }

    #[test]
    fn missing_id_lookup_is_a_defined_error() {
        let corpus = PassageCorpus::load(Cursor::new(SAMPLE)).unwrap();
        let err = corpus.get("missing").unwrap_err();
        assert!(matches!(err, TrecError::PassageNotFound { .. }));
    }

    #[test]
    fn missing_field_is_an_error() {
        let err = PassageCorpus::load(Cursor::new("{\"id\":\"d1\"}\n")).unwrap_err();
        assert!(matches!(err, TrecError::CorpusRecord { line: 1, .. }));
    }

    #[test]
    fn malformed_json_is_an_error() {
        let err = PassageCorpus::load(Cursor::new("{not json\n")).unwrap_err();
        assert!(matches!(err, TrecError::CorpusRecord { line: 1, .. }));
    }

    #[test]
    fn field_mapping_supports_foreign_names() {
        let text = "{\"pid\":\"d9\",\"passage\":\"some text\"}\n";
        let fields = CorpusFields {
            id: "pid".to_string(),
            text: "passage".to_string(),
        };
        let corpus = PassageCorpus::load_with_fields(Cursor::new(text), &fields).unwrap();
        assert_eq!(corpus.get("d9").unwrap(), "some text");
    }

    #[test]
    fn indexed_mode_matches_in_memory_mode() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(SAMPLE.as_bytes()).unwrap();
        file.flush().unwrap();

        let indexed = PassageCorpus::open_indexed(file.path()).unwrap();
        let memory = PassageCorpus::load(Cursor::new(SAMPLE)).unwrap();
        assert_eq!(indexed.len(), memory.len());
        for id in ["d1", "d2"] {
            assert_eq!(indexed.get(id).unwrap(), memory.get(id).unwrap());
        }
        // Repeated and out-of-order lookups go through the seek path.
        assert_eq!(indexed.get("d2").unwrap(), memory.get("d2").unwrap());
        assert_eq!(indexed.get("d1").unwrap(), memory.get("d1").unwrap());
        assert!(indexed.get("nope").is_err());
        assert!(indexed.path().is_some());
    }
}
