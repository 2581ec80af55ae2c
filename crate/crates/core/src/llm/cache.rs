//! Persistent response cache: one human-inspectable JSON file per
//! (model, prompt, sampling parameters) key.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{SamplingParams, TransportReply};

/// Hex SHA-256 over the model name, the full prompt, and every sampling
/// parameter. Changing any of them changes the key.
pub fn cache_key(
    model: &str,
    prompt: &str,
    temperature: f64,
    top_p: f64,
    frequency_penalty: f64,
    presence_penalty: f64,
    max_output_tokens: u32,
) -> String {
    let params = SamplingParams {
        model: model.to_string(),
        temperature,
        top_p,
        frequency_penalty,
        presence_penalty,
        max_output_tokens,
    };
    cache_key_for(prompt, &params)
}

pub(crate) fn cache_key_for(prompt: &str, params: &SamplingParams) -> String {
    #[derive(Serialize)]
    struct KeyMaterial<'a> {
        prompt: &'a str,
        #[serde(flatten)]
        params: &'a SamplingParams,
    }
    let material =
        serde_json::to_vec(&KeyMaterial { prompt, params }).expect("key material serializes");
    hex::encode(Sha256::digest(&material))
}

/// The stored value: enough to audit what was asked and answered.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct CacheEntry {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub max_output_tokens: u32,
    pub response_text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub created_unix_ms: u64,
}

impl CacheEntry {
    pub fn new(prompt: &str, params: &SamplingParams, reply: &TransportReply) -> Self {
        Self {
            model: params.model.clone(),
            prompt: prompt.to_string(),
            temperature: params.temperature,
            top_p: params.top_p,
            frequency_penalty: params.frequency_penalty,
            presence_penalty: params.presence_penalty,
            max_output_tokens: params.max_output_tokens,
            response_text: reply.text.clone(),
            prompt_tokens: reply.prompt_tokens,
            completion_tokens: reply.completion_tokens,
            created_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
        }
    }
}

#[derive(Debug)]
pub(crate) struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
        }
    }

    /// `<cache_dir>/<first-2-hex>/<hash>.json`
    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    /// An unreadable or corrupt entry counts as a miss; the next write
    /// replaces it.
    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        let bytes = fs::read(self.path(key)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    /// Writes through a temp file and a rename, so readers never observe
    /// a half-written entry. Identical-content races are last-write-wins.
    pub fn put(&self, key: &str, entry: &CacheEntry) -> std::io::Result<()> {
        static WRITE_SEQ: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
        let path = self.path(key);
        let parent = path.parent().expect("cache path has a parent");
        fs::create_dir_all(parent)?;
        let tmp = parent.join(format!(
            "{key}.tmp.{}.{}",
            std::process::id(),
            WRITE_SEQ.fetch_add(1, std::sync::atomic::Ordering::Relaxed)
        ));
        fs::write(&tmp, serde_json::to_vec_pretty(entry)?)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}
