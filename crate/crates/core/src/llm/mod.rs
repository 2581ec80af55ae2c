//! OpenAI-compatible chat-completion client with retries, a bounded
//! in-flight request count, a persistent response cache, and a
//! deterministic mock backend for offline runs and tests.

mod cache;
mod http;
mod mock;

use std::path::PathBuf;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

pub use cache::cache_key;
pub use mock::{heuristic_grade, mock_complete};

use cache::{CacheEntry, ResponseCache};
use http::HttpTransport;
use mock::MockTransport;

use crate::prompt::PromptText;

/// Which completion backend to call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Remote,
    Mock,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remote" => Ok(Backend::Remote),
            "mock" => Ok(Backend::Mock),
            other => Err(format!(
                "unknown backend {other:?} (expected remote or mock)"
            )),
        }
    }
}

/// Client configuration. The sampling defaults are the assessment
/// configuration this toolkit reproduces: temperature 0, top_p 1,
/// frequency penalty 0.5, presence penalty 0, and no stop sequences.
#[derive(Debug, Clone)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key. The key is
    /// never accepted on the command line or from files.
    pub api_key_env: String,
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    /// The expected reply is one short line; a small budget caps cost.
    /// Override for chattier models.
    pub max_output_tokens: u32,
    pub request_timeout: Duration,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub cache_dir: Option<PathBuf>,
    pub backend: Backend,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "https://api.openai.com/v1/chat/completions".to_string(),
            model_name: "gpt-4o".to_string(),
            api_key_env: "OPENAI_API_KEY".to_string(),
            temperature: 0.0,
            top_p: 1.0,
            frequency_penalty: 0.5,
            presence_penalty: 0.0,
            max_output_tokens: 100,
            request_timeout: Duration::from_secs(60),
            max_retries: 5,
            max_in_flight: 4,
            cache_dir: None,
            backend: Backend::Remote,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.temperature < 0.0 {
            return Err(LlmError::InvalidConfig(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(LlmError::InvalidConfig(format!(
                "top_p must be in (0, 1], got {}",
                self.top_p
            )));
        }
        if self.max_in_flight == 0 {
            return Err(LlmError::InvalidConfig(
                "max_in_flight must be at least 1".to_string(),
            ));
        }
        if self.max_output_tokens == 0 {
            return Err(LlmError::InvalidConfig(
                "max_output_tokens must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// One completed (or cache-served) request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionResult {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency: Duration,
    pub from_cache: bool,
    /// Number of transport attempts; 0 only when served from cache.
    pub attempt_count: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("environment variable {var} is not set (expected the API key there)")]
    MissingApiKey { var: String },
    #[error("authentication rejected by endpoint: {0}")]
    Auth(String),
    #[error(
        "retries exhausted after {attempts} attempts (last status: {last_status:?}): {message}"
    )]
    ExhaustedRetries {
        attempts: u32,
        last_status: Option<u16>,
        message: String,
    },
    #[error("malformed endpoint reply: {0}")]
    MalformedReply(String),
    #[error("request rejected: {0}")]
    Rejected(String),
    #[error("mock backend could not extract query/passage: {0}")]
    MockPrompt(String),
    #[error("cache i/o error: {0}")]
    Cache(#[from] std::io::Error),
}

/// Everything a transport reports back on success.
#[derive(Debug, Clone)]
pub(crate) struct TransportReply {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug)]
pub(crate) enum TransportError {
    /// 429, 5xx, timeouts, connection resets: worth retrying.
    Retryable {
        status: Option<u16>,
        message: String,
    },
    /// 401/403: retrying cannot help.
    Auth(String),
    /// The endpoint answered but not with a usable completion.
    Malformed(String),
    /// Any other non-retryable rejection (4xx and friends).
    Fatal {
        status: Option<u16>,
        message: String,
    },
}

pub(crate) trait Transport: Send + Sync {
    fn send(&self, prompt: &str, params: &SamplingParams)
        -> Result<TransportReply, TransportError>;
}

/// The sampling parameters that identify a request, both on the wire and
/// in the cache key.
#[derive(Debug, Clone, serde::Serialize)]
pub(crate) struct SamplingParams {
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub max_output_tokens: u32,
}

impl SamplingParams {
    fn from_config(cfg: &LlmConfig) -> Self {
        Self {
            model: cfg.model_name.clone(),
            temperature: cfg.temperature,
            top_p: cfg.top_p,
            frequency_penalty: cfg.frequency_penalty,
            presence_penalty: cfg.presence_penalty,
            max_output_tokens: cfg.max_output_tokens,
        }
    }
}

/// Exponential backoff with full jitter.
#[derive(Debug, Clone)]
pub struct BackoffPolicy {
    pub base: Duration,
    pub factor: f64,
    pub cap: Duration,
}

impl Default for BackoffPolicy {
    fn default() -> Self {
        Self {
            base: Duration::from_secs(1),
            factor: 2.0,
            cap: Duration::from_secs(60),
        }
    }
}

impl BackoffPolicy {
    /// Sleep before retry number `retry` (1-based): full jitter over
    /// `min(cap, base * factor^(retry-1))`.
    fn delay(&self, retry: u32) -> Duration {
        let exp = self.base.as_secs_f64() * self.factor.powi(retry.saturating_sub(1) as i32);
        let capped = exp.min(self.cap.as_secs_f64());
        Duration::from_secs_f64(capped * fastrand::f64())
    }
}

struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().expect("semaphore poisoned");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("semaphore poisoned");
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.semaphore.permits.lock().expect("semaphore poisoned");
        *permits += 1;
        self.semaphore.available.notify_one();
    }
}

/// Thread-safe completion client. Clone-free sharing via `&LlmClient` is
/// enough: every method takes `&self`.
pub struct LlmClient {
    transport: Arc<dyn Transport>,
    params: SamplingParams,
    cache: Option<ResponseCache>,
    limiter: Semaphore,
    max_retries: u32,
    max_in_flight: usize,
    backoff: BackoffPolicy,
}

impl LlmClient {
    /// Builds a client for the configured backend. For the remote backend
    /// this resolves the API key from the environment immediately, so a
    /// missing key fails before any work is queued.
    pub fn new(cfg: &LlmConfig) -> Result<Self, LlmError> {
        cfg.validate()?;
        let transport: Arc<dyn Transport> = match cfg.backend {
            Backend::Remote => Arc::new(HttpTransport::from_config(cfg)?),
            Backend::Mock => Arc::new(MockTransport::new(0)),
        };
        Ok(Self::with_transport(cfg, transport))
    }

    pub(crate) fn with_transport(cfg: &LlmConfig, transport: Arc<dyn Transport>) -> Self {
        Self {
            transport,
            params: SamplingParams::from_config(cfg),
            cache: cfg.cache_dir.as_ref().map(|dir| ResponseCache::new(dir)),
            limiter: Semaphore::new(cfg.max_in_flight),
            max_retries: cfg.max_retries,
            max_in_flight: cfg.max_in_flight,
            backoff: BackoffPolicy::default(),
        }
    }

    /// Replaces the retry backoff schedule (the default is base 1s,
    /// factor 2, cap 60s, full jitter).
    pub fn with_backoff(mut self, backoff: BackoffPolicy) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }

    pub fn model_name(&self) -> &str {
        &self.params.model
    }

    /// Hex cache key of a prompt under this client's model and sampling
    /// parameters; also used as the audit log's prompt hash.
    pub fn prompt_key(&self, prompt: &PromptText) -> String {
        cache::cache_key_for(prompt.as_str(), &self.params)
    }

    /// Sends one prompt. A cache hit short-circuits the network entirely;
    /// otherwise the request is retried on 429/5xx/timeout with
    /// exponential backoff and full jitter, up to `max_retries` retries.
    pub fn complete(&self, prompt: &PromptText) -> Result<CompletionResult, LlmError> {
        let started = Instant::now();
        let key = self.prompt_key(prompt);
        if let Some(cache) = &self.cache {
            if let Some(entry) = cache.get(&key) {
                return Ok(CompletionResult {
                    text: entry.response_text,
                    prompt_tokens: entry.prompt_tokens,
                    completion_tokens: entry.completion_tokens,
                    latency: started.elapsed(),
                    from_cache: true,
                    attempt_count: 0,
                });
            }
        }

        let reply = {
            let _permit = self.limiter.acquire();
            self.send_with_retries(prompt.as_str())?
        };
        let (reply, attempts) = reply;

        if let Some(cache) = &self.cache {
            cache.put(
                &key,
                &CacheEntry::new(prompt.as_str(), &self.params, &reply),
            )?;
        }
        Ok(CompletionResult {
            text: reply.text,
            prompt_tokens: reply.prompt_tokens,
            completion_tokens: reply.completion_tokens,
            latency: started.elapsed(),
            from_cache: false,
            attempt_count: attempts,
        })
    }

    fn send_with_retries(&self, prompt: &str) -> Result<(TransportReply, u32), LlmError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.transport.send(prompt, &self.params) {
                Ok(reply) => return Ok((reply, attempt)),
                Err(TransportError::Retryable { status, message }) => {
                    if attempt > self.max_retries {
                        return Err(LlmError::ExhaustedRetries {
                            attempts: attempt,
                            last_status: status,
                            message,
                        });
                    }
                    std::thread::sleep(self.backoff.delay(attempt));
                }
                Err(TransportError::Auth(message)) => return Err(LlmError::Auth(message)),
                Err(TransportError::Malformed(message)) => {
                    return Err(LlmError::MalformedReply(message))
                }
                Err(TransportError::Fatal { status, message }) => {
                    return Err(LlmError::Rejected(match status {
                        Some(code) => format!("HTTP {code}: {message}"),
                        None => message,
                    }))
                }
            }
        }
    }
}
