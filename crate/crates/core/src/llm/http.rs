//! OpenAI-compatible chat-completions transport.
//!
//! The entire rendered prompt goes out as a single user message with no
//! system message; sampling parameters are sent on every request.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{LlmConfig, LlmError, SamplingParams, Transport, TransportError, TransportReply};

pub(crate) struct HttpTransport {
    agent: ureq::Agent,
    endpoint: String,
    api_key: String,
}

impl HttpTransport {
    /// Resolves the API key from the configured environment variable.
    pub fn from_config(cfg: &LlmConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(&cfg.api_key_env).map_err(|_| LlmError::MissingApiKey {
            var: cfg.api_key_env.clone(),
        })?;
        Ok(Self::with_key(
            &cfg.endpoint_url,
            &api_key,
            cfg.request_timeout,
        ))
    }

    pub fn with_key(endpoint: &str, api_key: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Self {
            agent,
            endpoint: endpoint.to_string(),
            api_key: api_key.to_string(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Debug, Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl Transport for HttpTransport {
    fn send(
        &self,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<TransportReply, TransportError> {
        let body = json!({
            "model": params.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "frequency_penalty": params.frequency_penalty,
            "presence_penalty": params.presence_penalty,
            "max_tokens": params.max_output_tokens,
        });

        let result = self
            .agent
            .post(&self.endpoint)
            .header("authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body);

        let mut response = match result {
            Ok(response) => response,
            Err(e) => {
                let retryable = matches!(
                    e,
                    ureq::Error::Timeout(_)
                        | ureq::Error::Io(_)
                        | ureq::Error::HostNotFound
                        | ureq::Error::ConnectionFailed
                        | ureq::Error::Protocol(_)
                );
                let message = e.to_string();
                return Err(if retryable {
                    TransportError::Retryable {
                        status: None,
                        message,
                    }
                } else {
                    TransportError::Fatal {
                        status: None,
                        message,
                    }
                });
            }
        };

        let status = response.status().as_u16();
        if status == 401 || status == 403 {
            let detail = response.body_mut().read_to_string().unwrap_or_default();
            return Err(TransportError::Auth(format!("HTTP {status}: {detail}")));
        }
        if status == 429 || (500..600).contains(&status) {
            return Err(TransportError::Retryable {
                status: Some(status),
                message: format!("HTTP {status}"),
            });
        }
        if !(200..300).contains(&status) {
            let detail = response.body_mut().read_to_string().unwrap_or_default();
            return Err(TransportError::Fatal {
                status: Some(status),
                message: detail,
            });
        }

        let parsed: ChatResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| TransportError::Malformed(e.to_string()))?;
        let text = parsed
            .choices
            .first()
            .and_then(|c| c.message.content.clone())
            .ok_or_else(|| TransportError::Malformed("reply has no message content".to_string()))?;
        let usage = parsed.usage.unwrap_or_default();
        Ok(TransportReply {
            text,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{Backend, BackoffPolicy, LlmClient};
    use crate::prompt::render_prompt;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;
    use std::sync::Arc;

    struct Seen {
        authorization: Option<String>,
        body: serde_json::Value,
    }

    /// One-thread HTTP server that answers each accepted connection with
    /// the next scripted (status, body) and reports what it saw.
    fn spawn_server(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<Seen>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let endpoint = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut raw = Vec::new();
                let mut buf = [0u8; 4096];
                let header_end = loop {
                    let n = stream.read(&mut buf).unwrap();
                    raw.extend_from_slice(&buf[..n]);
                    if let Some(i) = raw.windows(4).position(|w| w == b"\r\n\r\n") {
                        break i + 4;
                    }
                };
                let headers = String::from_utf8_lossy(&raw[..header_end]).to_string();
                let content_length: usize = headers
                    .lines()
                    .find_map(|l| {
                        let (name, value) = l.split_once(':')?;
                        name.eq_ignore_ascii_case("content-length")
                            .then(|| value.trim().parse().ok())?
                    })
                    .unwrap_or(0);
                while raw.len() < header_end + content_length {
                    let n = stream.read(&mut buf).unwrap();
                    raw.extend_from_slice(&buf[..n]);
                }
                let authorization = headers.lines().find_map(|l| {
                    let (name, value) = l.split_once(':')?;
                    name.eq_ignore_ascii_case("authorization")
                        .then(|| value.trim().to_string())
                });
                let body_seen: serde_json::Value =
                    serde_json::from_slice(&raw[header_end..header_end + content_length])
                        .unwrap_or(serde_json::Value::Null);
                let _ = tx.send(Seen {
                    authorization,
                    body: body_seen,
                });

                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        (endpoint, rx)
    }

    fn ok_body(text: &str) -> String {
        serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": text}}],
            "usage": {"prompt_tokens": 321, "completion_tokens": 5}
        })
        .to_string()
    }

    fn client_for(endpoint: &str, max_retries: u32) -> LlmClient {
        let cfg = LlmConfig {
            endpoint_url: endpoint.to_string(),
            max_retries,
            backend: Backend::Remote,
            ..LlmConfig::default()
        };
        let transport = HttpTransport::with_key(endpoint, "test-key", cfg.request_timeout);
        LlmClient::with_transport(&cfg, Arc::new(transport)).with_backoff(BackoffPolicy {
            base: std::time::Duration::from_millis(1),
            factor: 1.0,
            cap: std::time::Duration::from_millis(1),
        })
    }

    #[test]
    fn sends_the_documented_wire_format_and_bearer_auth() {
        let (endpoint, rx) = spawn_server(vec![(200, ok_body("##final score: 2"))]);
        let client = client_for(&endpoint, 0);
        let prompt = render_prompt("q1", "p1").unwrap();

        let result = client.complete(&prompt).unwrap();
        assert_eq!(result.text, "##final score: 2");
        assert_eq!(result.prompt_tokens, 321);
        assert_eq!(result.completion_tokens, 5);
        assert_eq!(result.attempt_count, 1);

        let seen = rx.recv().unwrap();
        assert_eq!(seen.authorization.as_deref(), Some("Bearer test-key"));
        assert_eq!(seen.body["model"], "gpt-4o");
        assert_eq!(seen.body["temperature"], 0.0);
        assert_eq!(seen.body["top_p"], 1.0);
        assert_eq!(seen.body["frequency_penalty"], 0.5);
        assert_eq!(seen.body["presence_penalty"], 0.0);
        assert_eq!(seen.body["max_tokens"], 100);
        assert_eq!(seen.body["messages"][0]["role"], "user");
        assert_eq!(seen.body["messages"][0]["content"], prompt.as_str());
        assert!(seen.body.get("stop").is_none());
        assert!(seen.body.get("messages").unwrap().as_array().unwrap().len() == 1);
    }

    #[test]
    fn rate_limit_then_server_error_then_success_is_retried() {
        let (endpoint, _rx) = spawn_server(vec![
            (429, "{}".to_string()),
            (503, "{}".to_string()),
            (200, ok_body("##final score: 1")),
        ]);
        let client = client_for(&endpoint, 5);
        let result = client.complete(&render_prompt("q", "p").unwrap()).unwrap();
        assert_eq!(result.text, "##final score: 1");
        assert_eq!(result.attempt_count, 3);
    }

    #[test]
    fn retries_exhaust_with_the_last_status() {
        let (endpoint, _rx) = spawn_server(vec![
            (429, "{}".to_string()),
            (429, "{}".to_string()),
            (429, "{}".to_string()),
        ]);
        let client = client_for(&endpoint, 2);
        match client.complete(&render_prompt("q", "p").unwrap()) {
            Err(LlmError::ExhaustedRetries {
                attempts,
                last_status,
                ..
            }) => {
                assert_eq!(attempts, 3);
                assert_eq!(last_status, Some(429));
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn unauthorized_fails_without_retrying() {
        let (endpoint, rx) = spawn_server(vec![(401, "{\"error\":\"bad key\"}".to_string())]);
        let client = client_for(&endpoint, 5);
        assert!(matches!(
            client.complete(&render_prompt("q", "p").unwrap()),
            Err(LlmError::Auth(_))
        ));
        // Exactly one request went out.
        assert!(rx.recv().is_ok());
        assert!(rx.try_recv().is_err());
    }

    #[test]
    fn empty_choices_are_a_malformed_reply() {
        let (endpoint, _rx) = spawn_server(vec![(200, "{\"choices\":[]}".to_string())]);
        let client = client_for(&endpoint, 0);
        assert!(matches!(
            client.complete(&render_prompt("q", "p").unwrap()),
            Err(LlmError::MalformedReply(_))
        ));
    }

    #[test]
    fn other_client_errors_are_rejected_outright() {
        let (endpoint, _rx) = spawn_server(vec![(404, "no such route".to_string())]);
        let client = client_for(&endpoint, 5);
        assert!(matches!(
            client.complete(&render_prompt("q", "p").unwrap()),
            Err(LlmError::Rejected(_))
        ));
    }

    #[test]
    fn connection_refused_is_retryable_until_exhaustion() {
        // Bind then drop, so the port is (very likely) closed.
        let addr = {
            let listener = TcpListener::bind("127.0.0.1:0").unwrap();
            listener.local_addr().unwrap()
        };
        let endpoint = format!("http://{addr}/v1/chat/completions");
        let client = client_for(&endpoint, 1);
        match client.complete(&render_prompt("q", "p").unwrap()) {
            Err(LlmError::ExhaustedRetries { attempts, .. }) => assert_eq!(attempts, 2),
            other => panic!("unexpected: {other:?}"),
        }
    }
}
