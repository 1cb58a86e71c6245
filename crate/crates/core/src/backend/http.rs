//! Blocking client for OpenAI-style `/chat/completions` endpoints.

use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendConfig, BackendError, Completion, CompletionRequest, API_KEY_ENV};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
pub struct InFlightLimit {
    cap: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InFlightLimit {
    pub fn new(cap: usize) -> Self {
        Self {
            cap: cap.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> InFlightGuard<'_> {
        let mut active = self.active.lock().expect("limit lock poisoned");
        while *active >= self.cap {
            active = self.freed.wait(active).expect("limit lock poisoned");
        }
        *active += 1;
        InFlightGuard { limit: self }
    }
}

pub struct InFlightGuard<'a> {
    limit: &'a InFlightLimit,
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut active = self.limit.active.lock().expect("limit lock poisoned");
        *active -= 1;
        self.limit.freed.notify_one();
    }
}

pub struct HttpBackend {
    config: BackendConfig,
    url: String,
    agent: ureq::Agent,
    api_key: Option<String>,
    limit: Arc<InFlightLimit>,
}

enum Attempt {
    Done(Result<String, BackendError>),
    Retry(String),
}

impl HttpBackend {
    pub fn new(config: BackendConfig, limit: Arc<InFlightLimit>) -> Self {
        let endpoint = config.endpoint_url.clone().unwrap_or_default();
        let url = if endpoint.trim_end_matches('/').ends_with("/chat/completions") {
            endpoint
        } else {
            format!("{}/chat/completions", endpoint.trim_end_matches('/'))
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.request_timeout_secs.max(0.001))))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            config,
            url,
            agent,
            limit,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn request_body(&self, prompt: &str) -> ChatRequest {
        ChatRequest {
            model: self.config.model_name.clone().unwrap_or_default(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content: prompt.to_string(),
            }],
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        }
    }

    fn attempt(&self, body: &ChatRequest) -> Attempt {
        let _slot = self.limit.acquire();
        let mut request = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = match request.send_json(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        if !(200..300).contains(&status) {
            let detail = response.body_mut().read_to_string().unwrap_or_default();
            return Attempt::Done(Err(BackendError::Unavailable {
                endpoint: self.url.clone(),
                attempts: 1,
                reason: format!("HTTP {status}: {}", detail.chars().take(200).collect::<String>()),
            }));
        }
        let value: serde_json::Value = match response.body_mut().read_json() {
            Ok(v) => v,
            Err(e) => return Attempt::Done(Err(BackendError::MalformedResponse(e.to_string()))),
        };
        Attempt::Done(extract_content(&value))
    }
}

/// Reads `choices[0].message.content`.
pub(crate) fn extract_content(value: &serde_json::Value) -> Result<String, BackendError> {
    value
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| BackendError::MalformedResponse("missing choices[0].message.content".to_string()))
}

impl Backend for HttpBackend {
    fn complete(&mut self, request: &CompletionRequest<'_>) -> Result<Completion, BackendError> {
        let body = self.request_body(request.prompt);
        let max_attempts = self.config.max_retries + 1;
        let mut last_reason = String::new();
        for attempt in 1..=max_attempts {
            match self.attempt(&body) {
                Attempt::Done(Ok(text)) => {
                    return Ok(Completion {
                        text,
                        attempts: attempt,
                    })
                }
                Attempt::Done(Err(BackendError::Unavailable { endpoint, reason, .. })) => {
                    return Err(BackendError::Unavailable {
                        endpoint,
                        attempts: attempt,
                        reason,
                    })
                }
                Attempt::Done(Err(e)) => return Err(e),
                Attempt::Retry(reason) => {
                    log::warn!("{}: attempt {attempt}/{max_attempts} failed: {reason}", self.url);
                    last_reason = reason;
                    if attempt < max_attempts {
                        let backoff = self.config.retry_backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                        thread::sleep(Duration::from_millis(backoff));
                    }
                }
            }
        }
        Err(BackendError::Unavailable {
            endpoint: self.url.clone(),
            attempts: max_attempts,
            reason: last_reason,
        })
    }

    fn measures_latency(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::Purpose;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    /// Serves the given (status, body) pairs, one per connection.
    fn serve(replies: Vec<(u16, String)>) -> (String, thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = thread::spawn(move || {
            let mut bodies = Vec::new();
            for (status, body) in replies {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0u8; len];
                reader.read_exact(&mut buf).unwrap();
                bodies.push(String::from_utf8(buf).unwrap());
                let resp = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(resp.as_bytes()).unwrap();
            }
            bodies
        });
        (format!("http://{addr}/v1"), handle)
    }

    fn ok_body(content: &str) -> String {
        serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
    }

    fn backend(url: String, retries: u32) -> HttpBackend {
        let mut cfg = BackendConfig::http(url, "test-model");
        cfg.max_retries = retries;
        cfg.retry_backoff_ms = 1;
        cfg.request_timeout_secs = 5.0;
        HttpBackend::new(cfg, Arc::new(InFlightLimit::new(2)))
    }

    #[test]
    fn retries_server_errors_then_succeeds() {
        let (url, server) = serve(vec![(500, "{}".into()), (500, "{}".into()), (200, ok_body("Rock"))]);
        let mut b = backend(url, 3);
        let out = b
            .complete(&CompletionRequest {
                prompt: "hello",
                purpose: Purpose::Act,
            })
            .unwrap();
        assert_eq!(out.text, "Rock");
        assert_eq!(out.attempts, 3);
        let bodies = server.join().unwrap();
        let sent: ChatRequest = serde_json::from_str(&bodies[2]).unwrap();
        assert_eq!(sent.model, "test-model");
        assert_eq!(sent.messages.len(), 1);
        assert_eq!(sent.messages[0].role, "user");
        assert_eq!(sent.messages[0].content, "hello");
        assert_eq!(sent.max_tokens, 512);
    }

    #[test]
    fn gives_up_after_max_retries() {
        let (url, server) = serve(vec![(503, "{}".into()), (503, "{}".into())]);
        let mut b = backend(url, 1);
        let err = b
            .complete(&CompletionRequest {
                prompt: "x",
                purpose: Purpose::Act,
            })
            .unwrap_err();
        assert!(matches!(err, BackendError::Unavailable { attempts: 2, .. }));
        server.join().unwrap();
    }

    #[test]
    fn missing_content_is_malformed() {
        let (url, server) = serve(vec![(200, r#"{"choices":[]}"#.into())]);
        let mut b = backend(url, 0);
        let err = b
            .complete(&CompletionRequest {
                prompt: "x",
                purpose: Purpose::Act,
            })
            .unwrap_err();
        assert!(matches!(err, BackendError::MalformedResponse(_)));
        server.join().unwrap();
    }

    #[test]
    fn unreachable_endpoint_names_the_url() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        let mut b = backend(format!("http://{addr}/v1/chat/completions"), 1);
        let err = b
            .complete(&CompletionRequest {
                prompt: "x",
                purpose: Purpose::Act,
            })
            .unwrap_err();
        assert!(err.to_string().contains(&addr.to_string()), "{err}");
    }

    #[test]
    fn limit_blocks_beyond_cap() {
        let limit = Arc::new(InFlightLimit::new(1));
        let g = limit.acquire();
        let l2 = limit.clone();
        let t = thread::spawn(move || {
            let _g = l2.acquire();
        });
        thread::sleep(Duration::from_millis(20));
        assert!(!t.is_finished());
        drop(g);
        t.join().unwrap();
    }
}
