//! Completion backends: a chat-completions HTTP client, a scripted responder
//! and a uniform random-action responder, all behind [`Backend`].

mod http;
mod random;
mod scripted;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{ChatMessage, ChatRequest, HttpBackend, InFlightLimit};
pub use random::RandomBackend;
pub use scripted::ScriptedBackend;

/// Environment variable holding the bearer token for the HTTP backend.
pub const API_KEY_ENV: &str = "DYNGAME_API_KEY";

/// Why the harness is calling the model; scripted backends can key on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Act,
    Reflect,
    Heuristics,
    Mutate,
    Plan,
}

impl Purpose {
    pub fn as_str(self) -> &'static str {
        match self {
            Purpose::Act => "act",
            Purpose::Reflect => "reflect",
            Purpose::Heuristics => "heuristics",
            Purpose::Mutate => "mutate",
            Purpose::Plan => "plan",
        }
    }
}

impl FromStr for Purpose {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "act" => Ok(Purpose::Act),
            "reflect" => Ok(Purpose::Reflect),
            "heuristics" => Ok(Purpose::Heuristics),
            "mutate" => Ok(Purpose::Mutate),
            "plan" => Ok(Purpose::Plan),
            other => Err(BackendError::Config(format!("unknown script key `@{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub prompt: &'a str,
    pub purpose: Purpose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    /// Transport attempts used, including the successful one.
    pub attempts: u32,
}

impl Completion {
    pub fn single(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            attempts: 1,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend unavailable at {endpoint} after {attempts} attempt(s): {reason}")]
    Unavailable {
        endpoint: String,
        attempts: u32,
        reason: String,
    },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("response script exhausted after {calls} call(s)")]
    ScriptExhausted { calls: usize },
    #[error("backend config: {0}")]
    Config(String),
}

impl BackendError {
    pub fn attempts(&self) -> u32 {
        match self {
            BackendError::Unavailable { attempts, .. } => *attempts,
            _ => 1,
        }
    }
}

pub trait Backend: Send {
    fn complete(&mut self, request: &CompletionRequest<'_>) -> Result<Completion, BackendError>;

    /// Whether wall-clock latency is meaningful. Offline backends report zero
    /// latency so their logs stay byte-identical across runs.
    fn measures_latency(&self) -> bool {
        false
    }
}

impl Backend for Box<dyn Backend> {
    fn complete(&mut self, request: &CompletionRequest<'_>) -> Result<Completion, BackendError> {
        (**self).complete(request)
    }

    fn measures_latency(&self) -> bool {
        (**self).measures_latency()
    }
}

/// Adapts a closure into a backend; handy for tests and custom policies.
pub struct FnBackend<F>(pub F);

impl<F> Backend for FnBackend<F>
where
    F: FnMut(&CompletionRequest<'_>) -> Result<String, BackendError> + Send,
{
    fn complete(&mut self, request: &CompletionRequest<'_>) -> Result<Completion, BackendError> {
        (self.0)(request).map(Completion::single)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Scripted,
    Random,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Http => "http",
            BackendKind::Scripted => "scripted",
            BackendKind::Random => "random",
        })
    }
}

impl FromStr for BackendKind {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "http" => Ok(BackendKind::Http),
            "scripted" => Ok(BackendKind::Scripted),
            "random" => Ok(BackendKind::Random),
            other => Err(BackendError::Config(format!("unknown backend kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint_url: Option<String>,
    pub model_name: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub request_timeout_secs: f64,
    /// Re-sends after the first failed attempt.
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
    pub script_path: Option<PathBuf>,
    /// Cap on concurrent HTTP requests across parallel runs.
    pub max_in_flight: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Random,
            endpoint_url: None,
            model_name: None,
            temperature: 0.7,
            max_tokens: 512,
            request_timeout_secs: 120.0,
            max_retries: 3,
            retry_backoff_ms: 500,
            script_path: None,
            max_in_flight: 4,
        }
    }
}

impl BackendConfig {
    pub fn scripted(path: impl Into<PathBuf>) -> Self {
        Self {
            kind: BackendKind::Scripted,
            script_path: Some(path.into()),
            ..Self::default()
        }
    }

    pub fn http(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Http,
            endpoint_url: Some(endpoint.into()),
            model_name: Some(model.into()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(BackendError::Config("temperature must be >= 0".into()));
        }
        match self.kind {
            BackendKind::Http => {
                if self.endpoint_url.as_deref().is_none_or(str::is_empty) {
                    return Err(BackendError::Config("http backend requires an endpoint".into()));
                }
                if self.model_name.as_deref().is_none_or(str::is_empty) {
                    return Err(BackendError::Config("http backend requires a model name".into()));
                }
            }
            BackendKind::Scripted => {
                if self.script_path.is_none() {
                    return Err(BackendError::Config("scripted backend requires a script path".into()));
                }
            }
            BackendKind::Random => {}
        }
        Ok(())
    }

    /// Label used for the model column of reports.
    pub fn model_label(&self) -> String {
        match self.kind {
            BackendKind::Http => self.model_name.clone().unwrap_or_else(|| "http".into()),
            BackendKind::Scripted => "scripted".into(),
            BackendKind::Random => "random".into(),
        }
    }

    /// Instantiates a backend for one run. `seed` drives the random backend;
    /// `limit` is shared by every HTTP backend of an experiment.
    pub fn build(&self, seed: u64, limit: Option<Arc<InFlightLimit>>) -> Result<Box<dyn Backend>, BackendError> {
        self.validate()?;
        Ok(match self.kind {
            BackendKind::Http => {
                let limit = limit.unwrap_or_else(|| Arc::new(InFlightLimit::new(self.max_in_flight)));
                Box::new(HttpBackend::new(self.clone(), limit))
            }
            BackendKind::Scripted => {
                let path = self.script_path.as_ref().expect("validated");
                Box::new(ScriptedBackend::from_file(path)?)
            }
            BackendKind::Random => Box::new(RandomBackend::new(seed)),
        })
    }
}
