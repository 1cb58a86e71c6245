use std::time::Instant;

use super::sha256_hex;
use crate::backend::{Backend, BackendError, CompletionRequest, Purpose};
use crate::log::{CompletionExchange, EventSink, LogEvent};

/// A backend plus the log sink its exchanges are mirrored to. Tracks the
/// episode and step so every request id is unique within a run.
pub struct LlmChannel<'a> {
    backend: &'a mut dyn Backend,
    sink: &'a mut dyn EventSink,
    episode: usize,
    step: usize,
    calls: usize,
}

impl<'a> LlmChannel<'a> {
    pub fn new(backend: &'a mut dyn Backend, sink: &'a mut dyn EventSink) -> Self {
        Self {
            backend,
            sink,
            episode: 0,
            step: 0,
            calls: 0,
        }
    }

    pub fn set_position(&mut self, episode: usize, step: usize) {
        if (episode, step) != (self.episode, self.step) {
            self.calls = 0;
        }
        self.episode = episode;
        self.step = step;
    }

    pub fn emit(&mut self, event: LogEvent) {
        self.sink.emit(event);
    }

    /// One completion call, logged whether it succeeds or not.
    pub fn query(&mut self, purpose: Purpose, prompt: &str) -> Result<String, BackendError> {
        let request_id = format!("e{}-s{}-{}", self.episode, self.step, self.calls);
        self.calls += 1;
        let started = Instant::now();
        let result = self.backend.complete(&CompletionRequest { prompt, purpose });
        let latency = if self.backend.measures_latency() {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        };
        let (response, error, attempt) = match &result {
            Ok(c) => (Some(c.text.clone()), None, c.attempts),
            Err(e) => (None, Some(e.to_string()), e.attempts()),
        };
        self.sink.emit(LogEvent::Exchange(CompletionExchange {
            episode: self.episode,
            step: self.step,
            request_id,
            purpose,
            prompt: prompt.to_string(),
            prompt_hash: sha256_hex(prompt),
            response,
            error,
            latency,
            attempt,
        }));
        result.map(|c| c.text)
    }
}
