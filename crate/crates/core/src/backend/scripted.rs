use std::collections::{HashMap, VecDeque};
use std::path::Path;

use super::{Backend, BackendError, Completion, CompletionRequest, Purpose};

/// Replays responses from a script, one response per line.
///
/// A literal `\n` inside a line becomes a newline. Lines starting with
/// `@<purpose> ` (for example `@reflect Try the other arm.`) are only served
/// to calls with that purpose; every other line feeds a shared queue that is
/// used when no keyed response is pending.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    shared: VecDeque<String>,
    keyed: HashMap<Purpose, VecDeque<String>>,
    calls: usize,
}

impl ScriptedBackend {
    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("script {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, BackendError> {
        let mut backend = Self::default();
        for line in text.lines() {
            let line = line.trim_end_matches('\r');
            if let Some(rest) = line.strip_prefix('@') {
                let (key, response) = rest.split_once(' ').unwrap_or((rest, ""));
                let purpose: Purpose = key.parse()?;
                backend.keyed.entry(purpose).or_default().push_back(unescape(response));
            } else {
                backend.shared.push_back(unescape(line));
            }
        }
        Ok(backend)
    }

    pub fn from_responses<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            shared: responses.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn push_keyed(&mut self, purpose: Purpose, response: impl Into<String>) {
        self.keyed.entry(purpose).or_default().push_back(response.into());
    }

    pub fn remaining(&self) -> usize {
        self.shared.len() + self.keyed.values().map(VecDeque::len).sum::<usize>()
    }
}

fn unescape(line: &str) -> String {
    line.replace("\\n", "\n")
}

impl Backend for ScriptedBackend {
    fn complete(&mut self, request: &CompletionRequest<'_>) -> Result<Completion, BackendError> {
        let next = self
            .keyed
            .get_mut(&request.purpose)
            .and_then(VecDeque::pop_front)
            .or_else(|| self.shared.pop_front());
        match next {
            Some(text) => {
                self.calls += 1;
                Ok(Completion::single(text))
            }
            None => Err(BackendError::ScriptExhausted { calls: self.calls }),
        }
    }
}
