//! JSONL run logs: one record per line, tagged by `kind`, each carrying the
//! run index.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Augmentation, StepRecord};
use crate::backend::Purpose;
use crate::env::{EnvConfig, EpisodeScore, StepInfo};
use crate::strategy::{LineageEntry, PlannerRecommendation, StrategyKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionExchange {
    pub episode: usize,
    pub step: usize,
    pub request_id: String,
    pub purpose: Purpose,
    pub prompt: String,
    pub prompt_hash: String,
    pub response: Option<String>,
    pub error: Option<String>,
    /// Seconds; zero for offline backends.
    pub latency: f64,
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub episode: usize,
    pub step: usize,
    pub prompt_hash: String,
    pub manual: String,
    pub objective: String,
    pub observation: String,
    pub legal_actions: Vec<String>,
    pub augmentations: Vec<Augmentation>,
    pub omitted_steps: usize,
    pub action: String,
    pub raw_response: String,
    pub parse_attempts: u32,
    pub fallback_used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStart {
    pub model: String,
    pub strategy: StrategyKind,
    pub backend: String,
    pub run_seed: u64,
    pub env: EnvConfig,
    pub variant: String,
    /// Template name to SHA-256 of its text.
    pub templates: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEvent {
    RunStart(RunStart),
    EpisodeStart {
        episode: usize,
        seed: u64,
        observation: String,
        flags: StepInfo,
    },
    Exchange(CompletionExchange),
    Decision(DecisionRecord),
    Step {
        episode: usize,
        #[serde(flatten)]
        record: StepRecord,
    },
    Reflection {
        episode: usize,
        step: usize,
        text: String,
    },
    ReflectionSkipped {
        episode: usize,
        step: usize,
        error: String,
    },
    Plan {
        episode: usize,
        step: usize,
        recommendation: Option<PlannerRecommendation>,
        error: Option<String>,
    },
    Lineage {
        episode: usize,
        #[serde(flatten)]
        entry: LineageEntry,
    },
    EpisodeEnd {
        episode: usize,
        cumulative_reward: f64,
        score: Option<EpisodeScore>,
        horizon: usize,
        steps: usize,
        aborted: bool,
    },
    RunEnd {
        episodes_completed: usize,
        mean_score: Option<f64>,
        aborted: bool,
        error: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub run: usize,
    #[serde(flatten)]
    pub event: LogEvent,
}

pub trait EventSink {
    fn emit(&mut self, event: LogEvent);
}

impl EventSink for Vec<LogEvent> {
    fn emit(&mut self, event: LogEvent) {
        self.push(event);
    }
}

/// Discards everything.
pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&mut self, _event: LogEvent) {}
}

/// Appends records to a JSONL stream. The first write error is kept and
/// reported by [`JsonlSink::finish`].
pub struct JsonlSink<W: Write> {
    run: usize,
    writer: W,
    error: Option<io::Error>,
}

impl JsonlSink<BufWriter<File>> {
    pub fn create(path: &Path, run: usize) -> io::Result<Self> {
        Ok(Self::new(BufWriter::new(File::create(path)?), run))
    }
}

impl<W: Write> JsonlSink<W> {
    pub fn new(writer: W, run: usize) -> Self {
        Self {
            run,
            writer,
            error: None,
        }
    }

    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.writer.flush()?;
        Ok(self.writer)
    }
}

impl<W: Write> EventSink for JsonlSink<W> {
    fn emit(&mut self, event: LogEvent) {
        if self.error.is_some() {
            return;
        }
        let record = LogRecord { run: self.run, event };
        let result = serde_json::to_writer(&mut self.writer, &record)
            .map_err(io::Error::from)
            .and_then(|_| self.writer.write_all(b"\n"));
        if let Err(e) = result {
            self.error = Some(e);
        }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}:{line}: corrupt log record: {message}")]
    CorruptLog {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

pub fn read_log(path: &Path) -> Result<Vec<LogRecord>, LogError> {
    let file = File::open(path).map_err(|source| LogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| LogError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| LogError::CorruptLog {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}
