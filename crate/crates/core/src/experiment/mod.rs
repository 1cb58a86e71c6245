//! Batch experiments: runs × episodes with per-run JSONL logs, a summary CSV,
//! and report generation from saved logs.

mod config;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use thiserror::Error;

pub use config::{episode_seed, run_seed, ExperimentConfig, Settings, KNOWN_KEYS};
pub use report::{load_runs, report, LoadedRun, Report, ReportOptions};

use crate::agent::{run_episode, AgentError, LlmChannel};
use crate::backend::{Backend, BackendError, InFlightLimit};
use crate::env::Environment;
use crate::eval::{EvalError, RunSummary};
use crate::log::{EventSink, JsonlSink, LogError, LogEvent, RunStart};
use crate::strategy::{templates, StrategyError, StrategyState};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("run {run}, episode {episode}, step {step}: {source}")]
    Backend {
        run: usize,
        episode: usize,
        step: usize,
        #[source]
        source: BackendError,
    },
    #[error("run {run}, episode {episode}: {message}")]
    Run {
        run: usize,
        episode: usize,
        message: String,
    },
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl ExperimentError {
    /// Process exit code: 2 config, 3 backend, 4 log corruption, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Eval(_) => 2,
            ExperimentError::Log(LogError::Io { .. }) => 2,
            ExperimentError::Backend { .. } => 3,
            ExperimentError::Log(LogError::CorruptLog { .. }) => 4,
            ExperimentError::Io { .. } | ExperimentError::Run { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub run: usize,
    pub seed: u64,
    pub log_path: Option<PathBuf>,
    pub episode_scores: Vec<f64>,
    pub episode_rewards: Vec<f64>,
    pub error: Option<ExperimentError>,
}

impl RunOutcome {
    pub fn aborted(&self) -> bool {
        self.error.is_some()
    }

    pub fn mean_score(&self) -> Option<f64> {
        mean(&self.episode_scores)
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub output_dir: PathBuf,
    pub runs: Vec<RunOutcome>,
    /// Over runs that finished every episode; `None` if none did.
    pub summary: Option<RunSummary>,
}

impl ExperimentOutcome {
    /// The first run error, by run index.
    pub fn first_error(&self) -> Option<&ExperimentError> {
        self.runs.iter().find_map(|r| r.error.as_ref())
    }
}

/// Plays every episode of one run, logging to `sink`.
pub fn execute_run(
    config: &ExperimentConfig,
    run: usize,
    backend: &mut dyn Backend,
    sink: &mut dyn EventSink,
) -> RunOutcome {
    let seed = run_seed(config.master_seed, run);
    sink.emit(LogEvent::RunStart(RunStart {
        model: config.backend.model_label(),
        strategy: config.strategy,
        backend: config.backend.kind.to_string(),
        run_seed: seed,
        env: config.env.clone(),
        variant: config.env.variant_label(),
        templates: templates::template_hashes(),
    }));
    let mut outcome = RunOutcome {
        run,
        seed,
        log_path: None,
        episode_scores: Vec::new(),
        episode_rewards: Vec::new(),
        error: None,
    };
    let mut env = match Environment::new(config.env.clone()) {
        Ok(env) => env,
        Err(e) => {
            outcome.error = Some(ExperimentError::Config(e.to_string()));
            return outcome;
        }
    };
    let mut strategy = StrategyState::new(config.strategy, seed).with_exact_planner(config.exact_planner);
    let mut channel = LlmChannel::new(backend, sink);
    for episode in 0..config.env.episodes {
        match run_episode(
            &mut env,
            &mut strategy,
            &mut channel,
            episode,
            episode_seed(seed, episode),
            &config.agent,
        ) {
            Ok(record) => {
                outcome.episode_scores.push(record.score.map_or(0.0, |s| s.value));
                outcome.episode_rewards.push(record.cumulative_reward);
            }
            Err(e) => {
                log::error!("run {run}: {e}");
                outcome.error = Some(match e {
                    AgentError::Aborted {
                        episode,
                        step,
                        source: StrategyError::Backend(source),
                        ..
                    } => ExperimentError::Backend {
                        run,
                        episode,
                        step,
                        source,
                    },
                    AgentError::Aborted { episode, source, .. } => ExperimentError::Run {
                        run,
                        episode,
                        message: source.to_string(),
                    },
                    AgentError::Env(err) => ExperimentError::Run {
                        run,
                        episode,
                        message: err.to_string(),
                    },
                });
                break;
            }
        }
    }
    channel.emit(LogEvent::RunEnd {
        episodes_completed: outcome.episode_scores.len(),
        mean_score: outcome.mean_score(),
        aborted: outcome.aborted(),
        error: outcome.error.as_ref().map(ToString::to_string),
    });
    outcome
}

/// Runs the experiment with backends built from `config.backend`. HTTP
/// backends of all runs share one in-flight cap.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, ExperimentError> {
    config.validate()?;
    let limit = Arc::new(InFlightLimit::new(config.backend.max_in_flight));
    run_with_backend_factory(config, |_, seed| config.backend.build(seed, Some(limit.clone())))
}

pub fn log_file_name(run: usize) -> String {
    format!("run_{run:03}.jsonl")
}

/// Runs the experiment with one backend per run from `factory(run, run_seed)`.
/// Up to `parallelism` runs execute at once; episodes within a run are sequential.
pub fn run_with_backend_factory<F>(config: &ExperimentConfig, factory: F) -> Result<ExperimentOutcome, ExperimentError>
where
    F: Fn(usize, u64) -> Result<Box<dyn Backend>, BackendError> + Sync,
{
    config.validate()?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let one_run = |run: usize| -> Result<RunOutcome, ExperimentError> {
        let seed = run_seed(config.master_seed, run);
        let mut backend = factory(run, seed).map_err(|e| ExperimentError::Config(e.to_string()))?;
        let path = dir.join(log_file_name(run));
        let mut sink = JsonlSink::create(&path, run).map_err(io_err(&path))?;
        let mut outcome = execute_run(config, run, &mut *backend, &mut sink);
        sink.finish().map_err(io_err(&path))?;
        outcome.log_path = Some(path);
        Ok(outcome)
    };

    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(config.runs));
    thread::scope(|scope| {
        for _ in 0..config.parallelism.min(config.runs) {
            scope.spawn(|| loop {
                let run = next.fetch_add(1, Ordering::SeqCst);
                if run >= config.runs {
                    break;
                }
                let result = one_run(run);
                results
                    .lock()
                    .expect("no panics while holding the lock")
                    .push((run, result));
            });
        }
    });
    let mut results = results.into_inner().expect("workers joined");
    results.sort_by_key(|(run, _)| *run);
    let runs = results.into_iter().map(|(_, r)| r).collect::<Result<Vec<_>, _>>()?;

    let complete: Vec<f64> = runs
        .iter()
        .filter(|r| !r.aborted())
        .filter_map(RunOutcome::mean_score)
        .collect();
    let summary = if complete.is_empty() {
        None
    } else {
        Some(RunSummary::new(
            config.backend.model_label(),
            config.strategy,
            config.env.game,
            complete,
        )?)
    };
    write_run_tables(config, &runs, summary.as_ref())?;
    Ok(ExperimentOutcome {
        output_dir: dir.clone(),
        runs,
        summary,
    })
}

fn write_run_tables(
    config: &ExperimentConfig,
    runs: &[RunOutcome],
    summary: Option<&RunSummary>,
) -> Result<(), ExperimentError> {
    let path = config.output_dir.join("runs.csv");
    let csv_err = |p: &Path| {
        let p = p.to_path_buf();
        move |e: csv::Error| ExperimentError::Io {
            path: p,
            source: std::io::Error::other(e),
        }
    };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record([
        "run",
        "seed",
        "episodes_completed",
        "mean_score",
        "mean_reward",
        "aborted",
        "error",
    ])
    .map_err(csv_err(&path))?;
    for r in runs {
        w.write_record([
            r.run.to_string(),
            r.seed.to_string(),
            r.episode_scores.len().to_string(),
            r.mean_score().map_or(String::new(), |m| m.to_string()),
            mean(&r.episode_rewards).map_or(String::new(), |m| m.to_string()),
            r.aborted().to_string(),
            r.error.as_ref().map_or(String::new(), ToString::to_string),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = config.output_dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record([
        "model",
        "strategy",
        "game",
        "variant",
        "runs",
        "min",
        "median",
        "max",
        "even_count",
    ])
    .map_err(csv_err(&path))?;
    if let Some(s) = summary {
        w.write_record([
            s.model.clone(),
            s.strategy.to_string(),
            s.game.to_string(),
            config.env.variant_label(),
            s.per_run_means.len().to_string(),
            s.stats.min.to_string(),
            s.stats.median.to_string(),
            s.stats.max.to_string(),
            s.stats.even_count.to_string(),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(())
}
