//! Agent harness for text games: four environments, an LLM-driven episode
//! loop with reflection, heuristic evolution and planning strategies,
//! pluggable completion backends, JSONL logging and score tables.

pub mod agent;
pub mod backend;
pub mod env;
pub mod eval;
pub mod experiment;
pub mod log;
pub mod strategy;

pub use agent::{
    build_prompt, decide, parse_action, run_episode, run_policy_episode, AgentConfig, AgentDecision, AgentError,
    EpisodeRecord, LlmChannel, ParseError, PromptBundle, StepFlags, StepRecord,
};
pub use backend::{Backend, BackendConfig, BackendError, BackendKind, Purpose, RandomBackend, ScriptedBackend};
pub use env::{EnvConfig, EnvError, Environment, EpisodeScore, Game, StepInfo, Transition};
pub use eval::{BehaviorMetrics, EvalError, RunSummary, WeightMatrix};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentError, Settings};
pub use strategy::{StrategyError, StrategyKind, StrategyState};
