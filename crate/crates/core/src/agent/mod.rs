//! The agent loop: prompt construction, action parsing and episode driving.

mod channel;
mod episode;
mod parse;
mod prompt;
mod record;

pub use channel::LlmChannel;
pub use episode::{
    decide, fallback_rng, run_episode, run_policy_episode, AgentConfig, AgentDecision, AgentError, DEFAULT_RETRY_BUDGET,
};
pub use parse::{parse_action, ParseError};
pub use prompt::{
    actions_from_prompt, build_prompt, layout_hash, marker, render_history, render_step, sha256_hex,
    with_format_reminder, Augmentation, AugmentationKind, PromptBundle, RenderedPrompt, ACTIONS, CLOSING_INSTRUCTION,
    FORMAT_REMINDER, HEURISTICS, HISTORY, MANUAL, OBJECTIVE, OBSERVATION, PLAN, REFLECTION,
};
pub use record::{EpisodeRecord, StepFlags, StepRecord};
