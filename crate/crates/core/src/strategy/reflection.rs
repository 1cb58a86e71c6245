use serde::{Deserialize, Serialize};

use super::{templates, StrategyError};
use crate::agent::{render_history, LlmChannel, StepRecord};
use crate::backend::Purpose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    pub episode: usize,
    pub step: usize,
    pub text: String,
}

pub fn reflection_prompt(memory: &[StepRecord], objective: &str, prior: Option<&Reflection>) -> String {
    templates::render(
        templates::REFLECTION,
        &[
            ("OBJECTIVE", objective),
            ("HISTORY", &render_history(memory)),
            ("REFLECTION", prior.map_or("(none)", |r| r.text.as_str())),
        ],
    )
}

/// Asks the model to critique the trajectory so far against the objective.
/// Fails with `EmptyMemory`, without calling the backend, before the first step.
pub fn reflect(
    memory: &[StepRecord],
    objective: &str,
    prior: Option<&Reflection>,
    episode: usize,
    channel: &mut LlmChannel<'_>,
) -> Result<Reflection, StrategyError> {
    let last = memory.last().ok_or(StrategyError::EmptyMemory)?;
    let prompt = reflection_prompt(memory, objective, prior);
    let text = channel.query(Purpose::Reflect, &prompt)?;
    Ok(Reflection {
        episode,
        step: last.step,
        text: text.trim().to_string(),
    })
}
