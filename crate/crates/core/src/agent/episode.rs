use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{
    parse_action, sha256_hex, with_format_reminder, EpisodeRecord, LlmChannel, PromptBundle, StepFlags, StepRecord,
};
use crate::backend::{BackendError, Purpose};
use crate::env::{EnvError, Environment, Transition};
use crate::log::{DecisionRecord, LogEvent};
use crate::strategy::{StrategyError, StrategyState};

/// Re-queries after an unparsable reply, before the random fallback.
pub const DEFAULT_RETRY_BUDGET: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub retry_budget: u32,
    pub history_char_cap: Option<usize>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            retry_budget: DEFAULT_RETRY_BUDGET,
            history_char_cap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentDecision {
    pub action: String,
    pub action_index: usize,
    pub raw_response: String,
    pub parse_attempts: u32,
    pub fallback_used: bool,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("episode {episode} aborted at step {step}: {source}")]
    Aborted {
        episode: usize,
        step: usize,
        partial: Box<EpisodeRecord>,
        #[source]
        source: StrategyError,
    },
    #[error(transparent)]
    Env(#[from] EnvError),
}

impl AgentError {
    pub fn backend_error(&self) -> Option<&BackendError> {
        match self {
            AgentError::Aborted {
                source: StrategyError::Backend(e),
                ..
            } => Some(e),
            _ => None,
        }
    }
}

/// Generator for random-legal fallbacks, derived from the episode seed.
pub fn fallback_rng(episode_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(episode_seed ^ 0xfa11_bac4_5eed)
}

/// Queries until a reply parses, at most `1 + retry_budget` times, appending
/// the format reminder on retries. Falls back to a uniform legal action.
pub fn decide(
    channel: &mut LlmChannel<'_>,
    prompt: &str,
    legal: &[String],
    retry_budget: u32,
    rng: &mut ChaCha8Rng,
) -> Result<AgentDecision, BackendError> {
    let mut raw_response = String::new();
    let mut attempts = 0;
    for attempt in 0..=retry_budget {
        let text = if attempt == 0 {
            prompt.to_string()
        } else {
            with_format_reminder(prompt)
        };
        raw_response = channel.query(Purpose::Act, &text)?;
        attempts += 1;
        if let Ok(i) = parse_action(&raw_response, legal) {
            return Ok(AgentDecision {
                action: legal[i].clone(),
                action_index: i,
                raw_response,
                parse_attempts: attempts,
                fallback_used: false,
            });
        }
    }
    let i = rng.random_range(0..legal.len());
    log::warn!(
        "no parsable action after {attempts} attempt(s); falling back to `{}`",
        legal[i]
    );
    Ok(AgentDecision {
        action: legal[i].clone(),
        action_index: i,
        raw_response,
        parse_attempts: attempts,
        fallback_used: true,
    })
}

fn step_record(step: usize, state: String, action: String, t: &Transition) -> StepRecord {
    StepRecord {
        step,
        state,
        action,
        reward: t.reward,
        next_state: t.next_observation.clone(),
        flags: StepFlags {
            terminated: t.terminated,
            truncated: t.truncated,
            info: t.info.clone(),
        },
    }
}

/// Plays one episode with the model choosing every action.
///
/// Backend failures (other than during reflection) abort the episode; the
/// partial record is returned inside the error and logged as aborted.
pub fn run_episode(
    env: &mut Environment,
    strategy: &mut StrategyState,
    channel: &mut LlmChannel<'_>,
    episode: usize,
    seed: u64,
    config: &AgentConfig,
) -> Result<EpisodeRecord, AgentError> {
    let game = env.game();
    let horizon = env.config().steps_per_episode;
    let mut observation = env.reset(seed);
    let objective = env.objective();
    let mut rng = fallback_rng(seed);
    let mut steps: Vec<StepRecord> = Vec::new();

    channel.set_position(episode, 0);
    channel.emit(LogEvent::EpisodeStart {
        episode,
        seed,
        observation: observation.clone(),
        flags: env.info_snapshot(),
    });

    let abort = |channel: &mut LlmChannel<'_>, steps: Vec<StepRecord>, source: StrategyError| {
        let mut partial = EpisodeRecord::from_steps(episode, game, horizon, steps);
        partial.aborted = true;
        channel.emit(LogEvent::EpisodeEnd {
            episode,
            cumulative_reward: partial.cumulative_reward,
            score: None,
            horizon,
            steps: partial.steps.len(),
            aborted: true,
        });
        AgentError::Aborted {
            episode,
            step: partial.steps.len() + 1,
            partial: Box::new(partial),
            source,
        }
    };

    if let Err(e) = strategy.begin_episode(episode, &objective, channel) {
        return Err(abort(channel, steps, e));
    }

    while env.is_active() {
        let t = steps.len() + 1;
        channel.set_position(episode, t);
        let manual = env.manual();
        if let Err(e) = strategy.before_step(env, &observation, &manual, channel) {
            return Err(abort(channel, steps, e));
        }
        let augmentations = strategy.augmentations();
        let rendered = PromptBundle {
            manual: &manual,
            objective: &objective,
            history: &steps,
            observation: &observation,
            legal_actions: env.legal_actions(),
            augmentations: &augmentations,
            history_char_cap: config.history_char_cap,
        }
        .render();
        if rendered.omitted_steps > 0 {
            log::debug!(
                "episode {episode} step {t}: {} history steps omitted",
                rendered.omitted_steps
            );
        }
        let decision = match decide(
            channel,
            &rendered.text,
            env.legal_actions(),
            config.retry_budget,
            &mut rng,
        ) {
            Ok(d) => d,
            Err(e) => return Err(abort(channel, steps, e.into())),
        };
        channel.emit(LogEvent::Decision(DecisionRecord {
            episode,
            step: t,
            prompt_hash: sha256_hex(&rendered.text),
            manual,
            objective: objective.clone(),
            observation: observation.clone(),
            legal_actions: env.legal_actions().to_vec(),
            augmentations,
            omitted_steps: rendered.omitted_steps,
            action: decision.action.clone(),
            raw_response: decision.raw_response.clone(),
            parse_attempts: decision.parse_attempts,
            fallback_used: decision.fallback_used,
        }));

        let transition = env.step(decision.action_index)?;
        let record = step_record(t, observation, decision.action, &transition);
        observation = transition.next_observation;
        channel.emit(LogEvent::Step {
            episode,
            record: record.clone(),
        });
        steps.push(record);
        strategy.after_step(&steps, &objective, channel);
    }

    let record = EpisodeRecord::from_steps(episode, game, horizon, steps);
    channel.set_position(episode, record.steps.len() + 1);
    if let Err(e) = strategy.end_episode(&record, &env.manual(), &objective, channel) {
        let steps = record.steps;
        return Err(abort(channel, steps, e));
    }
    channel.emit(LogEvent::EpisodeEnd {
        episode,
        cumulative_reward: record.cumulative_reward,
        score: record.score,
        horizon,
        steps: record.steps.len(),
        aborted: false,
    });
    Ok(record)
}

/// Plays one episode with a programmatic policy and no model calls. The
/// policy gets its own generator derived from `seed`.
pub fn run_policy_episode<P>(
    env: &mut Environment,
    episode: usize,
    seed: u64,
    mut policy: P,
) -> Result<EpisodeRecord, EnvError>
where
    P: FnMut(&Environment, &mut ChaCha8Rng) -> usize,
{
    let mut observation = env.reset(seed);
    let mut rng = fallback_rng(seed);
    let mut steps = Vec::new();
    while env.is_active() {
        let a = policy(env, &mut rng);
        let label = env
            .legal_actions()
            .get(a)
            .cloned()
            .ok_or_else(|| EnvError::UnknownAction(a.to_string()))?;
        let t = env.step(a)?;
        steps.push(step_record(steps.len() + 1, observation, label, &t));
        observation = t.next_observation;
    }
    Ok(EpisodeRecord::from_steps(
        episode,
        env.game(),
        env.config().steps_per_episode,
        steps,
    ))
}
