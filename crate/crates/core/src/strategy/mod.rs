//! Prompt augmentation strategies: per-step reflection, cross-episode heuristic
//! evolution (the Oracle) and per-step lookahead (the Planner).

mod oracle;
mod planner;
mod reflection;
pub mod templates;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use oracle::{
    draw_operator, heuristics_prompt, initialize_heuristics, mutation_prompt, parse_rules, propose_offspring,
    select_survivor, single_edit, HeuristicSet, LineageEntry, LineageEvent, MutationOp, OracleState, PendingOffspring,
};
pub use planner::{
    exact_plan, parse_rollouts, plan, planner_prompt, recommend, PlannerRecommendation, Rollout, MAX_ROLLOUT_LEN,
};
pub use reflection::{reflect, reflection_prompt, Reflection};

use crate::agent::{Augmentation, AugmentationKind, EpisodeRecord, LlmChannel, StepRecord};
use crate::backend::BackendError;
use crate::env::Environment;
use crate::log::LogEvent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("nothing to reflect on yet")]
    EmptyMemory,
    #[error("model produced no heuristic rules")]
    EmptyHeuristics,
    #[error("offspring for `{}` is not a single edit of the parent ({rules} rules)", operator.as_str())]
    MutationRejected { operator: MutationOp, rules: usize },
    #[error("an offspring is already awaiting evaluation")]
    PendingOffspring,
    #[error("no offspring awaiting evaluation")]
    NoPendingOffspring,
    #[error("planner reply had no usable rollout")]
    PlanParseFailure,
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Base,
    Reflection,
    ReflectionOracle,
    ReflectionPlanner,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Base,
        StrategyKind::Reflection,
        StrategyKind::ReflectionOracle,
        StrategyKind::ReflectionPlanner,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Base => "base",
            StrategyKind::Reflection => "reflection",
            StrategyKind::ReflectionOracle => "reflection_oracle",
            StrategyKind::ReflectionPlanner => "reflection_planner",
        }
    }

    /// Column label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::Base => "Base",
            StrategyKind::Reflection => "Reflection",
            StrategyKind::ReflectionOracle => "Reflection + Oracle",
            StrategyKind::ReflectionPlanner => "Reflection + Planner",
        }
    }

    pub fn reflects(self) -> bool {
        self != StrategyKind::Base
    }

    pub fn uses_oracle(self) -> bool {
        self == StrategyKind::ReflectionOracle
    }

    pub fn plans(self) -> bool {
        self == StrategyKind::ReflectionPlanner
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s
            .to_ascii_lowercase()
            .split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect::<Vec<_>>()
            .join("_");
        match norm.as_str() {
            "base" => Ok(StrategyKind::Base),
            "reflection" => Ok(StrategyKind::Reflection),
            "reflection_oracle" | "oracle" => Ok(StrategyKind::ReflectionOracle),
            "reflection_planner" | "planner" => Ok(StrategyKind::ReflectionPlanner),
            _ => Err(format!(
                "unknown strategy `{s}` (expected base, reflection, reflection_oracle or reflection_planner)"
            )),
        }
    }
}

/// Per-run strategy state driven by the episode loop hooks.
#[derive(Debug, Clone)]
pub struct StrategyState {
    kind: StrategyKind,
    episode: usize,
    reflection: Option<Reflection>,
    episode_reflections: Vec<Reflection>,
    oracle: Option<OracleState>,
    /// Heuristics frozen for the current episode.
    active_rules: Option<String>,
    plan: Option<PlannerRecommendation>,
    last_episode: Option<EpisodeRecord>,
    rng: ChaCha8Rng,
    exact_planner: bool,
}

impl StrategyState {
    /// `seed` drives the mutation operator draws.
    pub fn new(kind: StrategyKind, seed: u64) -> Self {
        Self {
            kind,
            episode: 0,
            reflection: None,
            episode_reflections: Vec::new(),
            oracle: None,
            active_rules: None,
            plan: None,
            last_episode: None,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x6f72_6163_6c65),
            exact_planner: false,
        }
    }

    /// Replaces model rollouts with exhaustive environment simulation.
    pub fn with_exact_planner(mut self, on: bool) -> Self {
        self.exact_planner = on;
        self
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn reflection(&self) -> Option<&Reflection> {
        self.reflection.as_ref()
    }

    pub fn oracle(&self) -> Option<&OracleState> {
        self.oracle.as_ref()
    }

    pub fn plan(&self) -> Option<&PlannerRecommendation> {
        self.plan.as_ref()
    }

    /// Clears per-episode memory and, for the Oracle, proposes the offspring
    /// this episode will evaluate.
    pub fn begin_episode(
        &mut self,
        episode: usize,
        objective: &str,
        channel: &mut LlmChannel<'_>,
    ) -> Result<(), StrategyError> {
        self.episode = episode;
        self.reflection = None;
        self.episode_reflections.clear();
        self.plan = None;
        self.active_rules = None;
        let (Some(state), Some(last)) = (self.oracle.as_mut(), self.last_episode.as_ref()) else {
            return Ok(());
        };
        let before = state.lineage.len();
        match propose_offspring(state, last, objective, &mut self.rng, channel) {
            Ok(_) | Err(StrategyError::MutationRejected { .. }) => {}
            Err(e) => return Err(e),
        }
        for entry in &state.lineage[before..] {
            log::warn!("episode {episode}: mutation rejected, parent kept");
            channel.emit(LogEvent::Lineage {
                episode,
                entry: entry.clone(),
            });
        }
        self.active_rules = Some(state.active().render());
        Ok(())
    }

    /// Refreshes the plan for the coming decision. Parse failures leave no
    /// plan and are logged; backend failures propagate.
    pub fn before_step(
        &mut self,
        env: &Environment,
        observation: &str,
        manual: &str,
        channel: &mut LlmChannel<'_>,
    ) -> Result<(), StrategyError> {
        if !self.kind.plans() {
            return Ok(());
        }
        let result = if self.exact_planner {
            exact_plan(env).ok_or(StrategyError::PlanParseFailure)
        } else {
            plan(
                observation,
                manual,
                self.reflection.as_ref(),
                env.legal_actions(),
                channel,
            )
        };
        let (recommendation, error) = match result {
            Ok(rec) => (Some(rec), None),
            Err(StrategyError::PlanParseFailure) => (None, Some(StrategyError::PlanParseFailure.to_string())),
            Err(e) => return Err(e),
        };
        channel.emit(LogEvent::Plan {
            episode: self.episode,
            step: env.steps_taken() + 1,
            recommendation: recommendation.clone(),
            error,
        });
        self.plan = recommendation;
        Ok(())
    }

    /// Sections to inject into the next agent prompt.
    pub fn augmentations(&self) -> Vec<Augmentation> {
        let mut out = Vec::new();
        if let Some(r) = &self.reflection {
            out.push(Augmentation {
                kind: AugmentationKind::Reflection,
                text: r.text.clone(),
            });
        }
        if let Some(rules) = &self.active_rules {
            out.push(Augmentation {
                kind: AugmentationKind::Heuristics,
                text: rules.clone(),
            });
        }
        if let Some(p) = &self.plan {
            out.push(Augmentation {
                kind: AugmentationKind::Plan,
                text: p.render(),
            });
        }
        out
    }

    /// Reflects on the trajectory so far. Backend failures skip this step's
    /// reflection and keep the previous one.
    pub fn after_step(&mut self, memory: &[StepRecord], objective: &str, channel: &mut LlmChannel<'_>) {
        if !self.kind.reflects() {
            return;
        }
        match reflect(memory, objective, self.reflection.as_ref(), self.episode, channel) {
            Ok(r) => {
                channel.emit(LogEvent::Reflection {
                    episode: r.episode,
                    step: r.step,
                    text: r.text.clone(),
                });
                self.episode_reflections.push(r.clone());
                self.reflection = Some(r);
            }
            Err(e) => {
                log::warn!("episode {}: reflection skipped: {e}", self.episode);
                channel.emit(LogEvent::ReflectionSkipped {
                    episode: self.episode,
                    step: memory.last().map_or(0, |s| s.step),
                    error: e.to_string(),
                });
            }
        }
    }

    /// Oracle bookkeeping once an episode's reward is known.
    pub fn end_episode(
        &mut self,
        record: &EpisodeRecord,
        manual: &str,
        objective: &str,
        channel: &mut LlmChannel<'_>,
    ) -> Result<(), StrategyError> {
        if self.kind.uses_oracle() {
            let before;
            match self.oracle.as_mut() {
                None => {
                    let state = initialize_heuristics(record, &self.episode_reflections, manual, objective, channel)?;
                    before = 0;
                    self.oracle = Some(state);
                }
                Some(state) => {
                    before = state.lineage.len();
                    if state.pending.is_some() {
                        select_survivor(state, record.cumulative_reward)?;
                    }
                }
            }
            let state = self.oracle.as_ref().expect("initialized above");
            for entry in &state.lineage[before..] {
                channel.emit(LogEvent::Lineage {
                    episode: record.episode,
                    entry: entry.clone(),
                });
            }
        }
        self.last_episode = Some(record.clone());
        Ok(())
    }
}
