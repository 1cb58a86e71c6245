use serde::{Deserialize, Serialize};

use crate::env::{EpisodeScore, Game, StepInfo};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepFlags {
    pub terminated: bool,
    pub truncated: bool,
    #[serde(flatten)]
    pub info: StepInfo,
}

/// One ⟨state, action, reward, next state⟩ tuple. `step` counts from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub state: String,
    pub action: String,
    pub reward: f64,
    pub next_state: String,
    pub flags: StepFlags,
}

impl StepRecord {
    pub fn ends_episode(&self) -> bool {
        self.flags.terminated || self.flags.truncated
    }

    pub fn info(&self) -> &StepInfo {
        &self.flags.info
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub game: Game,
    pub steps: Vec<StepRecord>,
    /// Sum of the recorded step rewards.
    pub cumulative_reward: f64,
    pub horizon: usize,
    pub score: Option<EpisodeScore>,
    #[serde(default)]
    pub aborted: bool,
}

impl EpisodeRecord {
    pub fn from_steps(episode: usize, game: Game, horizon: usize, steps: Vec<StepRecord>) -> Self {
        let cumulative_reward = steps.iter().map(|s| s.reward).sum();
        let mut record = Self {
            episode,
            game,
            steps,
            cumulative_reward,
            horizon,
            score: None,
            aborted: false,
        };
        record.score = crate::env::episode_score(game, &record).ok();
        record
    }

    pub fn is_complete(&self) -> bool {
        !self.aborted && self.steps.last().is_some_and(StepRecord::ends_episode)
    }
}
