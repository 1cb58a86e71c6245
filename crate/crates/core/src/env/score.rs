use serde::{Deserialize, Serialize};

use super::{EnvError, Game};
use crate::agent::EpisodeRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreBreakdown {
    OptimalPulls(u32),
    Wins(u32),
    DisksOnTarget(u32),
    AccumulatedReward(f64),
}

/// Per-episode game score: optimal pulls (bandit), wins (rps), disks on rod C
/// (hanoi) or the sum of unshaped rewards (messenger).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeScore {
    pub game: Game,
    pub value: f64,
    pub breakdown: ScoreBreakdown,
}

pub fn episode_score(game: Game, episode: &EpisodeRecord) -> Result<EpisodeScore, EnvError> {
    let last = episode.steps.last().ok_or(EnvError::IncompleteEpisode)?;
    if !last.ends_episode() {
        return Err(EnvError::IncompleteEpisode);
    }
    let positive = || episode.steps.iter().filter(|s| s.flags.info.base_reward > 0.0).count() as u32;
    let breakdown = match game {
        Game::Bandit => ScoreBreakdown::OptimalPulls(positive()),
        Game::Rps => ScoreBreakdown::Wins(positive()),
        Game::Hanoi => {
            ScoreBreakdown::DisksOnTarget(last.flags.info.disks_on_target.ok_or(EnvError::IncompleteEpisode)?)
        }
        Game::Messenger => {
            ScoreBreakdown::AccumulatedReward(episode.steps.iter().map(|s| s.flags.info.base_reward).sum())
        }
    };
    let value = match breakdown {
        ScoreBreakdown::OptimalPulls(n) | ScoreBreakdown::Wins(n) | ScoreBreakdown::DisksOnTarget(n) => f64::from(n),
        ScoreBreakdown::AccumulatedReward(r) => r,
    };
    Ok(EpisodeScore { game, value, breakdown })
}
