//! Seedable text-game environments.
//!
//! Every game is a deterministic state machine driven by a ChaCha stream that is
//! re-seeded on each [`Environment::reset`]. Observations, manuals and action
//! labels are plain text and feed the agent prompt verbatim.

pub mod bandit;
mod config;
pub mod hanoi;
mod lexicon;
pub mod messenger;
pub mod rps;
mod score;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bandit::BanditState;
pub use config::{EnvConfig, Game, DEFAULT_EPISODES, DEFAULT_RPS_BIAS};
pub use hanoi::{HanoiMove, HanoiState};
pub use lexicon::{Lexicon, Role};
pub use messenger::{messenger_shaped_reward, Direction, MessengerState};
pub use rps::{RpsMove, RpsState};
pub use score::{episode_score, EpisodeScore, ScoreBreakdown};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("environment must be reset before stepping")]
    NotReset,
    #[error("episode is over; reset before stepping again")]
    EpisodeOver,
    #[error("action `{0}` is not a legal action")]
    UnknownAction(String),
    #[error("episode record is incomplete")]
    IncompleteEpisode,
    #[error("lexicon: {0}")]
    Lexicon(String),
}

/// Per-step flags reported alongside every transition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Whether the action was legal. Set for Hanoi and Messenger only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_move: Option<bool>,
    #[serde(default)]
    pub picked_up: bool,
    #[serde(default)]
    pub delivered: bool,
    #[serde(default)]
    pub collided: bool,
    #[serde(default)]
    pub goal_reached: bool,
    /// Manhattan distance from the agent to its current target (Messenger).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_to_target: Option<u32>,
    /// Disks on the target rod after the step (Hanoi).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disks_on_target: Option<u32>,
    /// Reward under the unshaped rules; equals `reward` when shaping is off.
    #[serde(default)]
    pub base_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub next_observation: String,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

/// What a game reports for one applied action; horizon bookkeeping is added by
/// [`Environment`].
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct StepOutcome {
    pub reward: f64,
    pub terminated: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameState {
    Bandit(BanditState),
    Rps(RpsState),
    Hanoi(HanoiState),
    Messenger(MessengerState),
}

#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    lexicon: Lexicon,
    labels: Vec<String>,
    state: Option<GameState>,
    rng: ChaCha8Rng,
    steps: usize,
    ended: bool,
}

impl Environment {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        Self::with_lexicon(config, Lexicon::builtin())
    }

    pub fn with_lexicon(config: EnvConfig, lexicon: Lexicon) -> Result<Self, EnvError> {
        config.validate()?;
        let labels = match config.game {
            Game::Bandit => bandit::action_labels(),
            Game::Rps => rps::action_labels(),
            Game::Hanoi => hanoi::action_labels(),
            Game::Messenger => messenger::action_labels(),
        };
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            lexicon,
            labels,
            state: None,
            steps: 0,
            ended: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn game(&self) -> Game {
        self.config.game
    }

    /// All action labels of the game, in canonical order.
    pub fn legal_actions(&self) -> &[String] {
        &self.labels
    }

    pub fn state(&self) -> Option<&GameState> {
        self.state.as_ref()
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn is_active(&self) -> bool {
        self.state.is_some() && !self.ended
    }

    /// Starts a fresh episode. The same seed always yields the same initial
    /// state and the same subsequent random stream.
    pub fn reset(&mut self, episode_seed: u64) -> String {
        self.rng = ChaCha8Rng::seed_from_u64(episode_seed);
        let state = match self.config.game {
            Game::Bandit => GameState::Bandit(BanditState::reset(&mut self.rng)),
            Game::Rps => GameState::Rps(RpsState::reset(self.config.rps_bias, &mut self.rng)),
            Game::Hanoi => GameState::Hanoi(HanoiState::new(self.config.hanoi_disks)),
            Game::Messenger => GameState::Messenger(MessengerState::reset(&self.config, &self.lexicon, &mut self.rng)),
        };
        self.state = Some(state);
        self.steps = 0;
        self.ended = false;
        self.observation()
    }

    pub fn step(&mut self, action: usize) -> Result<Transition, EnvError> {
        let horizon = self.config.steps_per_episode;
        let shaping = self.config.reward_shaping;
        let state = self.state.as_mut().ok_or(EnvError::NotReset)?;
        if self.ended {
            return Err(EnvError::EpisodeOver);
        }
        if action >= self.labels.len() {
            return Err(EnvError::UnknownAction(action.to_string()));
        }
        let outcome = match state {
            GameState::Bandit(s) => s.step(action),
            GameState::Rps(s) => s.step(action, &mut self.rng),
            GameState::Hanoi(s) => s.step(HanoiMove::from_index(action), shaping),
            GameState::Messenger(s) => s.step(Direction::from_index(action), shaping),
        };
        self.steps += 1;
        let terminated = outcome.terminated;
        let truncated = !terminated && self.steps >= horizon;
        self.ended = terminated || truncated;
        Ok(Transition {
            next_observation: self.observation(),
            reward: outcome.reward,
            terminated,
            truncated,
            info: outcome.info,
        })
    }

    /// Steps with an action given by its label (case-insensitive exact match).
    pub fn step_label(&mut self, label: &str) -> Result<Transition, EnvError> {
        let index = self
            .action_index(label)
            .ok_or_else(|| EnvError::UnknownAction(label.to_string()))?;
        self.step(index)
    }

    pub fn action_index(&self, label: &str) -> Option<usize> {
        let label = label.trim();
        self.labels.iter().position(|l| l.eq_ignore_ascii_case(label))
    }

    pub fn observation(&self) -> String {
        match &self.state {
            None => String::new(),
            Some(GameState::Bandit(s)) => s.observation(),
            Some(GameState::Rps(s)) => s.observation(),
            Some(GameState::Hanoi(s)) => s.render(),
            Some(GameState::Messenger(s)) => s.observation(),
        }
    }

    /// Game rules and objective. With `show_valid_actions`, the Hanoi manual
    /// also lists the moves that are currently legal.
    pub fn manual(&self) -> String {
        match self.config.game {
            Game::Bandit => bandit::manual(),
            Game::Rps => rps::manual(),
            Game::Hanoi => {
                let valid = match (&self.state, self.config.show_valid_actions) {
                    (Some(GameState::Hanoi(s)), true) => Some(s.valid_moves()),
                    _ => None,
                };
                hanoi::manual(&self.config, valid.as_deref())
            }
            Game::Messenger => {
                let names = match &self.state {
                    Some(GameState::Messenger(s)) => s.lexicon_names(),
                    _ => messenger::literal_names(),
                };
                messenger::manual(&self.config, &names)
            }
        }
    }

    pub fn objective(&self) -> String {
        match self.config.game {
            Game::Bandit => bandit::OBJECTIVE.to_string(),
            Game::Rps => rps::OBJECTIVE.to_string(),
            Game::Hanoi => hanoi::OBJECTIVE.to_string(),
            Game::Messenger => messenger::OBJECTIVE.to_string(),
        }
    }

    /// Flags describing the current state without taking a step; used to log
    /// the initial distance and disk count of an episode.
    pub fn info_snapshot(&self) -> StepInfo {
        match &self.state {
            Some(GameState::Hanoi(s)) => StepInfo {
                disks_on_target: Some(s.disks_on_target() as u32),
                ..StepInfo::default()
            },
            Some(GameState::Messenger(s)) => StepInfo {
                distance_to_target: Some(s.distance_to_target()),
                ..StepInfo::default()
            },
            _ => StepInfo::default(),
        }
    }

    pub fn bandit(&self) -> Option<&BanditState> {
        match &self.state {
            Some(GameState::Bandit(s)) => Some(s),
            _ => None,
        }
    }

    pub fn rps(&self) -> Option<&RpsState> {
        match &self.state {
            Some(GameState::Rps(s)) => Some(s),
            _ => None,
        }
    }

    pub fn hanoi(&self) -> Option<&HanoiState> {
        match &self.state {
            Some(GameState::Hanoi(s)) => Some(s),
            _ => None,
        }
    }

    pub fn messenger(&self) -> Option<&MessengerState> {
        match &self.state {
            Some(GameState::Messenger(s)) => Some(s),
            _ => None,
        }
    }
}
