use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EnvError;

/// The four supported games.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Game {
    Bandit,
    Rps,
    Hanoi,
    Messenger,
}

impl Game {
    pub const ALL: [Game; 4] = [Game::Bandit, Game::Rps, Game::Hanoi, Game::Messenger];

    pub fn as_str(self) -> &'static str {
        match self {
            Game::Bandit => "bandit",
            Game::Rps => "rps",
            Game::Hanoi => "hanoi",
            Game::Messenger => "messenger",
        }
    }

    /// Default horizon: 50 pulls/rounds, 30 Hanoi moves, 10 Messenger steps.
    pub fn default_steps(self) -> usize {
        match self {
            Game::Bandit | Game::Rps => 50,
            Game::Hanoi => 30,
            Game::Messenger => 10,
        }
    }

    /// Column title used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            Game::Bandit => "Bandit",
            Game::Rps => "Rock Paper Scissors",
            Game::Hanoi => "Hanoi",
            Game::Messenger => "Messenger",
        }
    }
}

impl fmt::Display for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Game {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bandit" | "twoarmedbandit" => Ok(Game::Bandit),
            "rps" | "rockpaperscissors" => Ok(Game::Rps),
            "hanoi" | "tower_of_hanoi" => Ok(Game::Hanoi),
            "messenger" => Ok(Game::Messenger),
            other => Err(EnvError::InvalidConfig(format!("unknown game `{other}`"))),
        }
    }
}

pub const DEFAULT_RPS_BIAS: [f64; 3] = [0.5, 0.25, 0.25];
pub const DEFAULT_EPISODES: usize = 20;

/// Environment configuration. Game-specific knobs are ignored by the other games.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub game: Game,
    pub steps_per_episode: usize,
    pub episodes: usize,
    pub hanoi_disks: usize,
    pub reward_shaping: bool,
    pub show_valid_actions: bool,
    pub use_synonyms: bool,
    /// Opponent move distribution over (rock, paper, scissors) before the per-episode shuffle.
    pub rps_bias: [f64; 3],
    pub seed: u64,
    pub grid_rows: usize,
    pub grid_cols: usize,
}

impl EnvConfig {
    pub fn new(game: Game) -> Self {
        Self {
            game,
            steps_per_episode: game.default_steps(),
            episodes: DEFAULT_EPISODES,
            hanoi_disks: 3,
            reward_shaping: false,
            show_valid_actions: false,
            use_synonyms: true,
            rps_bias: DEFAULT_RPS_BIAS,
            seed: 0,
            grid_rows: 5,
            grid_cols: 5,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.steps_per_episode == 0 {
            return Err(EnvError::InvalidConfig("steps_per_episode must be at least 1".into()));
        }
        if self.episodes == 0 {
            return Err(EnvError::InvalidConfig("episodes must be at least 1".into()));
        }
        match self.game {
            Game::Rps => {
                if self.rps_bias.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(EnvError::InvalidConfig(format!(
                        "rps_bias entries must be non-negative, got {:?}",
                        self.rps_bias
                    )));
                }
                let total: f64 = self.rps_bias.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(EnvError::InvalidConfig(format!("rps_bias must sum to 1, got {total}")));
                }
            }
            Game::Hanoi => {
                if !(2..=3).contains(&self.hanoi_disks) {
                    return Err(EnvError::InvalidConfig(format!(
                        "hanoi_disks must be 2 or 3, got {}",
                        self.hanoi_disks
                    )));
                }
            }
            Game::Messenger => {
                if self.grid_rows == 0 || self.grid_cols == 0 || self.grid_rows * self.grid_cols < 4 {
                    return Err(EnvError::InvalidConfig(format!(
                        "messenger grid {}x{} cannot hold four entities",
                        self.grid_rows, self.grid_cols
                    )));
                }
            }
            Game::Bandit => {}
        }
        Ok(())
    }

    /// Short label of the active variant switches, e.g. `2disk+shaped+valid`.
    /// Empty for the default setup of a game.
    pub fn variant_label(&self) -> String {
        let mut parts = Vec::new();
        match self.game {
            Game::Hanoi => {
                if self.hanoi_disks != 3 {
                    parts.push(format!("{}disk", self.hanoi_disks));
                }
                if self.reward_shaping {
                    parts.push("shaped".to_string());
                }
                if self.show_valid_actions {
                    parts.push("valid".to_string());
                }
            }
            Game::Messenger => {
                if !self.use_synonyms {
                    parts.push("nosyn".to_string());
                }
                if self.reward_shaping {
                    parts.push("shaped".to_string());
                }
            }
            Game::Bandit | Game::Rps => {}
        }
        parts.join("+")
    }
}
