//! Rock paper scissors against an opponent with a biased, per-episode shuffled
//! move distribution.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{StepInfo, StepOutcome};

pub const OBJECTIVE: &str = "Win as many rounds as possible by learning which move your opponent favours.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RpsMove {
    Rock,
    Paper,
    Scissors,
}

impl RpsMove {
    pub const ALL: [RpsMove; 3] = [RpsMove::Rock, RpsMove::Paper, RpsMove::Scissors];

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// The move that defeats `self`.
    pub fn beaten_by(self) -> RpsMove {
        match self {
            RpsMove::Rock => RpsMove::Paper,
            RpsMove::Paper => RpsMove::Scissors,
            RpsMove::Scissors => RpsMove::Rock,
        }
    }

    /// +1 win, 0 tie, -1 loss for the player choosing `self`.
    pub fn payoff(self, opponent: RpsMove) -> f64 {
        if self == opponent {
            0.0
        } else if opponent.beaten_by() == self {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for RpsMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RpsMove::Rock => "Rock",
            RpsMove::Paper => "Paper",
            RpsMove::Scissors => "Scissors",
        })
    }
}

pub fn action_labels() -> Vec<String> {
    RpsMove::ALL.iter().map(|m| m.to_string()).collect()
}

pub fn manual() -> String {
    "You are playing rock paper scissors. Rock beats scissors, scissors beats paper and paper \
     beats rock. Each round you choose a move; a win gives reward 1, a tie 0 and a loss -1. \
     Your opponent does not play uniformly: some moves are more likely than others, and the \
     preferences are reshuffled at the start of every round of play."
        .to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpsState {
    /// Opponent probabilities over (rock, paper, scissors) for this episode.
    pub bias: [f64; 3],
    pub round: usize,
    pub wins: u32,
    pub ties: u32,
    pub losses: u32,
    last: Option<(RpsMove, RpsMove, f64)>,
}

impl RpsState {
    pub fn reset(base_bias: [f64; 3], rng: &mut ChaCha8Rng) -> Self {
        let mut perm = [0usize, 1, 2];
        perm.shuffle(rng);
        Self::with_bias([base_bias[perm[0]], base_bias[perm[1]], base_bias[perm[2]]])
    }

    pub fn with_bias(bias: [f64; 3]) -> Self {
        Self {
            bias,
            round: 0,
            wins: 0,
            ties: 0,
            losses: 0,
            last: None,
        }
    }

    pub fn draw_opponent(&self, rng: &mut ChaCha8Rng) -> RpsMove {
        let u: f64 = rng.random();
        if u < self.bias[0] {
            RpsMove::Rock
        } else if u < self.bias[0] + self.bias[1] {
            RpsMove::Paper
        } else {
            RpsMove::Scissors
        }
    }

    pub(crate) fn step(&mut self, index: usize, rng: &mut ChaCha8Rng) -> StepOutcome {
        let player = RpsMove::from_index(index);
        let opponent = self.draw_opponent(rng);
        self.resolve(player, opponent)
    }

    pub(crate) fn resolve(&mut self, player: RpsMove, opponent: RpsMove) -> StepOutcome {
        let reward = player.payoff(opponent);
        match reward {
            r if r > 0.0 => self.wins += 1,
            r if r < 0.0 => self.losses += 1,
            _ => self.ties += 1,
        }
        self.round += 1;
        self.last = Some((player, opponent, reward));
        StepOutcome {
            reward,
            terminated: false,
            info: StepInfo {
                base_reward: reward,
                ..StepInfo::default()
            },
        }
    }

    pub fn last_opponent_move(&self) -> Option<RpsMove> {
        self.last.map(|(_, o, _)| o)
    }

    pub fn observation(&self) -> String {
        match self.last {
            None => "A new round begins.".to_string(),
            Some((player, opponent, reward)) => {
                let outcome = match reward {
                    r if r > 0.0 => "You won",
                    r if r < 0.0 => "You lost",
                    _ => "It is a tie",
                };
                format!(
                    "You played {player} and your opponent played {opponent}. {outcome}, you received reward {reward}."
                )
            }
        }
    }
}
