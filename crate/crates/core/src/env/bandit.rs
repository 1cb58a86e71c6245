//! Two-armed bandit with deterministic ±1 payoffs and a per-episode optimal arm.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{StepInfo, StepOutcome};

pub const OBJECTIVE: &str = "Maximize your cumulative reward by finding and pulling the slot machine that pays off.";

pub fn action_labels() -> Vec<String> {
    vec!["pull slot machine 1".to_string(), "pull slot machine 2".to_string()]
}

pub fn manual() -> String {
    "You are in a casino with two slot machines, numbered 1 and 2. \
     At each step you pull exactly one of them. One machine is profitable and pays reward 1 \
     every time it is pulled; the other pays reward -1. Which machine is profitable is decided \
     at the start of each round and may differ between rounds."
        .to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditState {
    /// 1 or 2.
    pub optimal_arm: u8,
    pub pulls: [u32; 2],
    pub optimal_pulls: u32,
    pub step: usize,
    last: Option<(u8, f64)>,
}

impl BanditState {
    pub fn reset(rng: &mut ChaCha8Rng) -> Self {
        Self::with_optimal_arm(if rng.random_bool(0.5) { 1 } else { 2 })
    }

    pub fn with_optimal_arm(optimal_arm: u8) -> Self {
        assert!(optimal_arm == 1 || optimal_arm == 2, "arm must be 1 or 2");
        Self {
            optimal_arm,
            pulls: [0; 2],
            optimal_pulls: 0,
            step: 0,
            last: None,
        }
    }

    /// Pulls arm `index + 1`.
    pub(crate) fn step(&mut self, index: usize) -> StepOutcome {
        let arm = index as u8 + 1;
        let reward = if arm == self.optimal_arm { 1.0 } else { -1.0 };
        self.pulls[index] += 1;
        if reward > 0.0 {
            self.optimal_pulls += 1;
        }
        self.step += 1;
        self.last = Some((arm, reward));
        StepOutcome {
            reward,
            terminated: false,
            info: StepInfo {
                base_reward: reward,
                ..StepInfo::default()
            },
        }
    }

    pub fn observation(&self) -> String {
        match self.last {
            None => "A new round begins.".to_string(),
            Some((arm, reward)) => {
                format!("You pulled slot machine {arm}, you received reward {reward}.")
            }
        }
    }
}
