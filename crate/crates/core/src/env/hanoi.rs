//! Tower of Hanoi with three rods and two or three disks.
//!
//! Disk ids grow with size (0 is the smallest). Each rod is stored bottom-to-top,
//! so a legal rod is strictly decreasing. An illegal move leaves the rods
//! untouched and is penalised.

use std::fmt;

use super::{EnvConfig, StepInfo, StepOutcome};

pub const OBJECTIVE: &str =
    "Move all disks from rod A to rod C, one disk at a time, never placing a larger disk on a smaller one.";

pub const REWARD_VALID: f64 = 0.0;
pub const REWARD_INVALID: f64 = -1.0;
pub const REWARD_GOAL: f64 = 100.0;
pub const SHAPED_VALID: f64 = 1.0;
pub const SHAPED_INVALID: f64 = -2.0;

const ROD_NAMES: [char; 3] = ['A', 'B', 'C'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HanoiMove {
    pub from: usize,
    pub to: usize,
}

impl HanoiMove {
    /// All six ordered rod pairs in action-index order.
    pub const ALL: [HanoiMove; 6] = [
        HanoiMove { from: 0, to: 1 },
        HanoiMove { from: 0, to: 2 },
        HanoiMove { from: 1, to: 0 },
        HanoiMove { from: 1, to: 2 },
        HanoiMove { from: 2, to: 0 },
        HanoiMove { from: 2, to: 1 },
    ];

    pub fn new(from: usize, to: usize) -> Self {
        assert!(from < 3 && to < 3 && from != to, "bad rod pair {from}->{to}");
        Self { from, to }
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|m| *m == self).expect("canonical move")
    }

    pub fn label(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for HanoiMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Move the top disk from rod {} to rod {}",
            ROD_NAMES[self.from], ROD_NAMES[self.to]
        )
    }
}

pub fn action_labels() -> Vec<String> {
    HanoiMove::ALL.iter().map(|m| m.label()).collect()
}

pub fn manual(config: &EnvConfig, valid: Option<&[HanoiMove]>) -> String {
    let (valid_r, invalid_r) = if config.reward_shaping {
        (SHAPED_VALID, SHAPED_INVALID)
    } else {
        (REWARD_VALID, REWARD_INVALID)
    };
    let mut text = format!(
        "The game consists of three rods (A, B, C) and {n} disks of different sizes, numbered 0 \
         (smallest) to {max} (largest). Initially all disks are stacked on rod A with the largest \
         at the bottom. Each rod is shown as |bottom, [...], top|. You may move only the top disk \
         of a rod, one disk at a time, and a larger disk can never be placed on a smaller one. \
         The goal is to move the entire stack to rod C. A legal move gives reward {valid_r}, an \
         illegal move gives reward {invalid_r} and leaves the rods unchanged, and completing the \
         puzzle gives reward {goal}.",
        n = config.hanoi_disks,
        max = config.hanoi_disks - 1,
        goal = REWARD_GOAL,
    );
    if let Some(moves) = valid {
        text.push_str("\nValid actions at this step:");
        for m in moves {
            text.push_str("\n- ");
            text.push_str(&m.label());
        }
    }
    text
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HanoiState {
    /// Rods A, B, C, each bottom-to-top.
    pub rods: [Vec<u8>; 3],
    pub move_count: usize,
}

impl HanoiState {
    /// All disks on rod A.
    pub fn new(disks: usize) -> Self {
        Self {
            rods: [(0..disks as u8).rev().collect(), Vec::new(), Vec::new()],
            move_count: 0,
        }
    }

    pub fn from_rods(rods: [Vec<u8>; 3]) -> Self {
        Self { rods, move_count: 0 }
    }

    pub fn disk_count(&self) -> usize {
        self.rods.iter().map(Vec::len).sum()
    }

    pub fn disks_on_target(&self) -> usize {
        self.rods[2].len()
    }

    pub fn is_solved(&self) -> bool {
        self.rods[0].is_empty() && self.rods[1].is_empty()
    }

    pub fn is_legal(&self, m: HanoiMove) -> bool {
        match (self.rods[m.from].last(), self.rods[m.to].last()) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(moving), Some(top)) => moving < top,
        }
    }

    /// Legal moves in action-index order.
    pub fn valid_moves(&self) -> Vec<HanoiMove> {
        HanoiMove::ALL.into_iter().filter(|m| self.is_legal(*m)).collect()
    }

    /// Applies a legal move; returns false and leaves the rods unchanged otherwise.
    pub fn apply(&mut self, m: HanoiMove) -> bool {
        if !self.is_legal(m) {
            return false;
        }
        let disk = self.rods[m.from].pop().expect("legal move has a disk");
        self.rods[m.to].push(disk);
        true
    }

    pub(crate) fn step(&mut self, m: HanoiMove, shaping: bool) -> StepOutcome {
        self.move_count += 1;
        let valid = self.apply(m);
        let solved = valid && self.is_solved();
        let base_reward = match (valid, solved) {
            (true, true) => REWARD_GOAL,
            (true, false) => REWARD_VALID,
            (false, _) => REWARD_INVALID,
        };
        let reward = if !shaping {
            base_reward
        } else {
            match (valid, solved) {
                (true, true) => REWARD_GOAL,
                (true, false) => SHAPED_VALID,
                (false, _) => SHAPED_INVALID,
            }
        };
        StepOutcome {
            reward,
            terminated: solved,
            info: StepInfo {
                valid_move: Some(valid),
                goal_reached: solved,
                disks_on_target: Some(self.disks_on_target() as u32),
                base_reward,
                ..StepInfo::default()
            },
        }
    }

    pub fn render(&self) -> String {
        self.rods
            .iter()
            .zip(ROD_NAMES)
            .map(|(rod, name)| {
                let disks: Vec<String> = rod.iter().map(|d| d.to_string()).collect();
                format!("{name}: |bottom, [{}], top|", disks.join(", "))
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}
