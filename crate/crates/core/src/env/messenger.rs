//! Grid-world message delivery with a stationary enemy.
//!
//! The agent must walk onto the message, then carry it to the goal while never
//! touching the enemy. Entity names come from a [`Lexicon`] so that the same
//! role can be described as "classified report" in one episode and
//! "restricted document" in the next.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{EnvConfig, Lexicon, Role, StepInfo, StepOutcome};

pub const OBJECTIVE: &str = "Pick up the message, deliver it to the goal, and avoid the enemy.";

pub const REWARD_PICKUP: f64 = 1.0;
pub const REWARD_DELIVERY: f64 = 1.0;
pub const REWARD_COLLISION: f64 = -1.0;
pub const REWARD_INVALID: f64 = -1.0;
pub const SHAPED_PICKUP: f64 = 10.0;
pub const SHAPED_DELIVERY: f64 = 50.0;
pub const SHAPED_CLOSER: f64 = 0.5;

/// Layout draws tried before accepting a layout that cannot be solved in time.
const MAX_LAYOUT_ATTEMPTS: usize = 10_000;

pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    North,
    South,
    East,
    West,
    Stay,
}

impl Direction {
    pub const ALL: [Direction; 5] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
        Direction::Stay,
    ];

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::North => "Move North",
            Direction::South => "Move South",
            Direction::East => "Move East",
            Direction::West => "Move West",
            Direction::Stay => "Stay in place",
        }
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Direction::North => (-1, 0),
            Direction::South => (1, 0),
            Direction::East => (0, 1),
            Direction::West => (0, -1),
            Direction::Stay => (0, 0),
        }
    }

    /// Neighbouring cell, or `None` when it lies off the grid.
    pub fn apply(self, from: Cell, rows: usize, cols: usize) -> Option<Cell> {
        let (dr, dc) = self.delta();
        let r = from.0.checked_add_signed(dr)?;
        let c = from.1.checked_add_signed(dc)?;
        (r < rows && c < cols).then_some((r, c))
    }
}

pub fn action_labels() -> Vec<String> {
    Direction::ALL.iter().map(|d| d.label().to_string()).collect()
}

pub fn literal_names() -> [String; 3] {
    Role::ALL.map(|r| r.literal().to_string())
}

pub fn manual(config: &EnvConfig, names: &[String; 3]) -> String {
    let [message, goal, enemy] = names;
    let rewards = if config.reward_shaping {
        format!(
            "Picking up the {message} gives reward {SHAPED_PICKUP} and delivering it gives reward \
             {SHAPED_DELIVERY}. Every step that brings you closer to the {message} (or to the \
             {goal} while carrying it) gives reward {SHAPED_CLOSER}."
        )
    } else {
        format!(
            "Picking up the {message} gives reward {REWARD_PICKUP} and delivering it gives reward \
             {REWARD_DELIVERY}."
        )
    };
    format!(
        "You are a messenger on a {rows}x{cols} grid. Row 0 is the northern edge and column 0 the \
         western edge. Each step you may move one cell north, south, east or west, or stay in \
         place. Walk onto the {message} to pick it up, then carry it to the {goal}. The {enemy} \
         does not move; touching it ends the game with reward {REWARD_COLLISION}. Moving off the \
         grid is invalid, gives reward {REWARD_INVALID} and leaves you where you are. {rewards}",
        rows = config.grid_rows,
        cols = config.grid_cols,
    )
}

pub fn manhattan(a: Cell, b: Cell) -> u32 {
    (a.0.abs_diff(b.0) + a.1.abs_diff(b.1)) as u32
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessengerState {
    pub grid_size: (usize, usize),
    pub agent_pos: Cell,
    pub enemy_pos: Cell,
    pub message_pos: Cell,
    pub goal_pos: Cell,
    pub carrying: bool,
    pub delivered: bool,
    pub collided: bool,
    /// Surface names for (message, goal, enemy).
    pub names: [String; 3],
    pub step: usize,
}

impl MessengerState {
    /// Samples a layout with four distinct cells. Layouts that cannot be
    /// completed within the horizon are redrawn.
    pub fn reset(config: &EnvConfig, lexicon: &Lexicon, rng: &mut ChaCha8Rng) -> Self {
        let (rows, cols) = (config.grid_rows, config.grid_cols);
        let names = if config.use_synonyms {
            lexicon.sample(rng)
        } else {
            literal_names()
        };
        let draw_cell = |rng: &mut ChaCha8Rng| (rng.random_range(0..rows), rng.random_range(0..cols));
        let mut layout = None;
        for _ in 0..MAX_LAYOUT_ATTEMPTS {
            let cells: [Cell; 4] = std::array::from_fn(|_| draw_cell(rng));
            let distinct = (0..4).all(|i| (i + 1..4).all(|j| cells[i] != cells[j]));
            if !distinct {
                continue;
            }
            let state = Self::from_cells(config.grid_rows, config.grid_cols, cells, names.clone());
            let solvable = state
                .min_steps_to_finish()
                .is_some_and(|n| n as usize <= config.steps_per_episode);
            layout = Some(state);
            if solvable {
                break;
            }
        }
        layout.expect("a 4-cell grid always admits a distinct layout")
    }

    /// Builds a state from `[agent, enemy, message, goal]`.
    pub fn from_cells(rows: usize, cols: usize, cells: [Cell; 4], names: [String; 3]) -> Self {
        Self {
            grid_size: (rows, cols),
            agent_pos: cells[0],
            enemy_pos: cells[1],
            message_pos: cells[2],
            goal_pos: cells[3],
            carrying: false,
            delivered: false,
            collided: false,
            names,
            step: 0,
        }
    }

    pub fn lexicon_names(&self) -> [String; 3] {
        self.names.clone()
    }

    pub fn name(&self, role: Role) -> &str {
        &self.names[role as usize]
    }

    /// Cell the agent should head for: the message until picked up, then the goal.
    pub fn target(&self) -> Cell {
        if self.carrying || self.delivered {
            self.goal_pos
        } else {
            self.message_pos
        }
    }

    pub fn distance_to_target(&self) -> u32 {
        manhattan(self.agent_pos, self.target())
    }

    /// Fewest moves to pick up and deliver the message without touching the enemy.
    pub fn min_steps_to_finish(&self) -> Option<u32> {
        let (rows, cols) = self.grid_size;
        if self.carrying {
            return grid_distance(rows, cols, self.agent_pos, self.goal_pos, self.enemy_pos);
        }
        let first = grid_distance(rows, cols, self.agent_pos, self.message_pos, self.enemy_pos)?;
        let second = grid_distance(rows, cols, self.message_pos, self.goal_pos, self.enemy_pos)?;
        Some(first + second)
    }

    pub(crate) fn step(&mut self, dir: Direction, shaping: bool) -> StepOutcome {
        let prev = self.clone();
        let (rows, cols) = self.grid_size;
        self.step += 1;
        let mut info = StepInfo::default();
        let base_reward = match dir.apply(self.agent_pos, rows, cols) {
            None => {
                info.valid_move = Some(false);
                REWARD_INVALID
            }
            Some(cell) => {
                info.valid_move = Some(true);
                self.agent_pos = cell;
                if cell == self.enemy_pos {
                    self.collided = true;
                    info.collided = true;
                    REWARD_COLLISION
                } else if !self.carrying && !self.delivered && cell == self.message_pos {
                    self.carrying = true;
                    info.picked_up = true;
                    REWARD_PICKUP
                } else if self.carrying && cell == self.goal_pos {
                    self.carrying = false;
                    self.delivered = true;
                    info.delivered = true;
                    info.goal_reached = true;
                    REWARD_DELIVERY
                } else {
                    0.0
                }
            }
        };
        info.base_reward = base_reward;
        info.distance_to_target = Some(self.distance_to_target());
        let reward = if shaping {
            messenger_shaped_reward(&prev, self, base_reward)
        } else {
            base_reward
        };
        StepOutcome {
            reward,
            terminated: self.collided || self.delivered,
            info,
        }
    }

    pub fn observation(&self) -> String {
        let (rows, cols) = self.grid_size;
        let [message, goal, enemy] = &self.names;
        let mut lines = vec![format!(
            "You are at row {}, column {} of the {rows}x{cols} grid.",
            self.agent_pos.0, self.agent_pos.1
        )];
        if self.delivered {
            lines.push(format!("You delivered the {message} to the {goal}."));
        } else if self.carrying {
            lines.push(format!("You are carrying the {message}."));
        } else {
            lines.push("You are not carrying anything.".to_string());
            lines.push(self.describe(message, self.message_pos));
        }
        if !self.delivered {
            lines.push(self.describe(goal, self.goal_pos));
        }
        if self.collided {
            lines.push(format!("You ran into the {enemy}."));
        } else {
            lines.push(self.describe(enemy, self.enemy_pos));
        }
        lines.join("\n")
    }

    fn describe(&self, name: &str, cell: Cell) -> String {
        let (ar, ac) = self.agent_pos;
        let mut parts = Vec::new();
        if cell.0 < ar {
            parts.push(format!("{} north", ar - cell.0));
        } else if cell.0 > ar {
            parts.push(format!("{} south", cell.0 - ar));
        }
        if cell.1 > ac {
            parts.push(format!("{} east", cell.1 - ac));
        } else if cell.1 < ac {
            parts.push(format!("{} west", ac - cell.1));
        }
        let relative = if parts.is_empty() {
            "at your position".to_string()
        } else {
            format!("{} of you", parts.join(" and "))
        };
        format!("The {name} is at row {}, column {} ({relative}).", cell.0, cell.1)
    }
}

/// Reward of one step under shaping.
///
/// Collisions stay at -1; a pickup pays 10 and a delivery 50 in place of any
/// distance bonus; otherwise the base movement reward (0, or -1 for an
/// off-grid move) earns +0.5 when the Manhattan distance to the current
/// target strictly decreased.
pub fn messenger_shaped_reward(prev: &MessengerState, next: &MessengerState, base_event_reward: f64) -> f64 {
    if next.collided && !prev.collided {
        return REWARD_COLLISION;
    }
    if next.delivered && !prev.delivered {
        return SHAPED_DELIVERY;
    }
    if next.carrying && !prev.carrying {
        return SHAPED_PICKUP;
    }
    let target = prev.target();
    if manhattan(next.agent_pos, target) < manhattan(prev.agent_pos, target) {
        base_event_reward + SHAPED_CLOSER
    } else {
        base_event_reward
    }
}

fn grid_distance(rows: usize, cols: usize, from: Cell, to: Cell, blocked: Cell) -> Option<u32> {
    let mut dist = vec![u32::MAX; rows * cols];
    let idx = |c: Cell| c.0 * cols + c.1;
    let mut queue = VecDeque::from([from]);
    dist[idx(from)] = 0;
    while let Some(cell) = queue.pop_front() {
        if cell == to {
            return Some(dist[idx(cell)]);
        }
        for dir in &Direction::ALL[..4] {
            if let Some(next) = dir.apply(cell, rows, cols) {
                if next != blocked && dist[idx(next)] == u32::MAX {
                    dist[idx(next)] = dist[idx(cell)] + 1;
                    queue.push_back(next);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Environment, Game};
    use rand::SeedableRng;

    fn literal(cells: [Cell; 4]) -> MessengerState {
        MessengerState::from_cells(5, 5, cells, literal_names())
    }

    #[test]
    fn pickup_then_delivery() {
        // agent (2,2), enemy (4,4), message (2,3), goal (2,4)
        let mut s = literal([(2, 2), (4, 4), (2, 3), (2, 4)]);
        let out = s.step(Direction::East, false);
        assert!(out.info.picked_up);
        assert_eq!(out.reward, 1.0);
        assert!(!out.terminated);
        let out = s.step(Direction::East, false);
        assert!(out.info.delivered && out.terminated);
        assert_eq!(out.reward, 1.0);
    }

    #[test]
    fn collision_ends_episode() {
        let mut s = literal([(2, 2), (1, 2), (4, 4), (0, 0)]);
        let out = s.step(Direction::North, false);
        assert!(out.terminated && out.info.collided);
        assert_eq!(out.reward, -1.0);
        let mut s = literal([(2, 2), (1, 2), (4, 4), (0, 0)]);
        assert_eq!(s.step(Direction::North, true).reward, -1.0);
    }

    #[test]
    fn off_grid_is_invalid() {
        let mut s = literal([(0, 1), (4, 4), (3, 3), (2, 0)]);
        let out = s.step(Direction::North, false);
        assert_eq!(out.reward, -1.0);
        assert_eq!(out.info.valid_move, Some(false));
        assert_eq!(s.agent_pos, (0, 1));
    }

    #[test]
    fn goal_without_message_is_an_ordinary_cell() {
        let mut s = literal([(2, 2), (4, 4), (0, 0), (2, 3)]);
        let out = s.step(Direction::East, false);
        assert_eq!(out.reward, 0.0);
        assert!(!out.terminated);
    }

    #[test]
    fn shaped_rewards() {
        // distance to message 3 -> 2
        let mut s = literal([(2, 0), (4, 4), (2, 3), (0, 4)]);
        assert_eq!(s.step(Direction::East, true).reward, 0.5);
        // stay: no bonus
        assert_eq!(s.step(Direction::Stay, true).reward, 0.0);
        // moving away
        assert_eq!(s.step(Direction::West, true).reward, 0.0);
        s.step(Direction::East, true);
        s.step(Direction::East, true);
        // pickup replaces the distance bonus
        let out = s.step(Direction::East, true);
        assert!(out.info.picked_up);
        assert_eq!(out.reward, 10.0);
        assert_eq!(out.info.base_reward, 1.0);
        // now heading to goal (0,4): north brings us closer
        assert_eq!(s.step(Direction::North, true).reward, 0.5);
        let out = s.step(Direction::North, true);
        // (0,3) is not the goal; still closer
        assert_eq!(out.reward, 0.5);
        let out = s.step(Direction::East, true);
        assert!(out.info.delivered);
        assert_eq!(out.reward, 50.0);
    }

    #[test]
    fn shaped_invalid_move_keeps_penalty() {
        let mut s = literal([(0, 0), (4, 4), (2, 3), (3, 4)]);
        assert_eq!(s.step(Direction::West, true).reward, -1.0);
    }

    #[test]
    fn resets_place_four_distinct_solvable_cells() {
        let cfg = EnvConfig::new(Game::Messenger);
        let lex = Lexicon::builtin();
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = MessengerState::reset(&cfg, &lex, &mut rng);
            let cells = [s.agent_pos, s.enemy_pos, s.message_pos, s.goal_pos];
            for i in 0..4 {
                assert!(cells[i].0 < 5 && cells[i].1 < 5);
                for j in i + 1..4 {
                    assert_ne!(cells[i], cells[j], "seed {seed}");
                }
            }
            assert!(s.min_steps_to_finish().unwrap() <= 10);
        }
    }

    #[test]
    fn observation_uses_lexicon_names() {
        let mut cfg = EnvConfig::new(Game::Messenger);
        let mut env = Environment::new(cfg.clone()).unwrap();
        let obs = env.reset(11);
        let s = env.messenger().unwrap();
        assert!(obs.contains(&format!("The {} is at row", s.name(Role::Message))));
        assert!(Lexicon::builtin().names(Role::Message).contains(&s.names[0]));

        cfg.use_synonyms = false;
        let mut env = Environment::new(cfg).unwrap();
        let obs = env.reset(11);
        assert!(obs.contains("The message is at row"));
        assert!(obs.contains("The enemy is at row"));
    }

    #[test]
    fn classified_report_appears_across_seeds() {
        let mut env = Environment::new(EnvConfig::new(Game::Messenger)).unwrap();
        let hit = (0..200).any(|seed| env.reset(seed).contains("classified report"));
        assert!(hit);
    }
}
