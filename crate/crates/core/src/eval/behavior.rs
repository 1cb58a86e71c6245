use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::agent::EpisodeRecord;
use crate::env::Game;

/// Percentages are in [0, 100]. Hanoi fills G, D and I; Messenger fills P, G and C.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BehaviorMetrics {
    pub goal_rate: Option<f64>,
    pub avg_disks: Option<f64>,
    pub invalid_rate: Option<f64>,
    pub pickup_rate: Option<f64>,
    pub collision_rate: Option<f64>,
}

fn percent(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        100.0 * n as f64 / d as f64
    }
}

pub fn behavior_metrics(episodes: &[EpisodeRecord], game: Game) -> Result<BehaviorMetrics, EvalError> {
    if let Some(e) = episodes.iter().find(|e| e.game != game) {
        return Err(EvalError::MixedGames {
            expected: game,
            found: e.game,
        });
    }
    if episodes.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = episodes.len();
    let any = |f: fn(&crate::env::StepInfo) -> bool| {
        episodes
            .iter()
            .filter(|e| e.steps.iter().any(|s| f(&s.flags.info)))
            .count()
    };
    let goal = percent(any(|i| i.goal_reached), n);
    Ok(match game {
        Game::Hanoi => {
            let disks: f64 = episodes
                .iter()
                .map(|e| e.steps.last().and_then(|s| s.flags.info.disks_on_target).unwrap_or(0) as f64)
                .sum();
            let total: usize = episodes.iter().map(|e| e.steps.len()).sum();
            let invalid = episodes
                .iter()
                .flat_map(|e| &e.steps)
                .filter(|s| s.flags.info.valid_move == Some(false))
                .count();
            BehaviorMetrics {
                goal_rate: Some(goal),
                avg_disks: Some(disks / n as f64),
                invalid_rate: Some(percent(invalid, total)),
                ..BehaviorMetrics::default()
            }
        }
        Game::Messenger => BehaviorMetrics {
            goal_rate: Some(goal),
            pickup_rate: Some(percent(any(|i| i.picked_up), n)),
            collision_rate: Some(percent(any(|i| i.collided), n)),
            ..BehaviorMetrics::default()
        },
        Game::Bandit | Game::Rps => BehaviorMetrics::default(),
    })
}
