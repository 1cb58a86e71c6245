//! Fixtures shared by the criterion benches.

use dyngame_core::agent::{EpisodeRecord, StepRecord};
use dyngame_core::env::{EnvConfig, Environment, Game};
use dyngame_core::run_policy_episode;

/// A full episode of `game` under a fixed cycling policy, used as prompt history.
pub fn sample_episode(game: Game, seed: u64) -> EpisodeRecord {
    let mut env = Environment::new(EnvConfig::new(game)).expect("default config is valid");
    let n = env.legal_actions().len();
    run_policy_episode(&mut env, 0, seed, |env, _| (env.steps_taken() * 7 + 3) % n).expect("policy stays legal")
}

/// First `n` steps of a sample Hanoi episode.
pub fn sample_history(n: usize) -> Vec<StepRecord> {
    let mut steps = sample_episode(Game::Hanoi, 1).steps;
    steps.truncate(n);
    steps
}
