use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Backend, BackendError, Completion, CompletionRequest, Purpose};
use crate::agent::actions_from_prompt;

/// Answers with a uniformly drawn label from the prompt's ACTIONS section.
///
/// Planner calls get a one-step rollout with return 0; calls whose prompt has
/// no ACTIONS section get an empty reply.
#[derive(Debug, Clone)]
pub struct RandomBackend {
    rng: ChaCha8Rng,
}

impl RandomBackend {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Backend for RandomBackend {
    fn complete(&mut self, request: &CompletionRequest<'_>) -> Result<Completion, BackendError> {
        let actions = actions_from_prompt(request.prompt);
        let Some(choice) = actions.choose(&mut self.rng) else {
            return Ok(Completion::single(String::new()));
        };
        let text = match request.purpose {
            Purpose::Plan => format!("{choice} = 0"),
            _ => choice.clone(),
        };
        Ok(Completion::single(text))
    }
}
