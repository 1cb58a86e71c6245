//! Short-horizon lookahead: the model writes rollouts of up to three actions
//! with estimated returns and the harness recommends the best first action.

use serde::{Deserialize, Serialize};

use super::reflection::Reflection;
use super::{templates, StrategyError};
use crate::agent::{parse_action, LlmChannel};
use crate::backend::Purpose;
use crate::env::Environment;

pub const MAX_ROLLOUT_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub actions: Vec<String>,
    pub estimated_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerRecommendation {
    pub action: String,
    pub rollouts: Vec<Rollout>,
    pub rationale: String,
}

impl PlannerRecommendation {
    /// Text of the PLAN prompt section.
    pub fn render(&self) -> String {
        match self.rollouts.iter().find(|r| r.actions[0] == self.action) {
            Some(r) => format!(
                "Recommended action: {} (estimated return {} over the next {} step(s))",
                self.action,
                r.estimated_return,
                r.actions.len()
            ),
            None => format!("Recommended action: {}", self.action),
        }
    }
}

pub fn planner_prompt(observation: &str, manual: &str, reflection: Option<&Reflection>, legal: &[String]) -> String {
    let actions = legal
        .iter()
        .enumerate()
        .map(|(i, l)| format!("{}. {l}", i + 1))
        .collect::<Vec<_>>()
        .join("\n");
    templates::render(
        templates::PLANNER,
        &[
            ("MANUAL", manual),
            ("REFLECTION", reflection.map_or("(none)", |r| r.text.as_str())),
            ("OBSERVATION", observation),
            ("ACTIONS", &actions),
        ],
    )
}

/// Parses `a → b → c = 1.5` lines ("->" also accepted). Lines with more than
/// three actions, unknown labels or no numeric return are dropped.
pub fn parse_rollouts(text: &str, legal: &[String]) -> Vec<Rollout> {
    text.lines().filter_map(|line| parse_rollout(line, legal)).collect()
}

fn parse_rollout(line: &str, legal: &[String]) -> Option<Rollout> {
    let (lhs, rhs) = line.rsplit_once('=')?;
    let estimated_return: f64 = rhs
        .trim()
        .trim_end_matches(['.', ','])
        .parse()
        .ok()
        .filter(|r: &f64| r.is_finite())?;
    let parts: Vec<&str> = lhs.split('→').flat_map(|p| p.split("->")).map(str::trim).collect();
    if parts.is_empty() || parts.len() > MAX_ROLLOUT_LEN {
        return None;
    }
    let actions = parts
        .iter()
        .map(|p| parse_action(p, legal).ok().map(|i| legal[i].clone()))
        .collect::<Option<Vec<_>>>()?;
    Some(Rollout {
        actions,
        estimated_return,
    })
}

/// First action of the highest-return rollout; ties go to the earliest legal action.
pub fn recommend(rollouts: Vec<Rollout>, legal: &[String], rationale: String) -> Option<PlannerRecommendation> {
    let position = |r: &Rollout| legal.iter().position(|l| *l == r.actions[0]).unwrap_or(usize::MAX);
    let best = rollouts.iter().max_by(|a, b| {
        a.estimated_return
            .total_cmp(&b.estimated_return)
            .then_with(|| position(b).cmp(&position(a)))
    })?;
    Some(PlannerRecommendation {
        action: best.actions[0].clone(),
        rollouts,
        rationale,
    })
}

/// Queries the model for rollouts; an unparsable reply is retried once before
/// `PlanParseFailure`.
pub fn plan(
    observation: &str,
    manual: &str,
    reflection: Option<&Reflection>,
    legal: &[String],
    channel: &mut LlmChannel<'_>,
) -> Result<PlannerRecommendation, StrategyError> {
    let prompt = planner_prompt(observation, manual, reflection, legal);
    for _ in 0..2 {
        let reply = channel.query(Purpose::Plan, &prompt)?;
        if let Some(rec) = recommend(parse_rollouts(&reply, legal), legal, reply.trim().to_string()) {
            return Ok(rec);
        }
    }
    Err(StrategyError::PlanParseFailure)
}

/// Enumerates every action sequence up to three steps on clones of `env` and
/// recommends by true simulated return. Testing oracle only.
pub fn exact_plan(env: &Environment) -> Option<PlannerRecommendation> {
    if !env.is_active() {
        return None;
    }
    let legal = env.legal_actions().to_vec();
    let mut rollouts = Vec::new();
    let mut frontier = vec![(env.clone(), Vec::<usize>::new(), 0.0)];
    while let Some((state, seq, ret)) = frontier.pop() {
        for a in 0..legal.len() {
            let mut next = state.clone();
            let Ok(t) = next.step(a) else { continue };
            let mut seq = seq.clone();
            seq.push(a);
            let total = ret + t.reward;
            if seq.len() == MAX_ROLLOUT_LEN || t.terminated || t.truncated {
                rollouts.push((seq, total));
            } else {
                frontier.push((next, seq, total));
            }
        }
    }
    rollouts.sort_by(|a, b| a.0.cmp(&b.0));
    let rollouts = rollouts
        .into_iter()
        .map(|(seq, r)| Rollout {
            actions: seq.iter().map(|&i| legal[i].clone()).collect(),
            estimated_return: r,
        })
        .collect();
    recommend(rollouts, &legal, "exact simulation".into())
}
