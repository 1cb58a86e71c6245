//! (1+1) evolution over a textual heuristic set. Fitness is the cumulative
//! episode reward; the offspring replaces the parent only on strict improvement.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::reflection::Reflection;
use super::{templates, StrategyError};
use crate::agent::{render_history, EpisodeRecord, LlmChannel};
use crate::backend::Purpose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicSet {
    pub rules: Vec<String>,
    pub fitness: Option<f64>,
    pub generation: u32,
}

impl HeuristicSet {
    pub fn render(&self) -> String {
        self.rules
            .iter()
            .enumerate()
            .map(|(i, r)| format!("{}. {r}", i + 1))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationOp {
    Add,
    Remove,
    Modify,
}

impl MutationOp {
    pub const ALL: [MutationOp; 3] = [MutationOp::Add, MutationOp::Remove, MutationOp::Modify];

    pub fn as_str(self) -> &'static str {
        match self {
            MutationOp::Add => "add",
            MutationOp::Remove => "remove",
            MutationOp::Modify => "modify",
        }
    }

    fn instruction(self) -> &'static str {
        match self {
            MutationOp::Add => "Add one new rule to the list.",
            MutationOp::Remove => "Remove one rule from the list.",
            MutationOp::Modify => "Rewrite one rule of the list.",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineageEvent {
    Initialized,
    /// The model gave no usable rules; the set echoes the objective.
    InitializedFallback,
    Accepted,
    Retained,
    /// The proposed offspring was not a single edit of the parent.
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageEntry {
    pub generation: u32,
    pub rules: Vec<String>,
    pub fitness: Option<f64>,
    /// Parent fitness after this generation was decided.
    pub survivor_fitness: Option<f64>,
    pub event: LineageEvent,
    pub operator: Option<MutationOp>,
    #[serde(default)]
    pub edit: Option<MutationOp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingOffspring {
    pub set: HeuristicSet,
    pub operator: MutationOp,
    pub edit: MutationOp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleState {
    pub parent: HeuristicSet,
    pub pending: Option<PendingOffspring>,
    pub lineage: Vec<LineageEntry>,
}

impl OracleState {
    /// Seeds the archive with an already evaluated first set.
    pub fn new(parent: HeuristicSet, fallback: bool) -> Self {
        let entry = LineageEntry {
            generation: parent.generation,
            rules: parent.rules.clone(),
            fitness: parent.fitness,
            survivor_fitness: parent.fitness,
            event: if fallback {
                LineageEvent::InitializedFallback
            } else {
                LineageEvent::Initialized
            },
            operator: None,
            edit: None,
        };
        Self {
            parent,
            pending: None,
            lineage: vec![entry],
        }
    }

    /// Rules the next episode plays with: the pending offspring if any,
    /// otherwise the parent.
    pub fn active(&self) -> &HeuristicSet {
        self.pending.as_ref().map_or(&self.parent, |p| &p.set)
    }
}

/// One rule per non-empty line, list bullets and numbering stripped.
pub fn parse_rules(text: &str) -> Vec<String> {
    text.lines()
        .map(strip_bullet)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

fn strip_bullet(line: &str) -> &str {
    let line = line.trim();
    for prefix in ["- ", "* ", "• "] {
        if let Some(rest) = line.strip_prefix(prefix) {
            return rest.trim();
        }
    }
    let digits = line.len() - line.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(rest) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return rest.trim();
        }
    }
    line
}

/// Classifies `child` as a single list edit of `parent`, or `None` when it is
/// identical or differs by more than one edit.
pub fn single_edit(parent: &[String], child: &[String]) -> Option<MutationOp> {
    let removes_one = |long: &[String], short: &[String]| {
        (0..long.len()).any(|i| long[..i] == short[..i] && long[i + 1..] == short[i..])
    };
    if child.len() == parent.len() + 1 {
        removes_one(child, parent).then_some(MutationOp::Add)
    } else if child.len() + 1 == parent.len() {
        removes_one(parent, child).then_some(MutationOp::Remove)
    } else if child.len() == parent.len() {
        let differing = parent.iter().zip(child).filter(|(a, b)| a != b).count();
        (differing == 1).then_some(MutationOp::Modify)
    } else {
        None
    }
}

/// Uniform draw over add/remove/modify; remove is re-drawn from add/modify
/// when the parent has a single rule.
pub fn draw_operator(rng: &mut impl Rng, parent_rules: usize) -> MutationOp {
    let op = MutationOp::ALL[rng.random_range(0..3)];
    if op == MutationOp::Remove && parent_rules <= 1 {
        [MutationOp::Add, MutationOp::Modify][rng.random_range(0..2)]
    } else {
        op
    }
}

pub fn heuristics_prompt(episode: &EpisodeRecord, reflections: &[Reflection], manual: &str, objective: &str) -> String {
    let reflections = if reflections.is_empty() {
        "(none)".to_string()
    } else {
        reflections
            .iter()
            .map(|r| format!("After step {}: {}", r.step, r.text))
            .collect::<Vec<_>>()
            .join("\n")
    };
    templates::render(
        templates::HEURISTICS,
        &[
            ("MANUAL", manual),
            ("OBJECTIVE", objective),
            ("HISTORY", &render_history(&episode.steps)),
            ("REFLECTIONS", &reflections),
            ("REWARD", &episode.cumulative_reward.to_string()),
        ],
    )
}

pub fn mutation_prompt(parent: &HeuristicSet, op: MutationOp, last: &EpisodeRecord, objective: &str) -> String {
    templates::render(
        templates::MUTATE,
        &[
            ("OBJECTIVE", objective),
            ("HISTORY", &render_history(&last.steps)),
            ("REWARD", &last.cumulative_reward.to_string()),
            ("RULES", &parent.rules.join("\n")),
            ("OPERATOR", op.as_str()),
            ("OPERATOR_INSTRUCTION", op.instruction()),
        ],
    )
}

/// Builds the first heuristic set from episode one. Zero parsed rules are
/// retried once; after that the set is a single rule echoing the objective.
pub fn initialize_heuristics(
    first: &EpisodeRecord,
    reflections: &[Reflection],
    manual: &str,
    objective: &str,
    channel: &mut LlmChannel<'_>,
) -> Result<OracleState, StrategyError> {
    let prompt = heuristics_prompt(first, reflections, manual, objective);
    let mut rules = Vec::new();
    for _ in 0..2 {
        rules = parse_rules(&channel.query(Purpose::Heuristics, &prompt)?);
        if !rules.is_empty() {
            break;
        }
    }
    let fallback = rules.is_empty();
    if fallback {
        log::warn!("{}", StrategyError::EmptyHeuristics);
        rules = vec![objective.trim().to_string()];
    }
    let parent = HeuristicSet {
        rules,
        fitness: Some(first.cumulative_reward),
        generation: 1,
    };
    Ok(OracleState::new(parent, fallback))
}

/// Asks for a one-edit mutation of the parent and stores it as pending.
/// A non-compliant reply is retried once; a second failure is archived as
/// `Rejected` and reported as `MutationRejected`, leaving the parent in play.
pub fn propose_offspring(
    state: &mut OracleState,
    last: &EpisodeRecord,
    objective: &str,
    rng: &mut impl Rng,
    channel: &mut LlmChannel<'_>,
) -> Result<HeuristicSet, StrategyError> {
    if state.pending.is_some() {
        return Err(StrategyError::PendingOffspring);
    }
    let op = draw_operator(rng, state.parent.rules.len());
    let prompt = mutation_prompt(&state.parent, op, last, objective);
    let generation = state.parent.generation + 1;
    let mut rules = Vec::new();
    for _ in 0..2 {
        rules = parse_rules(&channel.query(Purpose::Mutate, &prompt)?);
        if let Some(edit) = single_edit(&state.parent.rules, &rules).filter(|_| !rules.is_empty()) {
            let set = HeuristicSet {
                rules,
                fitness: None,
                generation,
            };
            state.pending = Some(PendingOffspring {
                set: set.clone(),
                operator: op,
                edit,
            });
            return Ok(set);
        }
    }
    state.lineage.push(LineageEntry {
        generation,
        rules: rules.clone(),
        fitness: None,
        survivor_fitness: state.parent.fitness,
        event: LineageEvent::Rejected,
        operator: Some(op),
        edit: None,
    });
    Err(StrategyError::MutationRejected {
        operator: op,
        rules: rules.len(),
    })
}

/// Decides the pending offspring given the reward it earned. Ties keep the parent.
pub fn select_survivor(state: &mut OracleState, offspring_fitness: f64) -> Result<&HeuristicSet, StrategyError> {
    let pending = state.pending.take().ok_or(StrategyError::NoPendingOffspring)?;
    let mut offspring = pending.set;
    offspring.fitness = Some(offspring_fitness);
    let improves = state.parent.fitness.is_none_or(|p| offspring_fitness > p);
    let event = if improves {
        LineageEvent::Accepted
    } else {
        LineageEvent::Retained
    };
    let rules = offspring.rules.clone();
    let generation = offspring.generation;
    if improves {
        state.parent = offspring;
    }
    state.lineage.push(LineageEntry {
        generation,
        rules,
        fitness: Some(offspring_fitness),
        survivor_fitness: state.parent.fitness,
        event,
        operator: Some(pending.operator),
        edit: Some(pending.edit),
    });
    Ok(&state.parent)
}
