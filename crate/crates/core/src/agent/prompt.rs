//! Agent prompt layout.
//!
//! Sections are delimited by fixed `=== NAME ===` marker lines and always appear
//! in the same order. Strategy augmentations only appear when the strategy
//! enables them.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::StepRecord;

pub const MANUAL: &str = "MANUAL";
pub const OBJECTIVE: &str = "OBJECTIVE";
pub const HISTORY: &str = "HISTORY";
pub const REFLECTION: &str = "REFLECTION";
pub const HEURISTICS: &str = "HEURISTICS";
pub const PLAN: &str = "PLAN";
pub const OBSERVATION: &str = "OBSERVATION";
pub const ACTIONS: &str = "ACTIONS";

pub const CLOSING_INSTRUCTION: &str = "Choose the next action. Answer with exactly one action label from the ACTIONS list, copied verbatim, and nothing else.";

pub const FORMAT_REMINDER: &str = "Your previous answer could not be matched to exactly one action. Reply with a single action label from the ACTIONS list and nothing else.";

pub fn marker(name: &str) -> String {
    format!("=== {name} ===")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationKind {
    Reflection,
    Heuristics,
    Plan,
}

impl AugmentationKind {
    pub fn section(self) -> &'static str {
        match self {
            AugmentationKind::Reflection => REFLECTION,
            AugmentationKind::Heuristics => HEURISTICS,
            AugmentationKind::Plan => PLAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Augmentation {
    pub kind: AugmentationKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle<'a> {
    pub manual: &'a str,
    pub objective: &'a str,
    pub history: &'a [StepRecord],
    pub observation: &'a str,
    pub legal_actions: &'a [String],
    pub augmentations: &'a [Augmentation],
    /// Upper bound on rendered history characters; oldest tuples go first.
    pub history_char_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPrompt {
    pub text: String,
    /// Number of oldest history tuples left out to honour the cap.
    pub omitted_steps: usize,
}

pub fn render_step(step: &StepRecord) -> String {
    format!(
        "Step {}:\nState:\n{}\nAction: {}\nReward: {}\nNext state:\n{}",
        step.step, step.state, step.action, step.reward, step.next_state
    )
}

/// Renders history tuples in order, separated by blank lines.
pub fn render_history(steps: &[StepRecord]) -> String {
    steps.iter().map(render_step).collect::<Vec<_>>().join("\n\n")
}

impl PromptBundle<'_> {
    pub fn render(&self) -> RenderedPrompt {
        let mut out = String::new();
        let mut section = |name: &str, body: &str| {
            out.push_str(&marker(name));
            out.push('\n');
            if !body.is_empty() {
                out.push_str(body);
                out.push('\n');
            }
            out.push('\n');
        };
        section(MANUAL, self.manual);
        section(OBJECTIVE, self.objective);

        let mut rendered: Vec<String> = self.history.iter().map(render_step).collect();
        let mut omitted = 0;
        if let Some(cap) = self.history_char_cap {
            let mut total: usize = rendered.iter().map(|s| s.len() + 2).sum();
            while total > cap && omitted < rendered.len() {
                total -= rendered[omitted].len() + 2;
                omitted += 1;
            }
        }
        let mut history = String::new();
        if omitted > 0 {
            history.push_str(&format!("({omitted} earlier steps omitted)\n\n"));
        }
        history.push_str(&rendered.split_off(omitted).join("\n\n"));
        section(HISTORY, &history);

        let mut augmentations: Vec<&Augmentation> = self.augmentations.iter().collect();
        augmentations.sort_by_key(|a| a.kind);
        for aug in augmentations {
            section(aug.kind.section(), &aug.text);
        }
        section(OBSERVATION, self.observation);
        let actions = self
            .legal_actions
            .iter()
            .enumerate()
            .map(|(i, label)| format!("{}. {label}", i + 1))
            .collect::<Vec<_>>()
            .join("\n");
        section(ACTIONS, &actions);
        out.push_str(CLOSING_INSTRUCTION);
        out.push('\n');
        RenderedPrompt {
            text: out,
            omitted_steps: omitted,
        }
    }
}

pub fn build_prompt(bundle: &PromptBundle<'_>) -> String {
    bundle.render().text
}

/// Appends the format reminder used when a reply could not be parsed.
pub fn with_format_reminder(prompt: &str) -> String {
    format!("{prompt}\n{FORMAT_REMINDER}\n")
}

/// Action labels listed in the last ACTIONS section of a prompt.
pub fn actions_from_prompt(prompt: &str) -> Vec<String> {
    let header = marker(ACTIONS);
    let lines: Vec<&str> = prompt.lines().collect();
    let Some(start) = lines.iter().rposition(|l| l.trim() == header) else {
        return Vec::new();
    };
    lines[start + 1..]
        .iter()
        .map_while(|line| {
            let (num, label) = line.trim().split_once(". ")?;
            num.parse::<usize>().ok()?;
            Some(label.trim().to_string())
        })
        .collect()
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Identifies the agent prompt layout in run logs.
pub fn layout_hash() -> String {
    let layout = [
        MANUAL,
        OBJECTIVE,
        HISTORY,
        REFLECTION,
        HEURISTICS,
        PLAN,
        OBSERVATION,
        ACTIONS,
        CLOSING_INSTRUCTION,
        FORMAT_REMINDER,
    ]
    .join("\n");
    sha256_hex(&layout)
}
