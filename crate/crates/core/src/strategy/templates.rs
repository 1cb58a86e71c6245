//! Versioned prompt templates with `{{NAME}}` placeholders.

use crate::agent::{layout_hash, sha256_hex};

pub const REFLECTION: &str = include_str!("../../assets/templates/reflection.txt");
pub const HEURISTICS: &str = include_str!("../../assets/templates/heuristics.txt");
pub const MUTATE: &str = include_str!("../../assets/templates/mutate.txt");
pub const PLANNER: &str = include_str!("../../assets/templates/planner.txt");

/// Replaces every `{{KEY}}` with its value. Unknown placeholders are left alone.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in values {
        out = out.replace(&format!("{{{{{key}}}}}"), value);
    }
    out
}

/// SHA-256 of every shipped template plus the agent prompt layout.
pub fn template_hashes() -> Vec<(String, String)> {
    vec![
        ("agent_layout".into(), layout_hash()),
        ("reflection".into(), sha256_hex(REFLECTION)),
        ("heuristics".into(), sha256_hex(HEURISTICS)),
        ("mutate".into(), sha256_hex(MUTATE)),
        ("planner".into(), sha256_hex(PLANNER)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_placeholders() {
        assert_eq!(render("a {{X}} b {{Y}} {{X}}", &[("X", "1"), ("Y", "2")]), "a 1 b 2 1");
        assert_eq!(render("{{Z}}", &[]), "{{Z}}");
    }

    #[test]
    fn shipped_templates_have_their_placeholders() {
        for key in ["OBJECTIVE", "HISTORY", "REFLECTION"] {
            assert!(REFLECTION.contains(&format!("{{{{{key}}}}}")));
        }
        for key in ["RULES", "OPERATOR", "OPERATOR_INSTRUCTION", "REWARD"] {
            assert!(MUTATE.contains(&format!("{{{{{key}}}}}")));
        }
        for key in ["MANUAL", "OBSERVATION", "ACTIONS", "REFLECTION"] {
            assert!(PLANNER.contains(&format!("{{{{{key}}}}}")));
        }
        assert!(!PLANNER.contains("HEURISTICS"));
        assert_eq!(template_hashes().len(), 5);
    }
}
