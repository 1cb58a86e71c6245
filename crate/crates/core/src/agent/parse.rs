use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("response matches several actions: {0:?}")]
    AmbiguousAction(Vec<String>),
    #[error("no action found in response")]
    NoActionFound,
}

/// Maps a model reply onto one of `legal_actions`, returning its index.
///
/// Tried in order: the whole reply equals a label; exactly one label occurs
/// (case-insensitively) in the last non-empty line, then anywhere in the reply;
/// exactly one action number is mentioned ("action 2", or a bare "2").
pub fn parse_action(response: &str, legal_actions: &[String]) -> Result<usize, ParseError> {
    let trimmed = response.trim();
    let bare = trimmed.trim_matches(|c: char| c == '"' || c == '\'' || c == '`' || c == '.');
    if let Some(i) = legal_actions.iter().position(|l| l == trimmed || l == bare) {
        return Ok(i);
    }

    if let Some(last_line) = trimmed.lines().rev().find(|l| !l.trim().is_empty()) {
        match substring_matches(last_line, legal_actions) {
            Matches::One(i) => return Ok(i),
            Matches::Many(found) => return Err(ambiguous(found, legal_actions)),
            Matches::None => {}
        }
    }
    match substring_matches(trimmed, legal_actions) {
        Matches::One(i) => return Ok(i),
        Matches::Many(found) => return Err(ambiguous(found, legal_actions)),
        Matches::None => {}
    }

    let mut indices: Vec<usize> = index_mentions(trimmed)
        .into_iter()
        .filter(|n| (1..=legal_actions.len()).contains(n))
        .collect();
    indices.sort_unstable();
    indices.dedup();
    match indices.as_slice() {
        [n] => Ok(n - 1),
        [] => Err(ParseError::NoActionFound),
        many => Err(ambiguous(many.iter().map(|n| n - 1).collect(), legal_actions)),
    }
}

enum Matches {
    None,
    One(usize),
    Many(Vec<usize>),
}

fn substring_matches(text: &str, labels: &[String]) -> Matches {
    let haystack = text.to_lowercase();
    let lowered: Vec<String> = labels.iter().map(|l| l.to_lowercase()).collect();
    let hits: Vec<usize> = (0..labels.len()).filter(|&i| haystack.contains(&lowered[i])).collect();
    // A label contained in another matching label is not a separate mention.
    let hits: Vec<usize> = hits
        .iter()
        .copied()
        .filter(|&i| {
            !hits
                .iter()
                .any(|&j| j != i && lowered[j].len() > lowered[i].len() && lowered[j].contains(&lowered[i]))
        })
        .collect();
    match hits.as_slice() {
        [] => Matches::None,
        [i] => Matches::One(*i),
        _ => Matches::Many(hits),
    }
}

fn index_mentions(text: &str) -> Vec<usize> {
    static ACTION_NO: OnceLock<Regex> = OnceLock::new();
    static BARE: OnceLock<Regex> = OnceLock::new();
    let action_no =
        ACTION_NO.get_or_init(|| Regex::new(r"(?i)\baction\s*(?:#|no\.?|number)?\s*(\d+)\b").expect("valid regex"));
    let bare = BARE.get_or_init(|| Regex::new(r"^\s*(\d+)\s*\.?\s*$").expect("valid regex"));
    let mut found: Vec<usize> = action_no
        .captures_iter(text)
        .filter_map(|c| c[1].parse().ok())
        .collect();
    if found.is_empty() {
        if let Some(c) = bare.captures(text) {
            found.extend(c[1].parse::<usize>().ok());
        }
    }
    found
}

fn ambiguous(indices: Vec<usize>, labels: &[String]) -> ParseError {
    ParseError::AmbiguousAction(indices.into_iter().map(|i| labels[i].clone()).collect())
}
