use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand_chacha::ChaCha8Rng;

use super::EnvError;

const BUILTIN: &str = include_str!("../../assets/lexicon.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Message,
    Goal,
    Enemy,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Message, Role::Goal, Role::Enemy];

    /// Name used when synonyms are disabled.
    pub fn literal(self) -> &'static str {
        match self {
            Role::Message => "message",
            Role::Goal => "goal",
            Role::Enemy => "enemy",
        }
    }
}

impl FromStr for Role {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "message" => Ok(Role::Message),
            "goal" => Ok(Role::Goal),
            "enemy" => Ok(Role::Enemy),
            other => Err(EnvError::Lexicon(format!("unknown role `{other}`"))),
        }
    }
}

/// Surface names per Messenger role, loaded from `role<TAB>surface_name` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    names: BTreeMap<Role, Vec<String>>,
}

impl Lexicon {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled lexicon is well formed")
    }

    pub fn from_file(path: &Path) -> Result<Self, EnvError> {
        let text = std::fs::read_to_string(path).map_err(|e| EnvError::Lexicon(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, EnvError> {
        let mut names: BTreeMap<Role, Vec<String>> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (role, name) = line
                .split_once('\t')
                .ok_or_else(|| EnvError::Lexicon(format!("line {}: expected role<TAB>name", lineno + 1)))?;
            let name = name.trim();
            if name.is_empty() {
                return Err(EnvError::Lexicon(format!("line {}: empty name", lineno + 1)));
            }
            names.entry(role.parse()?).or_default().push(name.to_string());
        }
        for role in Role::ALL {
            if names.get(&role).is_none_or(Vec::is_empty) {
                return Err(EnvError::Lexicon(format!("no names for role `{}`", role.literal())));
            }
        }
        Ok(Self { names })
    }

    pub fn names(&self, role: Role) -> &[String] {
        &self.names[&role]
    }

    /// Picks one surface name per role.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> [String; 3] {
        Role::ALL.map(|role| self.names(role).choose(rng).expect("roles are non-empty").clone())
    }

    /// Role whose surface names include `name`.
    pub fn role_of(&self, name: &str) -> Option<Role> {
        Role::ALL
            .into_iter()
            .find(|r| r.literal() == name || self.names(*r).iter().any(|n| n == name))
    }
}
