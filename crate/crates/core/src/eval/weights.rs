use std::collections::BTreeMap;
use std::path::Path;

use super::EvalError;
use crate::env::Game;

pub const DIMENSIONS: [&str; 9] = [
    "Long Text Understanding",
    "Reasoning",
    "Instruction Following",
    "Planning",
    "Generalization",
    "Understanding the Odds",
    "Learning from Interactions",
    "Error/Mistake Handling",
    "Spatial Reasoning",
];

pub const ALLOWED_WEIGHTS: [f64; 4] = [0.0, 0.33, 0.67, 1.0];

/// Shipped defaults. These are calibration data, not ground truth.
pub const DEFAULT_WEIGHTS_CSV: &str = include_str!("../../assets/weights.csv");

/// w[g,d]: how strongly game g exercises dimension d.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    dimensions: Vec<String>,
    rows: BTreeMap<Game, Vec<f64>>,
}

impl Default for WeightMatrix {
    fn default() -> Self {
        Self::parse(DEFAULT_WEIGHTS_CSV).expect("shipped weights are valid")
    }
}

impl WeightMatrix {
    pub fn new(dimensions: Vec<String>, rows: BTreeMap<Game, Vec<f64>>) -> Result<Self, EvalError> {
        for (game, row) in &rows {
            if row.len() != dimensions.len() {
                return Err(EvalError::Weights(format!(
                    "{game}: {} weights for {} dimensions",
                    row.len(),
                    dimensions.len()
                )));
            }
            if let Some(w) = row
                .iter()
                .find(|w| !ALLOWED_WEIGHTS.iter().any(|a| (*w - a).abs() < 1e-9))
            {
                return Err(EvalError::Weights(format!(
                    "{game}: weight {w} not in {{0, 0.33, 0.67, 1}}"
                )));
            }
        }
        Ok(Self { dimensions, rows })
    }

    /// Header `game,<dimension>...`, then one row per game. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let err = |e: csv::Error| EvalError::Weights(e.to_string());
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(err)?.clone();
        if header.get(0) != Some("game") {
            return Err(EvalError::Weights("first column must be `game`".into()));
        }
        let dimensions: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut rows = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(err)?;
            let game: Game = record[0].parse().map_err(|e| EvalError::Weights(format!("{e}")))?;
            let row = record
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| EvalError::Weights(format!("{game}: bad weight `{v}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if rows.insert(game, row).is_some() {
                return Err(EvalError::Weights(format!("{game} listed twice")));
            }
        }
        Self::new(dimensions, rows)
    }

    pub fn from_file(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|e| EvalError::Weights(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn dimensions(&self) -> &[String] {
        &self.dimensions
    }

    pub fn games(&self) -> impl Iterator<Item = Game> + '_ {
        self.rows.keys().copied()
    }

    /// Zero for games without a row.
    pub fn weight(&self, game: Game, dimension: usize) -> f64 {
        self.rows.get(&game).map_or(0.0, |r| r[dimension])
    }

    /// Keeps only the rows for `games`.
    pub fn restricted_to(&self, games: &[Game]) -> Self {
        Self {
            dimensions: self.dimensions.clone(),
            rows: self
                .rows
                .iter()
                .filter(|(g, _)| games.contains(g))
                .map(|(g, r)| (*g, r.clone()))
                .collect(),
        }
    }
}
