//! Score tables: run summaries, per-game min-max normalization, deltas to the
//! Base strategy, weighted challenge-dimension aggregates and behavior metrics.

mod behavior;
mod weights;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use behavior::{behavior_metrics, BehaviorMetrics};
pub use weights::{WeightMatrix, ALLOWED_WEIGHTS, DEFAULT_WEIGHTS_CSV, DIMENSIONS};

use crate::env::Game;
use crate::strategy::StrategyKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no values to summarize")]
    EmptyInput,
    #[error("no Base strategy cell for model `{model}` on {game}")]
    MissingBaseline { model: String, game: Game },
    #[error("no delta for model `{model}`, strategy `{strategy}` on {game}, which has weight in `{dimension}`")]
    MissingDelta {
        model: String,
        strategy: StrategyKind,
        game: Game,
        dimension: String,
    },
    #[error("episodes from {found} mixed into a {expected} summary")]
    MixedGames { expected: Game, found: Game },
    #[error("weights: {0}")]
    Weights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    /// Set when the run count is even and `median` is the lower middle value.
    pub even_count: bool,
}

/// Min, middle and max of the per-run means. Even counts take the lower middle.
pub fn summarize_runs(per_run_means: &[f64]) -> Result<SummaryStats, EvalError> {
    if per_run_means.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut sorted = per_run_means.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(SummaryStats {
        min: sorted[0],
        median: sorted[(n - 1) / 2],
        max: sorted[n - 1],
        even_count: n.is_multiple_of(2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub model: String,
    pub strategy: StrategyKind,
    pub game: Game,
    pub per_run_means: Vec<f64>,
    #[serde(flatten)]
    pub stats: SummaryStats,
}

impl RunSummary {
    pub fn new(
        model: impl Into<String>,
        strategy: StrategyKind,
        game: Game,
        per_run_means: Vec<f64>,
    ) -> Result<Self, EvalError> {
        let stats = summarize_runs(&per_run_means)?;
        Ok(Self {
            model: model.into(),
            strategy,
            game,
            per_run_means,
            stats,
        })
    }

    /// Raw mean score r: mean over runs of the per-run mean.
    pub fn raw_mean(&self) -> f64 {
        self.per_run_means.iter().sum::<f64>() / self.per_run_means.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    /// All inputs were equal; every output is 0.
    pub degenerate: bool,
}

/// x = (r - min) / (max - min).
pub fn minmax_normalize(values: &[f64]) -> Normalized {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || max == min {
        return Normalized {
            values: vec![0.0; values.len()],
            degenerate: true,
        };
    }
    Normalized {
        values: values.iter().map(|r| (r - min) / (max - min)).collect(),
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub model: String,
    pub strategy: StrategyKind,
    pub game: Game,
}

impl CellKey {
    pub fn new(model: impl Into<String>, strategy: StrategyKind, game: Game) -> Self {
        Self {
            model: model.into(),
            strategy,
            game,
        }
    }
}

pub type CellTable = BTreeMap<CellKey, f64>;

/// Normalizes each game over all of its (model, strategy) cells. Returns the
/// games whose cells were all equal.
pub fn normalize_table(raw: &CellTable) -> (CellTable, Vec<Game>) {
    let mut out = CellTable::new();
    let mut degenerate = Vec::new();
    for game in Game::ALL {
        let keys: Vec<&CellKey> = raw.keys().filter(|k| k.game == game).collect();
        if keys.is_empty() {
            continue;
        }
        let values: Vec<f64> = keys.iter().map(|k| raw[*k]).collect();
        let norm = minmax_normalize(&values);
        if norm.degenerate {
            log::warn!("{game}: all cells equal, normalized to 0");
            degenerate.push(game);
        }
        for (k, x) in keys.into_iter().zip(norm.values) {
            out.insert(k.clone(), x);
        }
    }
    (out, degenerate)
}

/// δ = x[m,s,g] - x[m,Base,g].
pub fn strategy_delta(x: &CellTable) -> Result<CellTable, EvalError> {
    x.iter()
        .map(|(k, v)| {
            let base = CellKey::new(k.model.clone(), StrategyKind::Base, k.game);
            let b = x.get(&base).ok_or_else(|| EvalError::MissingBaseline {
                model: k.model.clone(),
                game: k.game,
            })?;
            Ok((k.clone(), v - b))
        })
        .collect()
}

/// Σ w·δ / Σ w, or `None` when every weight is zero.
pub fn weighted_mean(deltas: &[f64], weights: &[f64]) -> Option<f64> {
    assert_eq!(deltas.len(), weights.len(), "one weight per delta");
    let denom: f64 = weights.iter().sum();
    if denom == 0.0 {
        return None;
    }
    Some(deltas.iter().zip(weights).map(|(d, w)| d * w).sum::<f64>() / denom)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DimensionKey {
    pub model: String,
    pub strategy: StrategyKind,
    pub dimension: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    pub values: BTreeMap<DimensionKey, f64>,
    /// Dimensions with zero total weight, left out of `values`.
    pub omitted: Vec<String>,
}

/// Δ[m,s,d] = Σ_g w[g,d]·δ[m,s,g] / Σ_g w[g,d] for every (model, strategy)
/// present in `delta`.
pub fn aggregate_dimensions(delta: &CellTable, w: &WeightMatrix) -> Result<Aggregates, EvalError> {
    let mut pairs: Vec<(String, StrategyKind)> = delta.keys().map(|k| (k.model.clone(), k.strategy)).collect();
    pairs.dedup();
    let mut values = BTreeMap::new();
    let mut omitted = Vec::new();
    for (d, dimension) in w.dimensions().iter().enumerate() {
        let games: Vec<(Game, f64)> = w
            .games()
            .map(|g| (g, w.weight(g, d)))
            .filter(|(_, x)| *x != 0.0)
            .collect();
        if games.is_empty() {
            log::warn!("dimension `{dimension}` has zero total weight; omitted");
            omitted.push(dimension.clone());
            continue;
        }
        for (model, strategy) in &pairs {
            let mut ds = Vec::with_capacity(games.len());
            for (g, _) in &games {
                let key = CellKey::new(model.clone(), *strategy, *g);
                let v = delta.get(&key).ok_or_else(|| EvalError::MissingDelta {
                    model: model.clone(),
                    strategy: *strategy,
                    game: *g,
                    dimension: dimension.clone(),
                })?;
                ds.push(*v);
            }
            let ws: Vec<f64> = games.iter().map(|(_, x)| *x).collect();
            let value = weighted_mean(&ds, &ws).expect("nonzero weights");
            values.insert(
                DimensionKey {
                    model: model.clone(),
                    strategy: *strategy,
                    dimension: dimension.clone(),
                },
                value,
            );
        }
    }
    Ok(Aggregates { values, omitted })
}
