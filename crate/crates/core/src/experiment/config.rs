//! Experiment configuration and its flat `key = value` file format.
//!
//! Keys use the command-line flag names with dashes or underscores; `#` starts
//! a comment. Known keys:
//!
//! ```text
//! game, strategy, backend, endpoint, model, episodes, steps, runs, seed,
//! disks, reward-shaping, show-valid-actions, no-synonyms, out, parallelism,
//! script, temperature, max-tokens, timeout, max-retries, retry-backoff-ms,
//! max-in-flight, retry-budget, history-cap, rps-bias, grid, exact-planner
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::ExperimentError;
use crate::agent::AgentConfig;
use crate::backend::{BackendConfig, BackendKind};
use crate::env::{EnvConfig, Game};
use crate::strategy::StrategyKind;

pub const KNOWN_KEYS: [&str; 27] = [
    "game",
    "strategy",
    "backend",
    "endpoint",
    "model",
    "episodes",
    "steps",
    "runs",
    "seed",
    "disks",
    "reward_shaping",
    "show_valid_actions",
    "no_synonyms",
    "out",
    "parallelism",
    "script",
    "temperature",
    "max_tokens",
    "timeout",
    "max_retries",
    "retry_backoff_ms",
    "max_in_flight",
    "retry_budget",
    "history_cap",
    "rps_bias",
    "grid",
    "exact_planner",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub strategy: StrategyKind,
    pub backend: BackendConfig,
    pub runs: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub parallelism: usize,
    pub agent: AgentConfig,
    pub exact_planner: bool,
}

impl ExperimentConfig {
    pub fn new(env: EnvConfig, strategy: StrategyKind, backend: BackendConfig, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            env,
            strategy,
            backend,
            runs: 3,
            master_seed: 0,
            output_dir: output_dir.into(),
            parallelism: 1,
            agent: AgentConfig::default(),
            exact_planner: false,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.env
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        self.backend
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        if self.runs == 0 {
            return Err(ExperimentError::Config("runs must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(ExperimentError::Config("parallelism must be at least 1".into()));
        }
        Ok(())
    }

    /// Builds a config from flat key/value settings; absent keys take defaults.
    pub fn from_settings(settings: &Settings) -> Result<Self, ExperimentError> {
        let game: Game = settings
            .get("game")
            .ok_or_else(|| ExperimentError::Config("`game` is required".into()))?
            .parse()
            .map_err(|e| ExperimentError::Config(format!("{e}")))?;
        let mut env = EnvConfig::new(game);
        if let Some(v) = settings.parsed("steps")? {
            env.steps_per_episode = v;
        }
        if let Some(v) = settings.parsed("episodes")? {
            env.episodes = v;
        }
        if let Some(v) = settings.parsed("disks")? {
            env.hanoi_disks = v;
        }
        if let Some(v) = settings.flag("reward_shaping")? {
            env.reward_shaping = v;
        }
        if let Some(v) = settings.flag("show_valid_actions")? {
            env.show_valid_actions = v;
        }
        if let Some(v) = settings.flag("no_synonyms")? {
            env.use_synonyms = !v;
        }
        if let Some(v) = settings.get("rps_bias") {
            env.rps_bias = parse_bias(v)?;
        }
        if let Some(v) = settings.get("grid") {
            let (r, c) = v
                .split_once('x')
                .and_then(|(r, c)| Some((r.trim().parse().ok()?, c.trim().parse().ok()?)))
                .ok_or_else(|| ExperimentError::Config(format!("grid must look like 5x5, got `{v}`")))?;
            env.grid_rows = r;
            env.grid_cols = c;
        }

        let strategy = match settings.get("strategy") {
            Some(s) => s.parse().map_err(ExperimentError::Config)?,
            None => StrategyKind::Base,
        };

        let mut backend = BackendConfig::default();
        if let Some(k) = settings.get("backend") {
            backend.kind = k
                .parse::<BackendKind>()
                .map_err(|e| ExperimentError::Config(e.to_string()))?;
        }
        backend.endpoint_url = settings.get("endpoint").map(str::to_string);
        backend.model_name = settings.get("model").map(str::to_string);
        backend.script_path = settings.get("script").map(PathBuf::from);
        if let Some(v) = settings.parsed("temperature")? {
            backend.temperature = v;
        }
        if let Some(v) = settings.parsed("max_tokens")? {
            backend.max_tokens = v;
        }
        if let Some(v) = settings.parsed("timeout")? {
            backend.request_timeout_secs = v;
        }
        if let Some(v) = settings.parsed("max_retries")? {
            backend.max_retries = v;
        }
        if let Some(v) = settings.parsed("retry_backoff_ms")? {
            backend.retry_backoff_ms = v;
        }
        if let Some(v) = settings.parsed("max_in_flight")? {
            backend.max_in_flight = v;
        }

        let mut config = ExperimentConfig::new(env, strategy, backend, settings.get("out").unwrap_or("results"));
        if let Some(v) = settings.parsed("runs")? {
            config.runs = v;
        }
        if let Some(v) = settings.parsed("seed")? {
            config.master_seed = v;
        }
        config.env.seed = config.master_seed;
        if let Some(v) = settings.parsed("parallelism")? {
            config.parallelism = v;
        }
        if let Some(v) = settings.parsed("retry_budget")? {
            config.agent.retry_budget = v;
        }
        if let Some(v) = settings.parsed("history_cap")? {
            config.agent.history_char_cap = Some(v);
        }
        if let Some(v) = settings.flag("exact_planner")? {
            config.exact_planner = v;
        }
        config.validate()?;
        Ok(config)
    }
}

fn parse_bias(v: &str) -> Result<[f64; 3], ExperimentError> {
    let parts: Vec<f64> = v
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| ExperimentError::Config(format!("rps_bias must be three numbers, got `{v}`")))?;
    parts
        .try_into()
        .map_err(|_| ExperimentError::Config(format!("rps_bias must be three numbers, got `{v}`")))
}

/// Flat key/value settings. Later inserts override earlier ones, so file
/// values are loaded first and command-line flags applied on top.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize_key(key: &str) -> String {
    key.trim()
        .trim_start_matches("--")
        .replace('-', "_")
        .to_ascii_lowercase()
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut settings = Settings::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split_once('#').map_or(line, |(l, _)| l).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ExperimentError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            settings.set(key, value.trim())?;
        }
        Ok(settings)
    }

    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ExperimentError> {
        let key = normalize_key(key);
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ExperimentError::Config(format!("unknown setting `{key}`")));
        }
        self.values.insert(key, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize_key(key)).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ExperimentError> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| ExperimentError::Config(format!("bad value `{v}` for `{key}`")))
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, ExperimentError> {
        self.get(key)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "" | "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(ExperimentError::Config(format!("bad boolean `{v}` for `{key}`"))),
            })
            .transpose()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of run `i`, derived from the master seed.
pub fn run_seed(master_seed: u64, run: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(run as u64))
}

/// Seed of episode `e` within a run.
pub fn episode_seed(run_seed: u64, episode: usize) -> u64 {
    splitmix64(run_seed ^ splitmix64(!(episode as u64)))
}
