use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use dyngame_core::eval::WeightMatrix;
use dyngame_core::experiment::{report, run_experiment, ExperimentConfig, ExperimentError, ReportOptions, Settings};

#[derive(Parser)]
#[command(
    name = "dyngame",
    version,
    about = "Run language-model agents on text games and build score tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play runs × episodes and write one JSONL log per run plus summary CSVs.
    Run(Box<RunArgs>),
    /// Build score, delta, dimension and behavior tables from run logs.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// bandit, rps, hanoi or messenger.
    #[arg(long)]
    game: Option<String>,
    /// base, reflection, reflection_oracle or reflection_planner.
    #[arg(long)]
    strategy: Option<String>,
    /// http, scripted or random.
    #[arg(long)]
    backend: Option<String>,
    /// Chat-completions base URL (http backend).
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Response script, one reply per line (scripted backend).
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Steps per episode; defaults per game.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// Master seed; run and episode seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Hanoi disk count (2 or 3).
    #[arg(long)]
    disks: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    reward_shaping: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    show_valid_actions: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    no_synonyms: Option<bool>,
    /// Output directory for logs and summaries.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Runs executed concurrently.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Cap on concurrent HTTP requests across all runs.
    #[arg(long)]
    max_in_flight: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_tokens: Option<u32>,
    /// Request timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// HTTP retries after the first attempt.
    #[arg(long)]
    max_retries: Option<u32>,
    /// Re-queries after an unparsable reply before a random legal action is used.
    #[arg(long)]
    retry_budget: Option<u32>,
    /// Cap on rendered history characters; oldest steps are dropped first.
    #[arg(long)]
    history_cap: Option<usize>,
    /// Opponent distribution before shuffling, e.g. 0.5,0.25,0.25.
    #[arg(long)]
    rps_bias: Option<String>,
    /// Messenger grid, e.g. 5x5.
    #[arg(long)]
    grid: Option<String>,
    /// Plan by exhaustive simulation instead of asking the model (testing only).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    exact_planner: Option<bool>,
}

impl RunArgs {
    fn settings(&self) -> Result<Settings, ExperimentError> {
        let mut s = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        let flags: [(&str, Option<String>); 26] = [
            ("game", self.game.clone()),
            ("strategy", self.strategy.clone()),
            ("backend", self.backend.clone()),
            ("endpoint", self.endpoint.clone()),
            ("model", self.model.clone()),
            ("script", self.script.as_ref().map(|p| p.display().to_string())),
            ("episodes", self.episodes.map(|v| v.to_string())),
            ("steps", self.steps.map(|v| v.to_string())),
            ("runs", self.runs.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("disks", self.disks.map(|v| v.to_string())),
            ("reward_shaping", self.reward_shaping.map(|v| v.to_string())),
            ("show_valid_actions", self.show_valid_actions.map(|v| v.to_string())),
            ("no_synonyms", self.no_synonyms.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("parallelism", self.parallelism.map(|v| v.to_string())),
            ("temperature", self.temperature.map(|v| v.to_string())),
            ("max_tokens", self.max_tokens.map(|v| v.to_string())),
            ("timeout", self.timeout.map(|v| v.to_string())),
            ("max_retries", self.max_retries.map(|v| v.to_string())),
            ("retry_budget", self.retry_budget.map(|v| v.to_string())),
            ("history_cap", self.history_cap.map(|v| v.to_string())),
            ("rps_bias", self.rps_bias.clone()),
            ("grid", self.grid.clone()),
            ("exact_planner", self.exact_planner.map(|v| v.to_string())),
            ("max_in_flight", self.max_in_flight.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                s.set(key, v)?;
            }
        }
        Ok(s)
    }
}

#[derive(Args)]
struct ReportArgs {
    /// Directories holding run_*.jsonl logs.
    #[arg(required = true)]
    log_dirs: Vec<PathBuf>,
    /// Game-by-dimension weight CSV; defaults to the shipped calibration matrix.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Where to write the CSV tables and report.md.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail when a Base strategy cell is missing instead of skipping deltas.
    #[arg(long)]
    require_delta: bool,
}

fn run(args: &RunArgs) -> Result<(), ExperimentError> {
    let config = ExperimentConfig::from_settings(&args.settings()?)?;
    let outcome = run_experiment(&config)?;
    for r in &outcome.runs {
        let mean = r.mean_score().map_or("-".to_string(), |m| format!("{m:.2}"));
        println!(
            "run {}: {} episodes, mean score {mean}{}",
            r.run,
            r.episode_scores.len(),
            if r.aborted() { " (aborted)" } else { "" }
        );
    }
    if let Some(s) = &outcome.summary {
        println!(
            "{} / {} / {}: min {:.2}, median {:.2}, max {:.2}",
            s.model, s.strategy, s.game, s.stats.min, s.stats.median, s.stats.max
        );
    }
    println!("logs in {}", outcome.output_dir.display());
    match outcome.runs.into_iter().find_map(|r| r.error) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn build_report(args: &ReportArgs) -> Result<(), ExperimentError> {
    let weights = args.weights.as_deref().map(WeightMatrix::from_file).transpose()?;
    let options = ReportOptions {
        weights,
        require_delta: args.require_delta,
        out_dir: args.out.clone(),
    };
    let report = report(&args.log_dirs, &options)?;
    print!("{}", report.markdown);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args).context("run failed"),
        Command::Report(args) => build_report(args).context("report failed"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<ExperimentError>()
                .map_or(1, ExperimentError::exit_code);
            log::debug!("exiting with {code}");
            ExitCode::from(code as u8)
        }
    }
}
