use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::ExperimentError;
use crate::agent::{EpisodeRecord, StepRecord};
use crate::env::Game;
use crate::eval::{
    aggregate_dimensions, behavior_metrics, normalize_table, strategy_delta, Aggregates, BehaviorMetrics, CellKey,
    CellTable, EvalError, RunSummary, WeightMatrix,
};
use crate::log::{read_log, LogError, LogEvent, RunStart};
use crate::strategy::StrategyKind;

/// One parsed run log.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub path: PathBuf,
    pub run: usize,
    pub start: RunStart,
    /// Episodes that finished without aborting.
    pub episodes: Vec<EpisodeRecord>,
    pub aborted: bool,
}

impl LoadedRun {
    /// Model label, suffixed with the environment variant when there is one.
    pub fn label(&self) -> String {
        if self.start.variant.is_empty() {
            self.start.model.clone()
        } else {
            format!("{} [{}]", self.start.model, self.start.variant)
        }
    }

    pub fn mean_score(&self) -> Option<f64> {
        let scores: Vec<f64> = self.episodes.iter().filter_map(|e| e.score.map(|s| s.value)).collect();
        (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
    }
}

fn load_run(path: &Path) -> Result<LoadedRun, LogError> {
    let records = read_log(path)?;
    let corrupt = |line: usize, message: &str| LogError::CorruptLog {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    };
    let first = records.first().ok_or_else(|| corrupt(1, "empty log"))?;
    let LogEvent::RunStart(start) = &first.event else {
        return Err(corrupt(1, "first record is not run_start"));
    };
    let mut run = LoadedRun {
        path: path.to_path_buf(),
        run: first.run,
        start: start.clone(),
        episodes: Vec::new(),
        aborted: false,
    };
    let game = start.env.game;
    let mut open: BTreeMap<usize, Vec<StepRecord>> = BTreeMap::new();
    for (i, record) in records.iter().enumerate().skip(1) {
        if record.run != run.run {
            return Err(corrupt(i + 1, "run index changes within one log"));
        }
        match &record.event {
            LogEvent::Step { episode, record } => open.entry(*episode).or_default().push(record.clone()),
            LogEvent::EpisodeEnd {
                episode,
                horizon,
                aborted,
                ..
            } => {
                let steps = open.remove(episode).unwrap_or_default();
                if *aborted {
                    run.aborted = true;
                } else {
                    run.episodes
                        .push(EpisodeRecord::from_steps(*episode, game, *horizon, steps));
                }
            }
            LogEvent::RunEnd { aborted, .. } => run.aborted |= *aborted,
            _ => {}
        }
    }
    Ok(run)
}

/// Every `*.jsonl` file directly inside `dir`, in name order.
pub fn load_runs(dir: &Path) -> Result<Vec<LoadedRun>, ExperimentError> {
    let entries = fs::read_dir(dir).map_err(|source| ExperimentError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| load_run(p).map_err(ExperimentError::from))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    /// Defaults to the shipped calibration matrix.
    pub weights: Option<WeightMatrix>,
    /// Fail with `MissingBaseline` instead of skipping the delta tables.
    pub require_delta: bool,
    /// Where to write CSV and markdown; nothing is written when unset.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorRow {
    pub model: String,
    pub strategy: StrategyKind,
    pub game: Game,
    pub variant: String,
    pub runs: usize,
    pub episodes: usize,
    pub metrics: BehaviorMetrics,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub summaries: Vec<RunSummary>,
    pub raw: CellTable,
    pub normalized: CellTable,
    pub degenerate_games: Vec<Game>,
    pub delta: Option<CellTable>,
    pub aggregates: Option<Aggregates>,
    pub behavior: Vec<BehaviorRow>,
    pub markdown: String,
}

type GroupKey = (String, StrategyKind, Game);

/// Builds every table from the run logs in `log_dirs`.
pub fn report(log_dirs: &[PathBuf], options: &ReportOptions) -> Result<Report, ExperimentError> {
    let mut runs = Vec::new();
    for dir in log_dirs {
        runs.extend(load_runs(dir)?);
    }
    if runs.is_empty() {
        return Err(ExperimentError::Config("no run logs found".into()));
    }

    let mut groups: BTreeMap<GroupKey, Vec<&LoadedRun>> = BTreeMap::new();
    for r in &runs {
        groups
            .entry((r.label(), r.start.strategy, r.start.env.game))
            .or_default()
            .push(r);
    }

    let mut summaries = Vec::new();
    let mut raw = CellTable::new();
    let mut behavior = Vec::new();
    for ((label, strategy, game), members) in &groups {
        let complete: Vec<&LoadedRun> = members.iter().copied().filter(|r| !r.aborted).collect();
        let means: Vec<f64> = complete.iter().filter_map(|r| r.mean_score()).collect();
        if means.is_empty() {
            log::warn!("{label} / {strategy} / {game}: no complete runs");
            continue;
        }
        let summary = RunSummary::new(label.clone(), *strategy, *game, means)?;
        raw.insert(CellKey::new(label.clone(), *strategy, *game), summary.raw_mean());
        summaries.push(summary);
        if matches!(game, Game::Hanoi | Game::Messenger) {
            let episodes: Vec<EpisodeRecord> = complete.iter().flat_map(|r| r.episodes.iter().cloned()).collect();
            behavior.push(BehaviorRow {
                model: complete[0].start.model.clone(),
                strategy: *strategy,
                game: *game,
                variant: complete[0].start.variant.clone(),
                runs: complete.len(),
                episodes: episodes.len(),
                metrics: behavior_metrics(&episodes, *game)?,
            });
        }
    }

    let (normalized, degenerate_games) = normalize_table(&raw);
    let delta = match strategy_delta(&normalized) {
        Ok(d) => Some(d),
        Err(e @ EvalError::MissingBaseline { .. }) if !options.require_delta => {
            log::warn!("skipping delta tables: {e}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let aggregates = match &delta {
        Some(d) => {
            let games: Vec<Game> = Game::ALL
                .into_iter()
                .filter(|g| d.keys().any(|k| k.game == *g))
                .collect();
            let weights = options.weights.clone().unwrap_or_default().restricted_to(&games);
            Some(aggregate_dimensions(d, &weights)?)
        }
        None => None,
    };

    let mut report = Report {
        summaries,
        raw,
        normalized,
        degenerate_games,
        delta,
        aggregates,
        behavior,
        markdown: String::new(),
    };
    report.markdown = render_markdown(&report);
    if let Some(dir) = &options.out_dir {
        write_tables(&report, dir)?;
    }
    Ok(report)
}

fn fmt2(x: f64) -> String {
    format!("{x:.2}")
}

fn pct(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.1}%"))
}

fn render_markdown(report: &Report) -> String {
    let mut md = String::new();
    let games: Vec<Game> = Game::ALL
        .into_iter()
        .filter(|g| report.summaries.iter().any(|s| s.game == *g))
        .collect();

    md.push_str("## Scores (median [min-max] of per-run mean scores)\n\n| Model | Strategy |");
    for g in &games {
        let _ = write!(md, " {} |", g.title());
    }
    md.push_str("\n|---|---|");
    md.push_str(&"---|".repeat(games.len()));
    md.push('\n');
    let mut rows: BTreeMap<(String, StrategyKind), BTreeMap<Game, &RunSummary>> = BTreeMap::new();
    for s in &report.summaries {
        rows.entry((s.model.clone(), s.strategy)).or_default().insert(s.game, s);
    }
    for ((model, strategy), cells) in &rows {
        let _ = write!(md, "| {model} | {} |", strategy.label());
        for g in &games {
            match cells.get(g) {
                Some(s) => {
                    let flag = if s.stats.even_count { "*" } else { "" };
                    let _ = write!(
                        md,
                        " {} [{}-{}]{flag} |",
                        fmt2(s.stats.median),
                        fmt2(s.stats.min),
                        fmt2(s.stats.max)
                    );
                }
                None => md.push_str(" - |"),
            }
        }
        md.push('\n');
    }
    if report.summaries.iter().any(|s| s.stats.even_count) {
        md.push_str("\n\\* even run count: lower-middle median.\n");
    }

    if let Some(delta) = &report.delta {
        md.push_str("\n## Normalized score x and delta to Base\n\n| Model | Strategy | Game | r | x | δ |\n|---|---|---|---|---|---|\n");
        for (k, r) in &report.raw {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {:.3} | {:+.3} |",
                k.model,
                k.strategy.label(),
                k.game.title(),
                fmt2(*r),
                report.normalized[k],
                delta[k]
            );
        }
    }
    if let Some(agg) = &report.aggregates {
        md.push_str("\n## Challenge dimensions (Δ)\n\n| Model | Strategy | Dimension | Δ |\n|---|---|---|---|\n");
        for (k, v) in &agg.values {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {v:+.3} |",
                k.model,
                k.strategy.label(),
                k.dimension
            );
        }
        if !agg.omitted.is_empty() {
            let _ = writeln!(md, "\nOmitted (zero weight): {}", agg.omitted.join(", "));
        }
    }

    for (game, header) in [(Game::Hanoi, "G | D | I"), (Game::Messenger, "P | G | C")] {
        let rows: Vec<&BehaviorRow> = report.behavior.iter().filter(|b| b.game == game).collect();
        if rows.is_empty() {
            continue;
        }
        let _ = write!(
            md,
            "\n## {} behavior\n\n| Model | Strategy | Variant | Runs | {header} |\n|---|---|---|---|---|---|---|\n",
            game.title()
        );
        for b in rows {
            let m = &b.metrics;
            let cells = match game {
                Game::Hanoi => format!(
                    "{} | {} | {}",
                    pct(m.goal_rate),
                    m.avg_disks.map_or("-".into(), |d| format!("{d:.1}")),
                    pct(m.invalid_rate)
                ),
                _ => format!(
                    "{} | {} | {}",
                    pct(m.pickup_rate),
                    pct(m.goal_rate),
                    pct(m.collision_rate)
                ),
            };
            let variant = if b.variant.is_empty() { "none" } else { &b.variant };
            let _ = writeln!(
                md,
                "| {} | {} | {variant} | {} | {cells} |",
                b.model,
                b.strategy.label(),
                b.runs
            );
        }
    }
    md
}

fn write_tables(report: &Report, dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let write = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<(), ExperimentError> {
        let path = dir.join(name);
        let wrap = |e: csv::Error| ExperimentError::Io {
            path: path.clone(),
            source: std::io::Error::other(e),
        };
        let mut w = csv::Writer::from_path(&path).map_err(wrap)?;
        w.write_record(header).map_err(wrap)?;
        for row in rows {
            w.write_record(&row).map_err(wrap)?;
        }
        w.flush().map_err(|source| ExperimentError::Io {
            path: path.clone(),
            source,
        })
    };

    write(
        "table_scores.csv",
        &[
            "model",
            "strategy",
            "game",
            "runs",
            "min",
            "median",
            "max",
            "even_count",
        ],
        report
            .summaries
            .iter()
            .map(|s| {
                vec![
                    s.model.clone(),
                    s.strategy.to_string(),
                    s.game.to_string(),
                    s.per_run_means.len().to_string(),
                    s.stats.min.to_string(),
                    s.stats.median.to_string(),
                    s.stats.max.to_string(),
                    s.stats.even_count.to_string(),
                ]
            })
            .collect(),
    )?;
    write(
        "table_normalized.csv",
        &["model", "strategy", "game", "r", "x", "delta"],
        report
            .raw
            .iter()
            .map(|(k, r)| {
                vec![
                    k.model.clone(),
                    k.strategy.to_string(),
                    k.game.to_string(),
                    r.to_string(),
                    report.normalized[k].to_string(),
                    report.delta.as_ref().map_or(String::new(), |d| d[k].to_string()),
                ]
            })
            .collect(),
    )?;
    if let Some(agg) = &report.aggregates {
        write(
            "table_dimensions.csv",
            &["model", "strategy", "dimension", "delta"],
            agg.values
                .iter()
                .map(|(k, v)| {
                    vec![
                        k.model.clone(),
                        k.strategy.to_string(),
                        k.dimension.clone(),
                        v.to_string(),
                    ]
                })
                .collect(),
        )?;
    }
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    write(
        "table_hanoi.csv",
        &["model", "strategy", "variant", "runs", "episodes", "G", "D", "I"],
        report
            .behavior
            .iter()
            .filter(|b| b.game == Game::Hanoi)
            .map(|b| {
                vec![
                    b.model.clone(),
                    b.strategy.to_string(),
                    b.variant.clone(),
                    b.runs.to_string(),
                    b.episodes.to_string(),
                    opt(b.metrics.goal_rate),
                    opt(b.metrics.avg_disks),
                    opt(b.metrics.invalid_rate),
                ]
            })
            .collect(),
    )?;
    write(
        "table_messenger.csv",
        &["model", "strategy", "variant", "runs", "episodes", "P", "G", "C"],
        report
            .behavior
            .iter()
            .filter(|b| b.game == Game::Messenger)
            .map(|b| {
                vec![
                    b.model.clone(),
                    b.strategy.to_string(),
                    b.variant.clone(),
                    b.runs.to_string(),
                    b.episodes.to_string(),
                    opt(b.metrics.pickup_rate),
                    opt(b.metrics.goal_rate),
                    opt(b.metrics.collision_rate),
                ]
            })
            .collect(),
    )?;
    let path = dir.join("report.md");
    fs::write(&path, &report.markdown).map_err(|source| ExperimentError::Io { path, source })
}
