//! Replay: re-simulate a logged run from its seed and recorded decisions,
//! verifying the log against the regenerated world, recomputing metrics,
//! and rendering ASCII frames.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use gridswarm_core::agent::{Action, ActionIntent};
use gridswarm_core::gen::EnvConfig;
use gridswarm_core::grid::render_grid;
use gridswarm_core::metrics::{
    compute_round_metrics, run_summary, ExplorationTracker, RoundMetrics,
};
use gridswarm_core::{Episode, TaskKind};

use crate::runlog::{load_run, RunLog};

/// Metrics and final score recomputed purely from a run's logs.
#[derive(Debug)]
pub struct ReplayedRun {
    pub round_metrics: Vec<RoundMetrics>,
    pub summary: Option<RoundMetrics>,
    pub final_score: f64,
}

/// Environment dimensions are not part of the log schema; replay assumes
/// the batch's configured geometry (defaults unless overridden).
pub fn env_config_for(log: &RunLog, base: EnvConfig) -> EnvConfig {
    EnvConfig {
        num_agents: log.meta.num_agents,
        max_round: log.meta.max_round,
        ..base
    }
}

/// Re-simulate the run from (task, seed) plus the logged per-round
/// decisions. Every regenerated start-of-round grid must match the logged
/// one; any divergence is reported with its round index.
pub fn replay_run(log: &RunLog, base: EnvConfig) -> Result<ReplayedRun> {
    let task = TaskKind::parse(&log.meta.task)
        .with_context(|| format!("meta.task {:?} is not a known task", log.meta.task))?;
    let cfg = env_config_for(log, base);
    let mut ep = Episode::new(task, log.meta.seed, cfg).context("regenerating environment")?;

    // Group logged decisions by round.
    let mut by_round: BTreeMap<u32, BTreeMap<u32, ActionIntent>> = BTreeMap::new();
    for rec in &log.agent_records {
        let action = Action::parse(&rec.action)
            .with_context(|| format!("agent_log action {:?} invalid", rec.action))?;
        by_round.entry(rec.round).or_default().insert(
            rec.agent,
            ActionIntent {
                action,
                message: rec.message.clone(),
                parse_failure: false,
            },
        );
    }

    let mut tracker = ExplorationTracker::new();
    let mut round_metrics = Vec::new();
    for (idx, logged) in log.round_records.iter().enumerate() {
        let round = idx as u32 + 1;
        if ep.done() {
            bail!("game_log[{idx}]: log has more rounds than the episode allows");
        }
        let snapshot = ep.snapshot();
        if snapshot.grid != logged.grid {
            bail!("game_log[{idx}].grid: regenerated state diverges from log at round {round}");
        }
        if (snapshot.score - logged.score).abs() > 1e-9 {
            bail!(
                "game_log[{idx}].score: regenerated {} vs logged {}",
                snapshot.score,
                logged.score
            );
        }
        let intents = by_round.remove(&round).unwrap_or_default();
        let outcome = ep.step(&intents);
        tracker.record(outcome.positions_before.values());
        tracker.record(outcome.positions_after.values());
        round_metrics.push(compute_round_metrics(&outcome.to_round_record(), &tracker));
    }

    let summary = run_summary(&round_metrics);
    Ok(ReplayedRun {
        round_metrics,
        summary,
        final_score: ep.score(),
    })
}

/// Render one logged grid with coordinate labels.
pub fn render_logged_grid(grid: &[Vec<String>]) -> String {
    let rows: Vec<i32> = (0..grid.len() as i32).collect();
    let cols: Vec<i32> = (0..grid.first().map(|r| r.len()).unwrap_or(0) as i32).collect();
    render_grid(&rows, &cols, grid, &|_i, _j, t: &String| t.clone())
}

/// Print a run's rounds to the terminal. `fps = 0` steps on Enter;
/// otherwise frames advance automatically.
pub fn replay_terminal(dir: &Path, run_id: &str, fps: f64, out: &mut dyn Write) -> Result<()> {
    let log = load_run(dir, run_id)?;
    for (idx, rec) in log.round_records.iter().enumerate() {
        writeln!(out, "Run {run_id} — round {} — score {:.2}", idx + 1, rec.score)?;
        writeln!(out, "{}", render_logged_grid(&rec.grid))?;
        if !rec.messages.is_empty() {
            writeln!(out, "messages: {}", rec.messages.join(" | "))?;
        }
        writeln!(out)?;
        out.flush()?;
        if idx + 1 < log.round_records.len() {
            if fps > 0.0 {
                std::thread::sleep(Duration::from_secs_f64(1.0 / fps));
            } else {
                let mut line = String::new();
                std::io::stdin().read_line(&mut line)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::{run_episode, Backend, ScriptedPolicy};

    #[test]
    fn replay_reproduces_live_metrics_exactly() {
        let cfg = EnvConfig { max_round: 10, ..Default::default() };
        let backend = Backend::Scripted(ScriptedPolicy::ChattyWalk);
        let live = run_episode(TaskKind::Pursuit, 42, cfg, &backend, "x").unwrap();
        let replayed = replay_run(&live.log, cfg).unwrap();
        assert_eq!(replayed.round_metrics, live.round_metrics);
        assert_eq!(replayed.final_score, live.final_score);
    }

    #[test]
    fn tampered_grid_detected_with_round_index() {
        let cfg = EnvConfig { max_round: 4, ..Default::default() };
        let backend = Backend::Scripted(ScriptedPolicy::RandomWalk);
        let mut live = run_episode(TaskKind::Foraging, 6, cfg, &backend, "x").unwrap();
        live.log.round_records[2].grid[3][3] = "W".into();
        let err = replay_run(&live.log, cfg).unwrap_err().to_string();
        assert!(err.contains("game_log[2]"), "{err}");
    }
}
