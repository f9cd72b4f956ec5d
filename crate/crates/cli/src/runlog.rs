//! JSON run logs: a batch index (`meta_log.json`) plus, per run, one
//! per-agent-per-round decision log (`agent_log_<run_id>.json`) and one
//! per-round world log (`game_log_<run_id>.json`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use gridswarm_core::agent::Action;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

/// One entry of the batch index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaLogEntry {
    pub schema_version: u32,
    pub model: String,
    pub num_agents: u32,
    pub max_round: u32,
    pub task: String,
    pub seed: u64,
}

/// One agent decision: what it saw, what it was asked, what it answered,
/// and what that parsed to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub round: u32,
    pub agent: u32,
    pub view: String,
    pub prompt: String,
    pub response: String,
    pub action: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPos {
    pub id: u32,
    /// Column index (j).
    pub x: i32,
    /// Row index (i).
    pub y: i32,
}

/// World state at the start of one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub grid: Vec<Vec<String>>,
    pub score: f64,
    pub agents: Vec<AgentPos>,
    /// Messages broadcast during the preceding round.
    pub messages: Vec<String>,
}

/// All logs of one completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub run_id: String,
    pub meta: MetaLogEntry,
    pub agent_records: Vec<AgentRecord>,
    pub round_records: Vec<RoundRecord>,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("run {run_id} not present in meta_log.json")]
    UnknownRun { run_id: String },
    #[error("agent_log[{index}].{field}: {problem}")]
    BadAgentRecord {
        index: usize,
        field: &'static str,
        problem: String,
    },
    #[error("game_log[{index}].{field}: {problem}")]
    BadRoundRecord {
        index: usize,
        field: &'static str,
        problem: String,
    },
}

fn meta_path(dir: &Path) -> PathBuf {
    dir.join("meta_log.json")
}

fn agent_path(dir: &Path, run_id: &str) -> PathBuf {
    dir.join(format!("agent_log_{run_id}.json"))
}

fn game_path(dir: &Path, run_id: &str) -> PathBuf {
    dir.join(format!("game_log_{run_id}.json"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LogError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| LogError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text).map_err(|source| LogError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write a whole batch. The meta index is keyed by run id; each run gets
/// its two array files. On any failure every file written by this call is
/// removed again, so a batch directory is never half-written.
pub fn write_batch(dir: &Path, runs: &[RunLog]) -> Result<(), LogError> {
    fs::create_dir_all(dir).map_err(|source| LogError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        let meta: BTreeMap<&str, &MetaLogEntry> = runs
            .iter()
            .map(|r| (r.run_id.as_str(), &r.meta))
            .collect();
        let mp = meta_path(dir);
        write_json(&mp, &meta)?;
        written.push(mp);
        for run in runs {
            let ap = agent_path(dir, &run.run_id);
            write_json(&ap, &run.agent_records)?;
            written.push(ap);
            let gp = game_path(dir, &run.run_id);
            write_json(&gp, &run.round_records)?;
            written.push(gp);
        }
        Ok(())
    })();
    if result.is_err() {
        for p in &written {
            let _ = fs::remove_file(p);
        }
    }
    result
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, LogError> {
    let text = fs::read_to_string(path).map_err(|source| LogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| LogError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn validate(run: &RunLog) -> Result<(), LogError> {
    for (index, rec) in run.agent_records.iter().enumerate() {
        if Action::parse(&rec.action).is_none() {
            return Err(LogError::BadAgentRecord {
                index,
                field: "action",
                problem: format!("{:?} is not a valid action", rec.action),
            });
        }
        if rec.round == 0 || rec.round > run.meta.max_round {
            return Err(LogError::BadAgentRecord {
                index,
                field: "round",
                problem: format!("round {} outside 1..={}", rec.round, run.meta.max_round),
            });
        }
    }
    for (index, rec) in run.round_records.iter().enumerate() {
        let h = rec.grid.len() as i32;
        let w = rec.grid.first().map(|r| r.len()).unwrap_or(0) as i32;
        if rec.grid.iter().any(|row| row.len() as i32 != w) {
            return Err(LogError::BadRoundRecord {
                index,
                field: "grid",
                problem: "ragged rows".into(),
            });
        }
        for a in &rec.agents {
            if a.y < 0 || a.y >= h || a.x < 0 || a.x >= w {
                return Err(LogError::BadRoundRecord {
                    index,
                    field: "agents",
                    problem: format!("agent {} at ({}, {}) outside {h}x{w} grid", a.id, a.y, a.x),
                });
            }
            let tok = &rec.grid[a.y as usize][a.x as usize];
            let expect_plain = a.id.to_string();
            let expect_lit = format!("${}", a.id);
            if *tok != expect_plain && *tok != expect_lit {
                return Err(LogError::BadRoundRecord {
                    index,
                    field: "agents",
                    problem: format!(
                        "agent {} claims cell ({}, {}) but grid shows {tok:?}",
                        a.id, a.y, a.x
                    ),
                });
            }
        }
    }
    Ok(())
}

/// Load and validate one run of a batch directory.
pub fn load_run(dir: &Path, run_id: &str) -> Result<RunLog, LogError> {
    let meta_all: BTreeMap<String, MetaLogEntry> = read_json(&meta_path(dir))?;
    let meta = meta_all
        .get(run_id)
        .cloned()
        .ok_or_else(|| LogError::UnknownRun {
            run_id: run_id.to_string(),
        })?;
    let agent_records: Vec<AgentRecord> = read_json(&agent_path(dir, run_id))?;
    let round_records: Vec<RoundRecord> = read_json(&game_path(dir, run_id))?;
    let run = RunLog {
        run_id: run_id.to_string(),
        meta,
        agent_records,
        round_records,
    };
    validate(&run)?;
    Ok(run)
}

/// Run ids listed in a batch's meta index, sorted.
pub fn list_runs(dir: &Path) -> Result<Vec<String>, LogError> {
    let meta_all: BTreeMap<String, MetaLogEntry> = read_json(&meta_path(dir))?;
    Ok(meta_all.keys().cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_run(run_id: &str) -> RunLog {
        RunLog {
            run_id: run_id.to_string(),
            meta: MetaLogEntry {
                schema_version: SCHEMA_VERSION,
                model: "scripted:stay".into(),
                num_agents: 1,
                max_round: 2,
                task: "Pursuit".into(),
                seed: 7,
            },
            agent_records: vec![
                AgentRecord {
                    round: 1,
                    agent: 0,
                    view: "v".into(),
                    prompt: "p".into(),
                    response: "ACTION: STAY".into(),
                    action: "STAY".into(),
                    message: String::new(),
                },
                AgentRecord {
                    round: 2,
                    agent: 0,
                    view: "v".into(),
                    prompt: "p".into(),
                    response: "ACTION: UP".into(),
                    action: "UP".into(),
                    message: "hi".into(),
                },
            ],
            round_records: vec![
                RoundRecord {
                    grid: vec![vec![".".into(), "0".into()], vec![".".into(), ".".into()]],
                    score: 0.0,
                    agents: vec![AgentPos { id: 0, x: 1, y: 0 }],
                    messages: vec![],
                },
                RoundRecord {
                    grid: vec![vec![".".into(), ".".into()], vec![".".into(), "0".into()]],
                    score: 0.0,
                    agents: vec![AgentPos { id: 0, x: 1, y: 1 }],
                    messages: vec!["hi".into()],
                },
            ],
        }
    }

    #[test]
    fn roundtrip_write_load() {
        let dir = tempfile::tempdir().unwrap();
        let run = sample_run("r1");
        write_batch(dir.path(), std::slice::from_ref(&run)).unwrap();
        let loaded = load_run(dir.path(), "r1").unwrap();
        assert_eq!(loaded, run);
        assert_eq!(list_runs(dir.path()).unwrap(), vec!["r1".to_string()]);
    }

    #[test]
    fn empty_batch_meta_is_empty_object() {
        let dir = tempfile::tempdir().unwrap();
        write_batch(dir.path(), &[]).unwrap();
        let text = fs::read_to_string(dir.path().join("meta_log.json")).unwrap();
        assert_eq!(text.trim(), "{}");
    }

    #[test]
    fn cardinality_two_rounds() {
        let run = sample_run("r1");
        assert_eq!(run.agent_records.len(), 2);
        assert_eq!(run.round_records.len(), 2);
    }

    #[test]
    fn unknown_run_and_truncated_json() {
        let dir = tempfile::tempdir().unwrap();
        write_batch(dir.path(), &[sample_run("r1")]).unwrap();
        assert!(matches!(
            load_run(dir.path(), "nope"),
            Err(LogError::UnknownRun { .. })
        ));
        fs::write(agent_path(dir.path(), "r1"), "[{\"round\": 1,").unwrap();
        assert!(matches!(
            load_run(dir.path(), "r1"),
            Err(LogError::Json { .. })
        ));
    }

    #[test]
    fn validation_names_field_and_index() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = sample_run("r1");
        run.agent_records[1].action = "TELEPORT".into();
        write_batch(dir.path(), &[run]).unwrap();
        let err = load_run(dir.path(), "r1").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("agent_log[1].action"), "{msg}");

        let mut run = sample_run("r2");
        run.round_records[0].agents[0].x = 0; // grid shows "." there
        write_batch(dir.path(), &[run]).unwrap();
        let err = load_run(dir.path(), "r2").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("game_log[0].agents"), "{msg}");
    }
}
