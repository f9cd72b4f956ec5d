//! CSV export of round metrics.

use std::path::Path;

use anyhow::{Context, Result};
use gridswarm_core::metrics::{RoundMetrics, METRIC_NAMES};

/// Write one run's metrics: one row per round plus a trailing summary row
/// of per-field means. Absent values (unconfigured metrics) export as
/// empty cells.
pub fn write_metrics_csv(
    path: &Path,
    rounds: &[RoundMetrics],
    summary: Option<&RoundMetrics>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    let mut header = vec!["round".to_string()];
    header.extend(METRIC_NAMES.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    let fmt = |v: f64| {
        if v.is_nan() {
            String::new()
        } else {
            format!("{v}")
        }
    };
    for (idx, m) in rounds.iter().enumerate() {
        let mut row = vec![(idx + 1).to_string()];
        row.extend(m.values().map(fmt));
        w.write_record(&row)?;
    }
    if let Some(s) = summary {
        let mut row = vec!["summary".to_string()];
        row.extend(s.values().map(fmt));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridswarm_core::gen::EnvConfig;
    use gridswarm_core::TaskKind;

    use crate::runner::{run_episode, Backend, ScriptedPolicy};

    #[test]
    fn csv_has_round_rows_and_summary() {
        let cfg = EnvConfig { max_round: 5, ..Default::default() };
        let backend = Backend::Scripted(ScriptedPolicy::RandomWalk);
        let r = run_episode(TaskKind::Foraging, 3, cfg, &backend, "x").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        write_metrics_csv(&path, &r.round_metrics, r.summary.as_ref()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + r.round_metrics.len() + 1);
        assert!(lines[0].starts_with("round,directional_entropy,"));
        assert!(lines.last().unwrap().starts_with("summary,"));
        // info_homogeneity column exports empty.
        assert!(lines[1].ends_with(","));
    }
}
