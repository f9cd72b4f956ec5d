//! `gridswarm` — run, sweep, replay, and analyze grid-world swarm
//! benchmark episodes.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use gridswarm_cli::config::RunConfig;
use gridswarm_cli::export::write_metrics_csv;
use gridswarm_cli::replay::{replay_run, replay_terminal};
use gridswarm_cli::runlog::{list_runs, load_run, write_batch};
use gridswarm_cli::runner::{format_table, run_batch, Backend};

#[derive(Parser)]
#[command(name = "gridswarm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured benchmark batch and write logs + metrics.
    Run {
        /// TOML run configuration.
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Run the batch across a parameter sweep of agent counts and view
    /// sizes, printing one summary table per setting.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// Agent counts to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![8u32, 12, 16])]
        agents: Vec<u32>,
        /// View sizes to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![3u32, 5, 7])]
        views: Vec<u32>,
    },
    /// Animate a logged run in the terminal.
    Replay {
        /// Batch directory containing meta_log.json.
        #[arg(short, long)]
        dir: PathBuf,
        /// Run id; omit to list available runs.
        #[arg(short, long)]
        run_id: Option<String>,
        /// Frames per second; 0 steps on Enter.
        #[arg(long, default_value_t = 2.0)]
        fps: f64,
    },
    /// Recompute metrics from a logged run and write them as CSV.
    Metrics {
        #[arg(short, long)]
        dir: PathBuf,
        #[arg(short, long)]
        run_id: String,
        /// Output CSV path; defaults to metrics_<run_id>.csv in the batch
        /// directory.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn execute_batch(cfg: &RunConfig) -> Result<()> {
    let backend = match cfg.backend.as_str() {
        "llm" => Backend::Llm(cfg.endpoint_config()?),
        _ => Backend::Scripted(cfg.scripted_policy()?),
    };
    let outcome = run_batch(
        &cfg.task_list(),
        &cfg.seeds,
        cfg.repeat,
        cfg.env_config(),
        &backend,
    )?;
    let logs: Vec<_> = outcome.results.iter().map(|r| r.log.clone()).collect();
    write_batch(&cfg.output_dir, &logs)?;
    for r in &outcome.results {
        let path = cfg
            .output_dir
            .join(format!("metrics_{}.csv", r.log.run_id));
        write_metrics_csv(&path, &r.round_metrics, r.summary.as_ref())?;
    }
    print!("{}", format_table(&outcome.rows, &backend.model_name()));
    println!("wrote {} runs to {}", logs.len(), cfg.output_dir.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            execute_batch(&cfg)
        }
        Command::Sweep {
            config,
            agents,
            views,
        } => {
            let base = RunConfig::load(&config)?;
            for &n in &agents {
                for &k in &views {
                    let mut cfg = base.clone();
                    cfg.num_agents = n;
                    cfg.view_size = k;
                    cfg.output_dir = base.output_dir.join(format!("n{n}_k{k}"));
                    println!("--- agents = {n}, view = {k} ---");
                    execute_batch(&cfg)?;
                }
            }
            Ok(())
        }
        Command::Replay { dir, run_id, fps } => match run_id {
            Some(id) => replay_terminal(&dir, &id, fps, &mut std::io::stdout()),
            None => {
                for id in list_runs(&dir)? {
                    println!("{id}");
                }
                Ok(())
            }
        },
        Command::Metrics { dir, run_id, out } => {
            let log = load_run(&dir, &run_id)?;
            let replayed = replay_run(&log, gridswarm_core::gen::EnvConfig::default())
                .context("replaying run")?;
            let path = out.unwrap_or_else(|| dir.join(format!("metrics_{run_id}.csv")));
            write_metrics_csv(&path, &replayed.round_metrics, replayed.summary.as_ref())?;
            println!(
                "recomputed {} rounds, final score {:.2}, wrote {}",
                replayed.round_metrics.len(),
                replayed.final_score,
                path.display()
            );
            Ok(())
        }
    }
}
