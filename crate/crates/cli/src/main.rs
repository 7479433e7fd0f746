//! `l2e` command line: train experiment configs, evaluate checkpoints,
//! inspect planner output, and emit plot data from finished runs.
//!
//! Worker parallelism is capped by the `L2E_THREADS` environment variable.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use l2e_core::harness::{emit_plots, eval::evaluate_checkpoint, train, ExperimentConfig};
use l2e_core::parallel::init_thread_pool;
use l2e_core::planmdp::PlanMdp;
use l2e_core::EnvId;

#[derive(Parser)]
#[command(name = "l2e", about = "Plan-conditioned reinforcement learning lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every agent of an experiment config into an output directory.
    Train {
        /// Key=value config file (see README for the full key list).
        #[arg(long)]
        config: PathBuf,
        /// Base seed; agent k trains with seed + k. Overrides run.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (one agent_XX subdirectory per agent).
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on fresh tasks with the deterministic policy.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        /// Number of evaluation rollouts.
        #[arg(long, default_value_t = 30)]
        episodes: usize,
        /// Seed for the evaluation task stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample a task for an environment and print the serialized plan.
    InspectPlan {
        /// Environment id: push_basic, push_obstacle, or maze.
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional plan subsampling density.
        #[arg(long)]
        density: Option<usize>,
    },
    /// Aggregate run directories into plot-ready series files.
    Plot {
        /// One or more run directories produced by `train`.
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    init_thread_pool();
    match Cli::parse().command {
        Command::Train { config, seed, out } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = ExperimentConfig::parse(&text)?;
            if let Some(seed) = seed {
                cfg.seed_base = seed;
            }
            eprintln!(
                "training {} on {} for {} steps x {} agents -> {}",
                cfg.method.as_str(),
                cfg.env.as_str(),
                cfg.total_steps,
                cfg.agents,
                out.display()
            );
            let artifacts = train(&cfg, &out)?;
            for agent in &artifacts.agents {
                println!(
                    "agent {:02} seed {} final success {:.3}",
                    agent.agent, agent.seed, agent.final_success
                );
            }
            println!("mean success {:.3}", artifacts.mean_success());
        }
        Command::Eval { ckpt, episodes, seed } => {
            let (report, method) = evaluate_checkpoint(&ckpt, episodes, seed)?;
            for (i, ok) in report.successes.iter().enumerate() {
                println!("rollout {i:02}: {}", if *ok { "success" } else { "failure" });
            }
            println!(
                "{}: {}/{} rollouts succeeded, rate {:.3}",
                method.as_str(),
                report.successes.iter().filter(|&&s| s).count(),
                report.successes.len(),
                report.rate()
            );
        }
        Command::InspectPlan { env, seed, density } => {
            let env_id = EnvId::parse(&env)?;
            let mut mdp = PlanMdp::new(env_id, Default::default(), 0.5, density, seed)?;
            let (_, plan, _) = mdp.sample_task()?;
            print!("{}", plan.to_text());
        }
        Command::Plot { runs, out } => {
            if runs.is_empty() {
                bail!("need at least one run directory");
            }
            let written = emit_plots(&runs, &out)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}
