//! End-to-end harness tests on small budgets: training-loop arithmetic,
//! metrics determinism, checkpoint evaluation, and every method's loop.

use std::path::PathBuf;

use l2e_core::envs::EnvId;
use l2e_core::harness::eval::evaluate_checkpoint;
use l2e_core::harness::train::CKPT_FILE;
use l2e_core::harness::{
    emit_plots, train, train_single, ExperimentConfig, HerCfg, MethodId, ReplayStrategyCfg,
};
use l2e_core::learner::LearnerConfig;
use l2e_core::replay::HerStrategy;

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("l2e-harness-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn tiny_learner() -> LearnerConfig {
    LearnerConfig {
        batch: 8,
        hidden: vec![8, 8],
        ..LearnerConfig::default()
    }
}

#[test]
fn smoke_l2e_buffer_arithmetic_matches_append_pattern() {
    // ten full episodes with one replay plan each: every episode appends its
    // 250 raw transitions plus 250 relabeled ones
    let dir = tmp_dir("smoke");
    let cfg = ExperimentConfig {
        method: MethodId::L2e,
        env: EnvId::PushBasic,
        replay: ReplayStrategyCfg::Uniform { n: 1 },
        learner: tiny_learner(),
        agents: 1,
        eval_rollouts: 1,
        eval_interval: 10_000,
        total_steps: 2_500,
        seed_base: 12,
        warmup_steps: 1_000_000, // random actions throughout
        updates_per_step: 0.0,
        buffer_capacity: 100_000,
        save_buffer: true,
        ..ExperimentConfig::default()
    };
    let artifacts = train(&cfg, &dir).unwrap();
    assert_eq!(artifacts.agents.len(), 1);
    let buffer_path = dir.join("agent_00").join("buffer.bin");
    let mut reader = std::io::BufReader::new(std::fs::File::open(&buffer_path).unwrap());
    let buffer = l2e_core::replay::ReplayBuffer::load(&mut reader).unwrap();
    assert_eq!(
        buffer.len(),
        10 * 250 * 2,
        "10 episodes x 250 steps x (1 raw + 1 relabeled)"
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn identical_config_and_seed_reproduce_metrics_files() {
    let cfg = ExperimentConfig {
        method: MethodId::L2e,
        env: EnvId::Maze,
        replay: ReplayStrategyCfg::Biased { n: 2, m: 4 },
        learner: tiny_learner(),
        agents: 1,
        eval_rollouts: 2,
        eval_interval: 300,
        total_steps: 600,
        seed_base: 5,
        warmup_steps: 200,
        updates_per_step: 0.1,
        buffer_capacity: 10_000,
        ..ExperimentConfig::default()
    };
    let dir_a = tmp_dir("det-a");
    let dir_b = tmp_dir("det-b");
    train(&cfg, &dir_a).unwrap();
    train(&cfg, &dir_b).unwrap();
    let read = |d: &PathBuf| std::fs::read(d.join("agent_00").join("metrics.csv")).unwrap();
    assert_eq!(read(&dir_a), read(&dir_b), "metrics files must be byte-identical");
    // checkpoints must match too
    let ckpt = |d: &PathBuf| std::fs::read(d.join("agent_00").join(CKPT_FILE)).unwrap();
    assert_eq!(ckpt(&dir_a), ckpt(&dir_b));
    std::fs::remove_dir_all(&dir_a).unwrap();
    std::fs::remove_dir_all(&dir_b).unwrap();
}

#[test]
fn checkpoints_evaluate_and_aggregate_matches_recount() {
    let dir = tmp_dir("eval");
    let cfg = ExperimentConfig {
        method: MethodId::L2e,
        env: EnvId::Maze,
        replay: ReplayStrategyCfg::Uniform { n: 1 },
        learner: tiny_learner(),
        agents: 1,
        eval_rollouts: 2,
        eval_interval: 500,
        total_steps: 500,
        seed_base: 3,
        warmup_steps: 100,
        updates_per_step: 0.05,
        buffer_capacity: 10_000,
        ..ExperimentConfig::default()
    };
    train(&cfg, &dir).unwrap();
    let ckpt = dir.join("agent_00").join(CKPT_FILE);
    let (report, method) = evaluate_checkpoint(&ckpt, 30, 9).unwrap();
    assert_eq!(method, MethodId::L2e);
    assert_eq!(report.successes.len(), 30, "default evaluation protocol runs 30 rollouts");
    let recount = report.successes.iter().filter(|&&s| s).count() as f64 / 30.0;
    assert_eq!(report.rate(), recount);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn every_method_trains_and_emits_plot_series() {
    let mut written_runs = Vec::new();
    for (tag, method, env) in [
        ("her", MethodId::Her, EnvId::Maze),
        ("subgoal", MethodId::SubgoalRl, EnvId::Maze),
        ("plan", MethodId::Plan, EnvId::Maze),
        ("plan-im", MethodId::PlanIm, EnvId::PushBasic),
    ] {
        let dir = tmp_dir(tag);
        let cfg = ExperimentConfig {
            method,
            env,
            her: HerCfg { strategy: HerStrategy::Future, k: 1 },
            learner: tiny_learner(),
            agents: 2,
            eval_rollouts: 2,
            eval_interval: 300,
            total_steps: 300,
            seed_base: 1,
            warmup_steps: 100,
            updates_per_step: 0.05,
            buffer_capacity: 10_000,
            im_episodes: 2,
            ..ExperimentConfig::default()
        };
        let artifacts = train(&cfg, &dir).unwrap();
        assert_eq!(artifacts.agents.len(), 2);
        for agent in 0..2 {
            let metrics = dir.join(format!("agent_{agent:02}")).join("metrics.csv");
            let rows = l2e_core::harness::read_metrics(&metrics).unwrap();
            assert_eq!(rows.len(), 2, "{tag}: rows at steps 0 and 300");
            assert_eq!(rows[0].step, 0);
            assert_eq!(rows[1].step, 300);
        }
        written_runs.push(dir);
    }

    let plot_dir = tmp_dir("plots");
    let files = emit_plots(&written_runs, &plot_dir).unwrap();
    // one series per run plus the render stub
    assert_eq!(files.len(), written_runs.len() + 1);
    for run in &written_runs {
        std::fs::remove_dir_all(run).unwrap();
    }
    std::fs::remove_dir_all(&plot_dir).unwrap();
}

#[test]
fn strategy_configurations_from_the_ablation_are_expressible() {
    for (n, m) in [(10, 1000), (100, 1000)] {
        let text = format!(
            "method=l2e\nreplay.strategy=bias\nreplay.n={n}\nreplay.m={m}\nrun.total_steps=1000"
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.replay, ReplayStrategyCfg::Biased { n, m });
    }
    let uni = ExperimentConfig::parse(
        "method=l2e\nreplay.strategy=uniform\nreplay.n=1000\nrun.total_steps=1000",
    )
    .unwrap();
    assert_eq!(uni.replay, ReplayStrategyCfg::Uniform { n: 1000 });
}

#[test]
fn single_agent_entry_point_matches_multi_agent_layout() {
    let dir = tmp_dir("single");
    let cfg = ExperimentConfig {
        method: MethodId::Plan,
        env: EnvId::Maze,
        agents: 3,
        eval_rollouts: 2,
        eval_interval: 100,
        total_steps: 100,
        seed_base: 40,
        ..ExperimentConfig::default()
    };
    let summary = train_single(&cfg, 2, &dir).unwrap();
    assert_eq!(summary.agent, 2);
    assert_eq!(summary.seed, 42);
    assert!(dir.join("agent_02").join("metrics.csv").is_file());
    std::fs::remove_dir_all(&dir).unwrap();
}
